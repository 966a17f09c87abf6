from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from lib.fattening import SymmetricBody
from lib.geometry import AffineMap, HalfspacePolytope, PointPolytope


class HalfspaceModel(BaseModel):
    normal: List[float]
    offset: float


class PolytopeModel(BaseModel):
    """{"dim": d, "points": [...]} or {"dim": d, "halfspaces": [...]}"""
    dim: int = Field(ge=1)
    points: Optional[List[List[float]]] = None
    halfspaces: Optional[List[HalfspaceModel]] = None

    @model_validator(mode="after")
    def _one_representation(self) -> "PolytopeModel":
        if (self.points is None) == (self.halfspaces is None):
            raise ValueError("exactly one of 'points' or 'halfspaces' is required")
        rows = self.points if self.points is not None else [h.normal for h in self.halfspaces]
        for i, row in enumerate(rows):
            if len(row) != self.dim:
                raise ValueError(f"row {i} has {len(row)} coordinates, expected {self.dim}")
        return self

    def to_polytope(self) -> Union[PointPolytope, HalfspacePolytope]:
        if self.points is not None:
            return PointPolytope(np.array(self.points, dtype=float).reshape(-1, self.dim))
        return HalfspacePolytope(
            np.array([h.normal for h in self.halfspaces], dtype=float).reshape(-1, self.dim),
            np.array([h.offset for h in self.halfspaces], dtype=float),
        )

    @classmethod
    def from_polytope(cls, P: Union[PointPolytope, HalfspacePolytope]) -> "PolytopeModel":
        if isinstance(P, PointPolytope):
            return cls(dim=P.dim, points=P.points.tolist())
        return cls(dim=P.dim, halfspaces=[HalfspaceModel(normal=n.tolist(), offset=float(b))
                                          for n, b in zip(P.normals, P.offsets)])


class BodyModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    center: List[float]
    generators: List[List[float]]
    lam: float = Field(alias="lambda")

    def to_body(self) -> SymmetricBody:
        return SymmetricBody(np.array(self.center), np.array(self.generators), self.lam)

    @classmethod
    def from_body(cls, body: SymmetricBody) -> "BodyModel":
        return cls(center=body.center.tolist(), generators=body.generators.tolist(), lam=body.lam)


class MapModel(BaseModel):
    matrix: List[List[float]]
    translation: List[float]

    def to_map(self) -> AffineMap:
        return AffineMap(np.array(self.matrix), np.array(self.translation))

    @classmethod
    def from_map(cls, T: AffineMap) -> "MapModel":
        return cls(matrix=T.matrix.tolist(), translation=T.translation.tolist())


class IndexModel(BaseModel):
    """Serialized width index; the kernel refers to rows of the source polytope"""
    eps: float = Field(gt=0, lt=1)
    kernel: List[int]
    body: BodyModel
    map: MapModel


class FrameModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    r: float
    lam: float = Field(alias="lambda")
    beta: float
    alpha: float


class WitnessModel(BaseModel):
    r_star: Optional[List[float]] = None
    direction: Optional[List[float]] = None


class AnswerModel(BaseModel):
    verdict: Literal["Intersecting", "Disjoint"]
    envelope_min: Optional[float] = None
    evaluations: int
    trivial: bool
    frame: FrameModel
    witness: WitnessModel
    timings: Optional[dict] = None


class WidthModel(BaseModel):
    width: float
    direction: List[float]
    timings: Optional[dict] = None


class KernelModel(BaseModel):
    eps: float
    kernel: List[int]
    size: int
    source_size: int
    size_constant: float


class CertificateModel(BaseModel):
    status: Literal["intersecting", "separated"]
    witness: Optional[List[float]] = None
    direction: Optional[List[float]] = None
    gap: Optional[float] = None
    margin: Optional[float] = None


class PairModel(BaseModel):
    A: PolytopeModel
    B: PolytopeModel
    certificate: CertificateModel


class ErrorModel(BaseModel):
    error: str
    message: str
