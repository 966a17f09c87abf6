import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional, Type, Union

from pydantic import BaseModel, ValidationError

from lib.errors import GeometryError, ParseError
from lib.generators import Certificate, PairInstance
from lib.geometry import HalfspacePolytope, PointPolytope
from lib.intersection import ApproxAnswer
from lib.schemas import (
    AnswerModel,
    BodyModel,
    CertificateModel,
    FrameModel,
    IndexModel,
    KernelModel,
    MapModel,
    PairModel,
    PolytopeModel,
    WidthModel,
    WitnessModel,
)
from lib.width_index import WidthIndex, restore


class OutputParser(BaseModel, ABC):
    @abstractmethod
    def parse(self, text: str) -> Any:
        pass


class JsonOutputParser(OutputParser):
    def parse(self, text: str) -> Any:
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"Malformed JSON: {exc.msg}", line=exc.lineno) from exc


class PydanticOutputParser(OutputParser):
    model_class: Type[BaseModel]

    def parse(self, text: str) -> BaseModel:
        data = JsonOutputParser().parse(text)
        try:
            return self.model_class.model_validate(data)
        except ValidationError as exc:
            first = exc.errors()[0]
            field = ".".join(str(part) for part in first["loc"]) or None
            raise ParseError(first["msg"], field=field) from exc


class PolytopeParser(PydanticOutputParser):
    model_class: Type[BaseModel] = PolytopeModel

    def parse(self, text: str) -> Union[PointPolytope, HalfspacePolytope]:
        model: PolytopeModel = super().parse(text)
        try:
            return model.to_polytope()
        except GeometryError as exc:
            raise ParseError(str(exc), field="points" if model.points is not None else "halfspaces") from exc


class PairParser(PydanticOutputParser):
    model_class: Type[BaseModel] = PairModel

    def parse(self, text: str) -> PairModel:
        return super().parse(text)


def render_json(model: BaseModel) -> str:
    """Deterministic JSON text; floats are written with repr so they read back exactly"""
    return json.dumps(model.model_dump(by_alias=True, exclude_none=True), indent=2)


def read_text(path: Union[str, Path]) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"Cannot read {path}: {exc.strerror}") from exc


def load_polytope(path: Union[str, Path]) -> Union[PointPolytope, HalfspacePolytope]:
    return PolytopeParser().parse(read_text(path))


def load_points(path: Union[str, Path]) -> PointPolytope:
    P = load_polytope(path)
    if not isinstance(P, PointPolytope):
        raise ParseError(f"{path} holds halfspaces; points are required here", field="points")
    return P


def polytope_model(P: Union[PointPolytope, HalfspacePolytope]) -> PolytopeModel:
    return PolytopeModel.from_polytope(P)


def index_model(idx: WidthIndex) -> IndexModel:
    return IndexModel(
        eps=idx.eps,
        kernel=idx.kernel_indices.tolist(),
        body=BodyModel.from_body(idx.body),
        map=MapModel.from_map(idx.own_map),
    )


def load_index(path: Union[str, Path], source: PointPolytope) -> WidthIndex:
    model: IndexModel = PydanticOutputParser(model_class=IndexModel).parse(read_text(path))
    try:
        return restore(source, model.eps, model.kernel, model.body.to_body(), model.map.to_map())
    except GeometryError as exc:
        raise ParseError(str(exc), field="kernel") from exc


def kernel_model(idx: WidthIndex) -> KernelModel:
    return KernelModel(eps=idx.eps, kernel=idx.kernel_indices.tolist(), size=len(idx),
                       source_size=idx.source_size, size_constant=idx.size_constant)


def answer_model(answer: ApproxAnswer, timings: Optional[Dict[str, float]] = None) -> AnswerModel:
    frame = answer.frame
    return AnswerModel(
        verdict=answer.verdict.value,
        envelope_min=answer.envelope_min,
        evaluations=answer.evaluations,
        trivial=answer.trivial,
        frame=FrameModel(r=frame.r, lam=frame.lam, beta=frame.beta, alpha=frame.alpha),
        witness=WitnessModel(
            r_star=None if answer.argmin is None else answer.argmin.tolist(),
            direction=None if answer.direction is None else answer.direction.tolist(),
        ),
        timings=timings,
    )


def width_model(width: float, direction, timings: Optional[Dict[str, float]] = None) -> WidthModel:
    return WidthModel(width=width, direction=list(map(float, direction)), timings=timings)


def certificate_model(cert: Certificate) -> CertificateModel:
    return CertificateModel(
        status=cert.status,
        witness=None if cert.witness is None else cert.witness.tolist(),
        direction=None if cert.direction is None else cert.direction.tolist(),
        gap=cert.gap,
        margin=cert.margin,
    )


def pair_model(pair: PairInstance) -> PairModel:
    return PairModel(A=polytope_model(pair.A), B=polytope_model(pair.B),
                     certificate=certificate_model(pair.certificate))


def load_pair(path: Union[str, Path]) -> PairModel:
    return PairParser().parse(read_text(path))
