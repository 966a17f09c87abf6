"""2-D SVG rendering of polytopes (matplotlib, no display needed)"""
import io
import logging
from typing import Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.figure import Figure
from scipy.spatial import ConvexHull, QhullError

from lib.errors import DimensionMismatchError, GeometryError
from lib.geometry import HalfspacePolytope, PointPolytope
from lib.oracles import halfspace_vertices


logger = logging.getLogger(__name__)

Layer = Tuple[Union[PointPolytope, HalfspacePolytope], str]
COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple")

matplotlib.rcParams["svg.hashsalt"] = "polyapprox"


def polygon_vertices(P: Union[PointPolytope, HalfspacePolytope]) -> np.ndarray:
    """Counter-clockwise vertex cycle of a 2-D polytope"""
    if P.dim != 2:
        raise DimensionMismatchError(f"Only 2-D polytopes can be drawn, got dimension {P.dim}")
    if isinstance(P, HalfspacePolytope):
        points = halfspace_vertices(P)
    else:
        points = P.points
    try:
        hull = ConvexHull(points)
        return points[hull.vertices]
    except (QhullError, ValueError):
        logger.debug("degenerate polygon, drawing raw points")
        return points


def svg_render_2d(layers: Sequence[Layer], title: Optional[str] = None) -> str:
    figure = Figure(figsize=(5, 5))
    ax = figure.add_subplot()
    for i, (P, label) in enumerate(layers):
        color = COLORS[i % len(COLORS)]
        try:
            cycle = polygon_vertices(P)
        except GeometryError as exc:
            logger.warning("skipping layer %s: %s", label, exc)
            continue
        closed = np.vstack([cycle, cycle[:1]])
        ax.fill(closed[:, 0], closed[:, 1], color=color, alpha=0.25, label=label)
        ax.plot(closed[:, 0], closed[:, 1], color=color, linewidth=1.0)
        if isinstance(P, PointPolytope):
            ax.scatter(P.points[:, 0], P.points[:, 1], color=color, s=4)
    ax.set_aspect("equal", "datalim")
    if title:
        ax.set_title(title)
    if layers:
        ax.legend(loc="upper right")
    buffer = io.StringIO()
    figure.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()
