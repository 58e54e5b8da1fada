"""Distance tables and their CSV / SVG renderings."""
import csv
import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import matplotlib
from matplotlib.figure import Figure

logger = logging.getLogger(__name__)

DISTANCE_HEADER = ("k", "riemannian", "two_norm")
STAGE_HEADER = ("t", "rho_bound", "observed_ratio")

SVG_RC = {"svg.fonttype": "none", "svg.hashsalt": "riccati-lift"}
SERIES = (("riemannian", "Riemannian distance", "#1f77b4"),
          ("two_norm", "2-norm distance", "#d62728"))


@dataclass(frozen=True)
class DistanceRow:
    k: int
    riemannian: float
    two_norm: float


@dataclass(frozen=True)
class StageRow:
    """``observed_ratio`` is NaN when the denominator is below tolerance; ``rho_bound``
    is NaN for stages that are not strictly contractive."""
    t: int
    rho_bound: float
    observed_ratio: float


@dataclass(frozen=True)
class DistanceTable:
    rows: Tuple[DistanceRow, ...] = ()
    stage_rows: Tuple[StageRow, ...] = ()

    def series(self, name: str) -> List[Tuple[int, float]]:
        return [(r.k, getattr(r, name)) for r in self.rows]


def _fmt(value: float) -> str:
    if isinstance(value, int):
        return str(value)
    if math.isnan(value):
        return ""
    return format(value, ".17g")


def emit_csv(table: DistanceTable, path) -> None:
    """Write the distance section, a blank line, then the lifted-stage section."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(DISTANCE_HEADER)
        for r in table.rows:
            writer.writerow((str(r.k), _fmt(r.riemannian), _fmt(r.two_norm)))
        f.write("\n")
        writer.writerow(STAGE_HEADER)
        for s in table.stage_rows:
            writer.writerow((str(s.t), _fmt(s.rho_bound), _fmt(s.observed_ratio)))
    logger.debug("wrote %s (%d distance rows, %d stage rows)", path, len(table.rows),
                 len(table.stage_rows))


def _plottable(points, log_scale: bool):
    return [(k, v) for k, v in points if math.isfinite(v) and (v > 0.0 or not log_scale)]


def emit_svg(table: DistanceTable, path, log_scale: bool = False) -> None:
    """Line chart of both distance columns against k, saved as SVG.

    Each series is grouped under its column name as SVG id, the legend under
    ``legend``. Text stays text and no date is embedded, so equal tables give
    equal files.
    """
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot()
    for name, label, color in SERIES:
        pts = _plottable(table.series(name), log_scale)
        if not pts:
            continue
        ks, values = zip(*pts)
        line, = ax.plot(ks, values, color=color, linewidth=2, marker="o", markersize=3, label=label)
        line.set_gid(name)
    if log_scale and ax.get_lines():
        ax.set_yscale("log")
    ax.set_xlabel("k")
    ax.set_ylabel("distance (log scale)" if log_scale else "distance")
    ax.grid(True, alpha=0.3)
    if ax.get_lines():
        ax.legend().set_gid("legend")
    fig.tight_layout()
    with matplotlib.rc_context(SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    logger.debug("wrote %s", path)
