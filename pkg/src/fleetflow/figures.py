"""Assemble the standard comparison figures as data, optionally rendered.

Each named figure bundles the flexible-mode tradeoff curves, the fixed-route
transit curve, the automobile point and the combined Pareto frontier for one
demand level.  The data records are the primary artifact; rendering to an
image file is a convenience on top of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .baseline import AutoMode, TransitCurve, auto_point, transit_time_ratio
from .core import DEFAULT_K
from .pareto import FrontierPoint, mode_niches, pareto_frontier
from .steady import PerformanceCurve, performance_curve

FIGURES: Dict[str, float] = {"fig7": 100.0, "fig8a": 1000.0, "fig8b": 10000.0}

_FLEX_MODES: Tuple[Tuple[str, int], ...] = (
    ("taxi", 1), ("shared_a", 2), ("shared_b", 2), ("dar", 2), ("dar", 3), ("dar", 5),
)


def default_m_range(pi: float) -> Tuple[float, float]:
    """Fleet-size span wide enough to show every mode plus the auto point."""
    return (pi / 20.0, 2.0 * pi)


@dataclass
class FigureData:
    name: str
    pi: float
    k: float
    m_range: Tuple[float, float]
    curves: List[PerformanceCurve]
    transit: List[Tuple[float, float]]
    auto: Tuple[float, float]
    frontier: List[FrontierPoint]


def figure_data(name: str, k: float = DEFAULT_K, samples: int = 1000,
                transit_points: int = 200) -> FigureData:
    if name not in FIGURES:
        raise ValueError(f"unknown figure {name!r}; expected one of {sorted(FIGURES)}")
    pi = FIGURES[name]
    m_range = default_m_range(pi)
    curves = [performance_curve(policy, pi, k, c) for policy, c in _FLEX_MODES]
    frontier = pareto_frontier(curves, [TransitCurve(), AutoMode(pi)],
                               m_range=m_range, samples=samples)
    t_grid = np.linspace(m_range[0], m_range[1], transit_points)
    transit = [(float(m), transit_time_ratio(float(m))) for m in t_grid]
    ap = auto_point(pi)
    return FigureData(name=name, pi=pi, k=k, m_range=m_range, curves=curves,
                      transit=transit, auto=(ap.m, ap.f), frontier=frontier)


def figure_records(data: FigureData) -> List[dict]:
    """Flat rows: one per curve point, transit sample, auto point, frontier point."""
    rows: List[dict] = []
    for cv in data.curves:
        for p in cv.valid_points():
            rows.append({"figure": data.name, "series": cv.mode, "n": p.n,
                         "m": p.m, "f": p.f_t, "branch": p.branch})
    for m, f in data.transit:
        rows.append({"figure": data.name, "series": "transit", "n": None,
                     "m": m, "f": f, "branch": None})
    rows.append({"figure": data.name, "series": "auto", "n": None,
                 "m": data.auto[0], "f": data.auto[1], "branch": None})
    for fp in data.frontier:
        rows.append({"figure": data.name, "series": "frontier", "n": None,
                     "m": fp.m, "f": fp.f, "branch": fp.mode})
    return rows


def render_figure(data: FigureData, path: str, f_cap: Optional[float] = 8.0) -> None:
    """Draw the figure with matplotlib and write it to ``path``.

    Efficient branches are solid, inefficient ones dotted, the frontier a
    thick dashed line; the output format follows the file extension.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for ci, cv in enumerate(data.curves):
        pts = cv.valid_points()
        color = colors[ci % len(colors)]
        for branch, style in (("efficient", "-"), ("inefficient", ":")):
            seg = [(p.m, p.f_t) for p in pts if p.branch == branch]
            if not seg:
                continue
            seg.sort()
            xs, ys = zip(*seg)
            label = cv.mode if branch == "efficient" else None
            ax.plot(xs, ys, style, color=color, label=label, linewidth=1.2)
    xs, ys = zip(*data.transit)
    ax.plot(xs, ys, "-.", color="0.4", label="transit", linewidth=1.2)
    ax.plot([data.auto[0]], [data.auto[1]], "ko", label="auto")
    if data.frontier:
        ax.plot([p.m for p in data.frontier], [p.f for p in data.frontier],
                "--", color="black", linewidth=2.2, alpha=0.6, label="frontier")
    ax.set_xlim(data.m_range)
    if f_cap:
        ax.set_ylim(0.0, f_cap)
    ax.set_xlabel("fleet size m")
    ax.set_ylabel("door-to-door time / drive time")
    ax.set_title(f"{data.name}: demand pi = {data.pi:g}")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def figure_niches(data: FigureData):
    return mode_niches(data.frontier)
