"""Multi-modal Pareto frontier over (fleet size, time ratio) and mode niches."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .steady import PerformanceCurve


@dataclass(frozen=True)
class FrontierPoint:
    m: float
    f: float
    mode: str


@dataclass(frozen=True)
class Niche:
    mode: str
    m_lo: float
    m_hi: float

    @property
    def width(self) -> float:
        return self.m_hi - self.m_lo


def dominant_set(points: Sequence[Tuple[float, float, str]]) -> List[FrontierPoint]:
    """Non-dominated subset of (m, f, mode) triples, sorted by m ascending.

    A point is dominated when another has m <= and f <= with one strict.
    Exact (m, f) duplicates keep whichever mode appeared first in the input.
    """
    if not points:
        return []
    order = sorted(range(len(points)), key=lambda ix: (points[ix][0], points[ix][1], ix))
    kept: List[FrontierPoint] = []
    best_f = np.inf
    for ix in order:
        m, f, mode = points[ix]
        if f < best_f:
            kept.append(FrontierPoint(m=float(m), f=float(f), mode=mode))
            best_f = f
    return kept


def sample_curve_f(curve: PerformanceCurve, m_samples: np.ndarray) -> np.ndarray:
    """Best (lowest) f_t the curve offers at each sampled fleet size.

    The curve is parameterized by n and can fold back in m, so each adjacent
    point pair is treated as a segment and interpolated wherever it spans a
    sample; NaN where the curve has no point at all.
    """
    pts = curve.valid_points()
    out = np.full(len(m_samples), np.nan)
    if len(pts) < 1:
        return out
    m = np.array([p.m for p in pts])
    f = np.array([p.f_t for p in pts])
    for a in range(len(pts) - 1):
        m0, m1 = m[a], m[a + 1]
        f0, f1 = f[a], f[a + 1]
        lo, hi = (m0, m1) if m0 <= m1 else (m1, m0)
        inside = (m_samples >= lo) & (m_samples <= hi)
        if not inside.any():
            continue
        if hi - lo < 1e-15:
            cand = np.full(inside.sum(), min(f0, f1))
        else:
            t = (m_samples[inside] - m0) / (m1 - m0)
            cand = f0 + t * (f1 - f0)
        cur = out[inside]
        out[inside] = np.where(np.isnan(cur), cand, np.minimum(cur, cand))
    return out


def pareto_frontier(curves: Iterable[PerformanceCurve] = (),
                    baselines: Iterable = (),
                    m_range: Optional[Tuple[float, float]] = None,
                    samples: int = 1000,
                    extra_points: Sequence[Tuple[float, float, str]] = ()) -> List[FrontierPoint]:
    """Non-dominated set across flexible-mode curves and baseline generators.

    Curves are resampled onto a common fleet-size grid before the dominance
    test; baseline generators contribute their own points on the same grid.
    """
    curves = list(curves)
    baselines = list(baselines)
    extra = list(extra_points)
    if not curves and not baselines and not extra:
        raise ValueError("pareto_frontier needs at least one input")
    if m_range is None:
        spans = [p.m for cv in curves for p in cv.valid_points()]
        spans += [bp.m for gen in baselines for bp in gen.points([1.0])]
        spans += [m for m, _, _ in extra]
        if not spans:
            raise ValueError("no sampleable inputs")
        m_range = (min(spans), max(spans))
    lo, hi = m_range
    if lo <= 0 or hi <= lo:
        raise ValueError("m_range must be positive and increasing")
    m_samples = np.linspace(lo, hi, samples)

    pool: List[Tuple[float, float, str]] = []
    for cv in curves:
        fs = sample_curve_f(cv, m_samples)
        for m, f in zip(m_samples, fs):
            if np.isfinite(f):
                pool.append((float(m), float(f), cv.mode))
    for gen in baselines:
        for bp in gen.points(m_samples):
            if lo <= bp.m <= hi:
                pool.append((bp.m, bp.f, bp.mode))
    pool.extend(extra)
    return dominant_set(pool)


def mode_niches(frontier: Sequence[FrontierPoint]) -> List[Niche]:
    """Maximal contiguous frontier runs per mode, as fleet-size intervals."""
    niches: List[Niche] = []
    for pt in frontier:
        if niches and niches[-1].mode == pt.mode:
            niches[-1] = Niche(mode=pt.mode, m_lo=niches[-1].m_lo, m_hi=pt.m)
        else:
            niches.append(Niche(mode=pt.mode, m_lo=pt.m, m_hi=pt.m))
    return niches


def niche_width(niches: Sequence[Niche], mode: str) -> float:
    """Total fleet-size width of a mode's niches."""
    return sum(nc.width for nc in niches if nc.mode == mode)
