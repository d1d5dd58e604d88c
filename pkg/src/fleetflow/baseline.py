"""Reference modes: a fixed-route transit curve and the private-auto point.

The transit estimate assumes bus routes on a uniform square grid with the
fleet spread evenly over them, negligible transfer/dwell times, and walking
at a fixed fraction of vehicle speed (1/10 by default).  Optimizing the
route spacing is a textbook economic-order-quantity tradeoff between walk
time and wait time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

DEFAULT_WALK_SPEED_RATIO = 0.1

#: Mean direct trip time across a unit square with a dense grid, in units of
#: the region-crossing time; also the ride-time term of the transit estimate.
MEAN_TRIP_TIME = 2.0 / 3.0


@dataclass(frozen=True)
class BaselinePoint:
    mode: str
    m: float
    f: float
    spacing: Optional[float] = None


def transit_optimal_spacing(m: float, walk_speed_ratio: float = DEFAULT_WALK_SPEED_RATIO) -> float:
    """Route spacing that balances walk time against headway wait."""
    if m <= 0:
        raise ValueError("fleet size must be positive")
    return math.sqrt(2.0 * walk_speed_ratio / m)


def transit_door_time(spacing: float, m: float,
                      walk_speed_ratio: float = DEFAULT_WALK_SPEED_RATIO) -> float:
    """Un-minimized door-to-door time: walk + wait + ride, at a given spacing."""
    if m <= 0 or spacing <= 0:
        raise ValueError("fleet size and spacing must be positive")
    return spacing / walk_speed_ratio + 2.0 / (m * spacing) + MEAN_TRIP_TIME


def transit_time_ratio(m: float, walk_speed_ratio: float = DEFAULT_WALK_SPEED_RATIO) -> float:
    """Door-to-door over drive time at the optimal spacing; 1 + 6*sqrt(5/m)
    for the default walking speed."""
    if m <= 0:
        raise ValueError("fleet size must be positive")
    return 1.0 + 3.0 * math.sqrt(2.0 / (walk_speed_ratio * m))


def transit_point(m: float, walk_speed_ratio: float = DEFAULT_WALK_SPEED_RATIO) -> BaselinePoint:
    return BaselinePoint(mode="transit", m=m, f=transit_time_ratio(m, walk_speed_ratio),
                         spacing=transit_optimal_spacing(m, walk_speed_ratio))


def auto_point(pi: float) -> BaselinePoint:
    """Private cars in circulation serving the same demand, each at f = 1."""
    if pi < 0:
        raise ValueError("pi must be nonnegative")
    return BaselinePoint(mode="auto", m=MEAN_TRIP_TIME * pi, f=1.0)


class TransitCurve:
    """Baseline generator: one transit point per sampled fleet size."""

    mode = "transit"

    def __init__(self, walk_speed_ratio: float = DEFAULT_WALK_SPEED_RATIO):
        self.walk_speed_ratio = walk_speed_ratio

    def points(self, m_values: Iterable[float]) -> List[BaselinePoint]:
        return [transit_point(m, self.walk_speed_ratio) for m in m_values if m > 0]


class AutoMode:
    """Baseline generator: the single automobile reference point."""

    mode = "auto"

    def __init__(self, pi: float):
        self.pi = pi

    def points(self, m_values: Iterable[float]) -> List[BaselinePoint]:
        return [auto_point(self.pi)]
