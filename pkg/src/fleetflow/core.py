"""Dimensionless scaling, the nearest-point distance law, and scenario records.

Everything downstream works in intrinsic units: distances are measured so the
service region has unit area and times so vehicles travel at unit speed.  The
only free parameters are then the demand intensity ``pi`` (calls arriving per
region-crossing time) and the fleet size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

#: Distance constant of the nearest-point law for grid-like street networks.
DEFAULT_K = 0.63

#: Dispatch policies understood by the toolkit.
POLICIES = ("taxi", "dar", "shared_a", "shared_b")


class ConfigurationError(ValueError):
    """Invalid scenario or policy/capacity combination."""


class ConsistencyError(ValueError):
    """State and conditioning value disagree beyond tolerance."""


class ModelError(RuntimeError):
    """The steady-state system could not be solved (singular or ill-posed)."""


class InfeasibleStateError(ModelError):
    """The solved state has negative components: no steady state exists here."""


def intrinsic_demand(lam: float, area: float, speed: float) -> float:
    """Demand intensity in intrinsic units: lam * area**1.5 / speed.

    ``lam`` is trips per hour per km^2, ``area`` in km^2, ``speed`` in km/h.
    The result counts calls arriving in the time a vehicle needs to cross
    the region.
    """
    if lam <= 0 or area <= 0 or speed <= 0:
        raise ValueError("intrinsic_demand requires positive lam, area, speed")
    return lam * area ** 1.5 / speed


def rescale_time(t_intrinsic: float, area: float, speed: float) -> float:
    """Convert an intrinsic-unit duration back to hours."""
    if area <= 0 or speed <= 0:
        raise ValueError("rescale_time requires positive area and speed")
    return t_intrinsic * math.sqrt(area) / speed


def rescale_dimensionless(x: float, area: float = 1.0, speed: float = 1.0) -> float:
    """Pass-through for unit-free quantities (fleet sizes, time ratios)."""
    if area <= 0 or speed <= 0:
        raise ValueError("rescale_dimensionless requires positive area and speed")
    return x


def nearest_distance(r: float, k: float = DEFAULT_K) -> float:
    """Expected distance from a random point to the closest of ``r`` points.

    Follows the square-root law k / sqrt(r).  ``r`` may be any positive real;
    the steady-state solver conditions on continuous vehicle counts.
    """
    if r <= 0:
        raise ValueError("nearest_distance diverges for r <= 0; callers must guard")
    if k <= 0:
        raise ValueError("nearest_distance requires k > 0")
    return k / math.sqrt(r)


_POLICY_CAPACITY_RULES = {
    "taxi": lambda c: c == 1,
    "dar": lambda c: c >= 2,
    "shared_a": lambda c: c == 2,
    "shared_b": lambda c: c == 2,
}


def check_policy_capacity(policy: str, c: int) -> None:
    """Raise ConfigurationError unless (policy, c) is a supported combination."""
    if policy not in POLICIES:
        raise ConfigurationError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    if not isinstance(c, int) or isinstance(c, bool):
        raise ConfigurationError(f"capacity must be an integer, got {c!r}")
    if not _POLICY_CAPACITY_RULES[policy](c):
        raise ConfigurationError(f"policy {policy!r} does not support capacity c={c}")


@dataclass(frozen=True)
class Scenario:
    """A dimensionless operating scenario.

    ``raw`` optionally records the physical inputs (lam, area, speed) the
    scenario was derived from; when present it must reproduce ``pi``.
    """

    pi: float
    k: float = DEFAULT_K
    c: int = 1
    policy: str = "taxi"
    raw: Optional[Tuple[float, float, float]] = None

    def __post_init__(self):
        if self.pi <= 0:
            raise ConfigurationError("pi must be positive")
        if self.k <= 0:
            raise ConfigurationError("k must be positive")
        check_policy_capacity(self.policy, self.c)
        if self.raw is not None:
            lam, area, speed = self.raw
            derived = intrinsic_demand(lam, area, speed)
            if abs(derived - self.pi) > 1e-12 * abs(self.pi):
                raise ConfigurationError(
                    f"raw inputs give pi={derived!r}, scenario says pi={self.pi!r}"
                )

    @classmethod
    def from_raw(cls, lam: float, area: float, speed: float, *,
                 k: float = DEFAULT_K, c: int = 1, policy: str = "taxi") -> "Scenario":
        return cls(pi=intrinsic_demand(lam, area, speed), k=k, c=c,
                   policy=policy, raw=(lam, area, speed))
