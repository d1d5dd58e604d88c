"""Transition-rate functions for each dispatch policy.

With the conditioning value n held fixed, every enabled link's rate is an
affine function of the vehicle count at its tail node, which is what makes
the steady-state system linear.  The coefficient form lives here so the
solver and the pointwise rate evaluation cannot drift apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .core import ConsistencyError
from .network import Link, Node, StateVector, TransitionNetwork, build_network


class _Exogenous:
    """Marker: the conditioning value is an external buffer, not a state sum."""

    def __repr__(self):
        return "EXOGENOUS"


EXOGENOUS = _Exogenous()


@dataclass
class FlowVector:
    """Nonnegative rate per enabled link."""

    values: Dict[Link, float]

    def __getitem__(self, link: Link) -> float:
        return self.values[link]

    def total(self, kind: str = None) -> float:
        return float(sum(r for ln, r in self.values.items()
                         if kind is None or ln.kind == kind))


def availability_nodes(policy: str, c: int) -> Optional[Tuple[Node, ...]]:
    """Workloads whose vehicles the dispatcher may assign a new caller to.

    Returns None for dar, whose choice set is the waiting-caller buffer
    rather than a set of vehicles.
    """
    if policy == "taxi":
        return ((0, 0),)
    if policy == "shared_a":
        return tuple((i, j) for i in range(c + 1) for j in range(c + 1 - i) if i + j < c)
    if policy == "shared_b":
        return tuple((0, j) for j in range(c))
    if policy == "dar":
        return None
    raise ValueError(f"unknown policy {policy!r}")


def availability_count(policy: str, state: StateVector, c: int):
    """Size of the policy's choice set, or EXOGENOUS for dar."""
    nodes = availability_nodes(policy, c)
    if nodes is None:
        return EXOGENOUS
    return float(sum(state.get(nd, 0.0) for nd in nodes))


def rate_coefficients(policy: str, net: TransitionNetwork, n: float,
                      pi: float, k: float) -> Dict[Link, Tuple[float, float]]:
    """Affine coefficients (alpha, beta) with rate = alpha * state[frm] + beta.

    Pickup legs cover the nearest-of-n distance k / sqrt(n); delivery legs
    the nearest-of-i distance k / sqrt(i).  Assignments arrive at rate pi,
    spread over the availability set for the shared policies.
    """
    if n <= 0:
        raise ValueError("conditioning value n must be positive")
    coeffs: Dict[Link, Tuple[float, float]] = {}
    pickup_alpha = math.sqrt(n) / k
    avail = availability_nodes(policy, net.c)
    for ln in net.enabled_links():
        if ln.kind == "assignment":
            if policy in ("taxi", "dar"):
                # One caller stream feeding a single workload.
                coeffs[ln] = (0.0, pi)
            else:
                coeffs[ln] = (pi / n, 0.0) if ln.frm in avail else (0.0, 0.0)
        elif ln.kind == "pickup":
            coeffs[ln] = (pickup_alpha, 0.0)
        else:  # delivery from (i, 0) with i onboard destinations to choose from
            coeffs[ln] = (math.sqrt(ln.frm[0]) / k, 0.0)
    return coeffs


def rate_vector(policy: str, state: StateVector, n: float, pi: float, k: float,
                net: TransitionNetwork = None, check_consistency: bool = True) -> FlowVector:
    """Evaluate all enabled link rates at the given state.

    For taxi and the shared policies, n must agree with the state's own
    availability count to relative 1e-9; dar's n is the exogenous buffer.
    """
    if net is None:
        net = build_network(_capacity_for(policy, state), policy)
    if check_consistency and policy != "dar":
        expected = availability_count(policy, state, net.c)
        if abs(n - expected) > 1e-9 * max(1.0, abs(expected)):
            raise ConsistencyError(
                f"n={n!r} but the state's availability count is {expected!r}")
    coeffs = rate_coefficients(policy, net, n, pi, k)
    return FlowVector({ln: a * state.get(ln.frm, 0.0) + b for ln, (a, b) in coeffs.items()})


def _capacity_for(policy: str, state: StateVector) -> int:
    if policy == "taxi":
        return 1
    if policy in ("shared_a", "shared_b"):
        return 2
    return max(i + j for (i, j) in state.values)
