"""Steady-state solutions of the workload network, conditioned on n.

Fixing the dispatcher's choice-set size n turns the flow-conservation
equations into a linear system: N-1 independent conservation rows plus one
conditioning row.  Sweeping n traces the fleet-size / travel-time tradeoff
curve for a policy; its minimum fleet size is the critical fleet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .core import DEFAULT_K, InfeasibleStateError, ModelError, check_policy_capacity
from .network import Node, StateVector, TransitionNetwork, build_network
from .policy import availability_nodes, rate_coefficients

_NET_CACHE: Dict[tuple, TransitionNetwork] = {}


def _network(policy: str, c: int) -> TransitionNetwork:
    key = (policy, c)
    if key not in _NET_CACHE:
        _NET_CACHE[key] = build_network(c, policy)
    return _NET_CACHE[key]


def _conditioning_row(policy: str, net: TransitionNetwork, enabled: List[Node],
                      n: float):
    """Weights w and rhs r such that w . state == r pins the solution scale."""
    w = np.zeros(len(enabled))
    pos = {nd: ix for ix, nd in enumerate(enabled)}
    if policy == "taxi":
        w[pos[(0, 0)]] = 1.0
        return w, n
    if policy == "dar":
        # Vehicles are reassigned instantly after a delivery, so no time is
        # spent at workload (c-1, 0); n itself is the exogenous buffer size.
        w[pos[(net.c - 1, 0)]] = 1.0
        return w, 0.0
    for nd in availability_nodes(policy, net.c):
        w[pos[nd]] = 1.0
    return w, n


def solve_conditioned(policy: str, pi: float, k: float, c: int, n: float) -> StateVector:
    """Solve for the unique nonnegative steady state at conditioning value n.

    Raises ModelError if the conditioned system is singular and
    InfeasibleStateError if the solution has negative components.
    """
    check_policy_capacity(policy, c)
    if n <= 0:
        raise ValueError("n must be positive")
    net = _network(policy, c)
    enabled = net.enabled_nodes()
    pos = {nd: ix for ix, nd in enumerate(enabled)}
    ne = len(enabled)

    # Conservation rows: inflow minus outflow at each enabled node, with the
    # constant parts of the rates moved to the right-hand side.
    cons = np.zeros((ne, ne))
    rhs = np.zeros(ne)
    for ln, (alpha, beta) in rate_coefficients(policy, net, n, pi, k).items():
        f, t = pos[ln.frm], pos[ln.to]
        cons[t, f] += alpha
        cons[f, f] -= alpha
        rhs[t] -= beta
        rhs[f] += beta

    # One conservation row is redundant; replace the last with conditioning.
    a = np.vstack([cons[:-1], np.zeros((1, ne))])
    b = np.concatenate([rhs[:-1], [0.0]])
    w, r = _conditioning_row(policy, net, enabled, n)
    a[-1] = w
    b[-1] = r

    # Row/column equilibration plus iterative refinement keeps the solution
    # accurate even when rates span many orders of magnitude (large n).
    row_scale = np.max(np.abs(a), axis=1)
    row_scale[row_scale == 0] = 1.0
    a_s = a / row_scale[:, None]
    col_scale = np.max(np.abs(a_s), axis=0)
    col_scale[col_scale == 0] = 1.0
    a_s = a_s / col_scale[None, :]
    b_s = b / row_scale
    try:
        y = np.linalg.solve(a_s, b_s)
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"singular conditioned system for {policy} at n={n}") from exc
    x = y / col_scale
    for _ in range(3):
        resid = b - a @ x
        if np.max(np.abs(resid)) <= 1e-14 * max(1.0, pi, float(np.max(np.abs(x)))):
            break
        x = x + (np.linalg.solve(a_s, resid / row_scale) / col_scale)

    scale = max(1.0, float(np.max(np.abs(x))))
    if np.min(x) < -1e-9 * scale:
        raise InfeasibleStateError(
            f"negative steady-state components for {policy} at n={n}: {x}")
    x = np.maximum(x, 0.0)

    values = {nd: 0.0 for nd in net.nodes}
    for nd, ix in pos.items():
        values[nd] = float(x[ix])
    return StateVector(values)


def conservation_residual(policy: str, state: StateVector, n: float,
                          pi: float, k: float, c: int) -> float:
    """Max-abs net flow over enabled nodes; near zero at a steady state."""
    net = _network(policy, c)
    acc = {nd: 0.0 for nd in net.nodes}
    for ln, (alpha, beta) in rate_coefficients(policy, net, n, pi, k).items():
        rate = alpha * state.get(ln.frm, 0.0) + beta
        acc[ln.frm] -= rate
        acc[ln.to] += rate
    return max(abs(v) for v in acc.values())


def closed_form_state(policy: str, pi: float, k: float, c: int, n: float) -> StateVector:
    """Explicit steady states for taxi, dar and shared_b; oracle for the solver."""
    check_policy_capacity(policy, c)
    if n <= 0:
        raise ValueError("n must be positive")
    kp = k * pi
    if policy == "taxi":
        values = {(0, 0): n, (0, 1): kp / math.sqrt(n), (1, 0): kp}
    elif policy == "dar":
        values = {nd: 0.0 for nd in _network(policy, c).nodes}
        values[(c - 1, 0)] = 0.0
        values[(c - 1, 1)] = kp / math.sqrt(n)
        values[(c, 0)] = kp / math.sqrt(c)
    elif policy == "shared_b":
        n32 = n ** 1.5
        values = {
            (0, 0): n * (kp + n32) / (2 * kp + n32),
            (0, 1): kp * n / (2 * kp + n32),
            (0, 2): kp ** 2 / (2 * kp * math.sqrt(n) + n * n),
            (1, 1): kp ** 2 / (2 * kp * math.sqrt(n) + n * n),
            (1, 0): kp * (kp + n32) / (2 * kp + n32),
            (2, 0): kp ** 2 / (2 * math.sqrt(2) * kp + math.sqrt(2) * n32),
        }
    else:
        raise ValueError(f"no closed form for policy {policy!r}; use solve_conditioned")
    full = {nd: 0.0 for nd in _network(policy, c).nodes}
    full.update(values)
    return StateVector(full)


def fleet_size(state: StateVector) -> float:
    """Total vehicles across all workloads (waiting callers are not counted)."""
    return state.total()


def travel_time_ratio(policy: str, state: StateVector, n: float,
                      pi: float, k: float, c: int) -> float:
    """Mean door-to-door time (waiting included) over the direct drive time k."""
    kp = k * pi
    if policy == "taxi":
        return (fleet_size(state) - state.get((0, 0))) / kp
    if policy == "dar":
        # n waiting callers plus c riders-or-assigned per circulating vehicle.
        return n / kp + c / math.sqrt(n) + math.sqrt(c)
    return sum((i + j) * v for (i, j), v in state.values.items()) / kp


def idle_fraction(state: StateVector, m: float) -> float:
    """Fraction of fleet time spent idle (taxi policy)."""
    if m <= 0:
        raise ValueError("fleet size must be positive")
    return state.get((0, 0)) / m


@dataclass
class OperatingPoint:
    n: float
    state: Optional[StateVector]
    m: float
    f_t: float
    f_i: Optional[float] = None
    branch: str = "efficient"
    ok: bool = True
    error: Optional[str] = None


@dataclass
class CriticalFleet:
    value: float
    attained: bool
    n_at: Optional[float] = None

    def __float__(self):
        return self.value


@dataclass
class PerformanceCurve:
    policy: str
    pi: float
    k: float
    c: int
    points: List[OperatingPoint] = field(default_factory=list)
    m_c: Optional[CriticalFleet] = None
    m_hat: Optional[float] = None

    def valid_points(self) -> List[OperatingPoint]:
        return [p for p in self.points if p.ok]

    @property
    def mode(self) -> str:
        return self.policy if self.policy != "dar" else f"dar_c{self.c}"


def default_n_grid(points: int = 200, lo: float = 1e-2, hi: float = 1e4) -> np.ndarray:
    return np.geomspace(lo, hi, points)


def classify_branches(points: List[OperatingPoint]) -> None:
    """Label points dominated within their own curve as inefficient, in place."""
    valid = [p for p in points if p.ok]
    if not valid:
        return
    m = np.array([p.m for p in valid])
    f = np.array([p.f_t for p in valid])
    dominated = np.zeros(len(valid), dtype=bool)
    for ix in range(len(valid)):
        better = (m <= m[ix]) & (f <= f[ix]) & ((m < m[ix]) | (f < f[ix]))
        dominated[ix] = bool(better.any())
    for p, dom in zip(valid, dominated):
        p.branch = "inefficient" if dom else "efficient"


def performance_curve(policy: str, pi: float, k: float = DEFAULT_K, c: int = 1,
                      n_grid=None) -> PerformanceCurve:
    """Trace the {f_t; m} curve over an n grid; bad points are marked, not fatal."""
    if n_grid is None:
        n_grid = default_n_grid()
    n_grid = np.asarray(n_grid, dtype=float)
    if not (np.all(np.diff(n_grid) > 0) and np.all(n_grid > 0)):
        raise ValueError("n_grid must be strictly increasing and positive")
    curve = PerformanceCurve(policy=policy, pi=pi, k=k, c=c)
    for n in n_grid:
        try:
            state = solve_conditioned(policy, pi, k, c, float(n))
            m = fleet_size(state)
            ft = travel_time_ratio(policy, state, float(n), pi, k, c)
            fi = idle_fraction(state, m) if policy == "taxi" and m > 0 else None
            curve.points.append(OperatingPoint(n=float(n), state=state, m=m,
                                               f_t=ft, f_i=fi))
        except (ModelError, ValueError) as exc:
            curve.points.append(OperatingPoint(n=float(n), state=None, m=math.nan,
                                               f_t=math.nan, ok=False, error=str(exc)))
    classify_branches(curve.points)
    curve.m_c = critical_fleet(policy, pi, k, c)
    if policy == "dar":
        curve.m_hat = k * pi / math.sqrt(2) + k * pi / math.sqrt(c)
    return curve


def golden_section_min(f: Callable[[float], float], a: float, b: float,
                       rel_tol: float = 1e-8) -> float:
    """Minimize a unimodal function on [a, b]; returns the argmin."""
    invphi = (math.sqrt(5) - 1) / 2
    c1 = b - (b - a) * invphi
    d1 = a + (b - a) * invphi
    fc, fd = f(c1), f(d1)
    while (b - a) > rel_tol * max(abs(a), abs(b), 1e-12):
        if fc < fd:
            b, d1, fd = d1, c1, fc
            c1 = b - (b - a) * invphi
            fc = f(c1)
        else:
            a, c1, fc = c1, d1, fd
            d1 = a + (b - a) * invphi
            fd = f(d1)
    return (a + b) / 2


def fleet_of_n(policy: str, pi: float, k: float, c: int) -> Callable[[float], float]:
    """m(n) through the conditioned solver."""

    def m_of_n(n: float) -> float:
        return fleet_size(solve_conditioned(policy, pi, k, c, n))

    return m_of_n


def _bracket_minimum(f: Callable[[float], float], lo_exp: float = -2.0,
                     hi_exp: float = 4.0, points: int = 61, widenings: int = 3):
    """Grid pre-scan for a bracketed interior minimum; widens on boundary hits."""
    for _ in range(widenings + 1):
        grid = np.geomspace(10.0 ** lo_exp, 10.0 ** hi_exp, points)
        vals = np.array([f(float(g)) for g in grid])
        ix = int(np.argmin(vals))
        if 0 < ix < len(grid) - 1:
            return float(grid[ix - 1]), float(grid[ix + 1])
        lo_exp -= 2.0
        hi_exp += 2.0
        points += 20
    raise ModelError("could not bracket an interior minimum")


def critical_fleet(policy: str, pi: float, k: float = DEFAULT_K, c: int = 1) -> CriticalFleet:
    """Minimum fleet able to sustain steady state under the policy.

    dar's value is an unattained infimum (the waiting buffer would have to be
    infinite); the shared policies are minimized numerically.
    """
    check_policy_capacity(policy, c)
    kp = k * pi
    if policy == "taxi":
        n_star = (kp / 2) ** (2 / 3)
        return CriticalFleet(value=3 * (kp / 2) ** (2 / 3) + kp, attained=True, n_at=n_star)
    if policy == "dar":
        return CriticalFleet(value=kp / math.sqrt(c), attained=False, n_at=None)
    m_of_n = fleet_of_n(policy, pi, k, c)
    lo, hi = _bracket_minimum(m_of_n)
    n_star = golden_section_min(m_of_n, lo, hi, rel_tol=1e-8)
    value = m_of_n(n_star)
    if policy == "shared_b":
        # Cross-check the generic solver against the explicit state sums.
        def closed_m(n):
            return fleet_size(closed_form_state("shared_b", pi, k, c, n))

        n_cf = golden_section_min(closed_m, lo, hi, rel_tol=1e-8)
        if abs(closed_m(n_cf) - value) > 1e-6 * max(1.0, value):
            raise ModelError("solver and closed-form critical fleets disagree")
    return CriticalFleet(value=value, attained=True, n_at=n_star)


def time_ratio_at_fleet(policy: str, pi: float, k: float, c: int,
                        m: float) -> Optional[float]:
    """f_t on the efficient branch at fleet size m; None if m is infeasible.

    For dar the state at a given m is unique; for the other policies the
    larger-n root (shorter travel times) is the one an operator would run.
    """
    kp = k * pi
    if policy == "dar":
        floor = kp / math.sqrt(c)
        if m <= floor:
            return None
        n = (kp / (m - floor)) ** 2
        return travel_time_ratio(policy, None, n, pi, k, c)
    crit = critical_fleet(policy, pi, k, c)
    if m < crit.value:
        return None
    m_of_n = fleet_of_n(policy, pi, k, c)
    lo = crit.n_at
    hi = max(2 * lo, 4.0)
    while m_of_n(hi) < m:
        hi *= 2
        if hi > 1e12:
            raise ModelError("failed to bound the efficient branch")
    for _ in range(200):  # bisection: m(n) increases right of the minimum
        mid = 0.5 * (lo + hi)
        if m_of_n(mid) < m:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    n = 0.5 * (lo + hi)
    state = solve_conditioned(policy, pi, k, c, n)
    return travel_time_ratio(policy, state, n, pi, k, c)
