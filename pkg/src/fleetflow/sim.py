"""Agent-based discrete-event simulator for door-to-door fleet policies.

Vehicles and passengers live on the unit square with rectangular (L1)
distances and unit speed, so travel time equals L1 distance and boarding
and alighting are instantaneous.  Calls arrive as a Poisson stream of rate
pi.  Dispatch rules per policy:

    taxi       callers go to the nearest idle vehicle, else a FIFO queue;
               a vehicle finishing a trip takes the queue head.
    shared_a   callers go to the nearest vehicle with room (onboard +
               assigned < c); a vehicle with outstanding pickups always
               serves its nearest pickup next (abandoning a delivery leg in
               progress if it must) and only delivers, nearest destination
               first, once no pickups remain.
    shared_b   like shared_a but callers may only be assigned to vehicles
               with no one onboard, so delivery legs are never interrupted.
    dar        callers pool up unassigned; a vehicle delivers one passenger
               (nearest destination), then immediately collects the nearest
               pooled caller, waiting in place when the pool is empty.
               Vehicles first fill to occupancy c before this cycle starts.

All randomness flows from one seeded generator, so a config determines its
result bit for bit.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from .core import DEFAULT_K, ModelError, check_policy_capacity
from . import steady

EV_ARRIVAL, EV_PICKUP, EV_DELIVER = 0, 1, 2

#: Queue-length drift (per unit time) above which a run is called unstable.
SLOPE_LIMIT = 0.01
#: Last-to-first quintile ratio of wait-to-assign above which a run is unstable.
WAIT_RATIO_LIMIT = 3.0

_DEFAULT_CAPACITY = {"taxi": 1, "shared_a": 2, "shared_b": 2, "dar": 2}


@dataclass(frozen=True)
class SimConfig:
    policy: str
    m: int
    pi: float
    c: Optional[int] = None
    k: float = DEFAULT_K
    seed: int = 0
    warmup_passengers: int = 500
    sample_passengers: int = 10000
    n_w_target: Optional[int] = None   # dar only: pre-seeded pool size at t=0
    collect_trace: bool = False

    def capacity(self) -> int:
        return self.c if self.c is not None else _DEFAULT_CAPACITY[self.policy]

    def validate(self) -> None:
        check_policy_capacity(self.policy, self.capacity())
        if self.m < 1:
            raise ValueError("fleet size m must be at least 1")
        if self.pi <= 0:
            raise ValueError("pi must be positive")
        if self.n_w_target is not None and self.policy != "dar":
            raise ValueError("n_w_target applies to the dar policy only")


@dataclass(frozen=True)
class TraceRecord:
    pax: int
    call: float
    assign: Optional[float]
    pickup: Optional[float]
    deliver: Optional[float]
    ox: float
    oy: float
    dx: float
    dy: float


@dataclass
class SimResult:
    policy: str
    m: int
    pi: float
    c: int
    k: float
    seed: int
    sample_size: int
    mean_door_to_door: float
    f_t: float
    mean_wait_assign: float
    mean_wait_pickup: float
    mean_ride: float
    mean_in_system: float
    mean_queue: float
    queue_slope: float
    wait_ratio: float
    feasible: bool
    protocol_violations: int
    trace: Optional[List[TraceRecord]] = None


@dataclass
class LittleReport:
    passed: bool
    vacuous: bool
    measured: float
    predicted: float
    rel_error: float


@dataclass
class MinFleetResult:
    policy: str
    pi: float
    c: int
    m: int
    reps: int
    probes: Dict[int, List[SimResult]] = field(default_factory=dict)


class _Engine:
    """One replication; strictly sequential event loop."""

    def __init__(self, cfg: SimConfig):
        cfg.validate()
        self.cfg = cfg
        self.c = cfg.capacity()
        self.rng = np.random.default_rng(cfg.seed)
        m = cfg.m
        xy = self.rng.random((m, 2))
        self.seg_t0 = np.zeros(m)
        self.sx0 = xy[:, 0].copy()
        self.sy0 = xy[:, 1].copy()
        self.sx1 = xy[:, 0].copy()
        self.sy1 = xy[:, 1].copy()
        self.nb_onboard = np.zeros(m, dtype=np.int64)
        self.nb_assigned = np.zeros(m, dtype=np.int64)
        self.onboard: List[List[int]] = [[] for _ in range(m)]
        self.assigned: List[List[int]] = [[] for _ in range(m)]
        self.leg_target = [-1] * m          # pax id the vehicle is driving for
        self.leg_kind = [-1] * m
        self.leg_epoch = [0] * m            # bumping it cancels the pending event
        self.dar_initialized = [False] * m  # reached occupancy c at least once
        self.dar_waiting = set(range(m)) if cfg.policy == "dar" else set()

        # Passenger columns, indexed by pax id.  Coordinates live in growable
        # numpy arrays so pool scans can fancy-index instead of copying lists.
        self.n_pax = 0
        self._pax_cap = 4096
        self.p_ox = np.empty(self._pax_cap)
        self.p_oy = np.empty(self._pax_cap)
        self.p_dx = np.empty(self._pax_cap)
        self.p_dy = np.empty(self._pax_cap)
        self.p_call: List[float] = []
        self.p_assign: List[Optional[float]] = []
        self.p_pickup: List[Optional[float]] = []
        self.p_deliver: List[Optional[float]] = []

        self.queue: List[int] = []   # taxi/shared FIFO of unassigned callers
        self.pool: List[int] = []    # dar unassigned pool, id-ascending
        self.heap: list = []
        self.seq = 0

        self.n_phantoms = 0
        if cfg.policy == "dar" and cfg.n_w_target:
            ph = self.rng.random((cfg.n_w_target, 4))
            for row in ph:
                pid = self._new_pax(0.0, row[0], row[1], row[2], row[3])
                self.pool.append(pid)
            self.n_phantoms = cfg.n_w_target
        self.in_system = self.n_phantoms

        self.first_sample = cfg.warmup_passengers + 1
        self.last_sample = cfg.warmup_passengers + cfg.sample_passengers
        self.delivered_sampled = 0
        self.t0_window: Optional[float] = None
        self.t1_window: Optional[float] = None
        self.t_prev = 0.0
        self.area_in_system = 0.0
        self.area_queue = 0.0
        self.slope_t: List[float] = []
        self.slope_q: List[float] = []
        self.violations = 0
        self.events = 0
        self.max_events = 200 * (cfg.warmup_passengers + cfg.sample_passengers) + 400 * m
        # Unstable runs may never deliver a starved caller; after the window
        # closes, one extra window length is allowed for the tail deliveries.
        self.t_stop: Optional[float] = None

    # -- passengers ---------------------------------------------------------

    def _new_pax(self, call, ox, oy, dx, dy) -> int:
        ix = self.n_pax
        if ix == self._pax_cap:
            self._pax_cap *= 2
            for name in ("p_ox", "p_oy", "p_dx", "p_dy"):
                old = getattr(self, name)
                grown = np.empty(self._pax_cap)
                grown[:ix] = old
                setattr(self, name, grown)
        self.p_ox[ix] = ox
        self.p_oy[ix] = oy
        self.p_dx[ix] = dx
        self.p_dy[ix] = dy
        self.p_call.append(call)
        self.p_assign.append(None)
        self.p_pickup.append(None)
        self.p_deliver.append(None)
        self.n_pax += 1
        return ix

    def _real_index(self, pax: int) -> int:
        """1-based call-order index among non-phantom passengers."""
        return pax - self.n_phantoms + 1

    # -- geometry -----------------------------------------------------------

    def _position_one(self, v: int, t: float) -> Tuple[float, float]:
        x0, y0 = float(self.sx0[v]), float(self.sy0[v])
        x1, y1 = float(self.sx1[v]), float(self.sy1[v])
        el = t - float(self.seg_t0[v])
        ax = abs(x1 - x0)
        if el <= ax:
            return (x0 + math.copysign(el, x1 - x0) if ax else x0), y0
        rem = el - ax
        ay = abs(y1 - y0)
        if rem >= ay:
            return x1, y1
        return x1, y0 + math.copysign(rem, y1 - y0)

    def _positions(self, idxs: np.ndarray, t: float) -> Tuple[np.ndarray, np.ndarray]:
        x0 = self.sx0[idxs]
        y0 = self.sy0[idxs]
        x1 = self.sx1[idxs]
        y1 = self.sy1[idxs]
        el = t - self.seg_t0[idxs]
        dx = x1 - x0
        ax = np.abs(dx)
        px = x0 + np.sign(dx) * np.minimum(el, ax)
        rem = np.maximum(el - ax, 0.0)
        dy = y1 - y0
        py = y0 + np.sign(dy) * np.minimum(rem, np.abs(dy))
        return px, py

    def _settle(self, v: int, t: float) -> None:
        """Pin the vehicle at its current leg endpoint (leg just completed)."""
        self.sx0[v] = self.sx1[v]
        self.sy0[v] = self.sy1[v]
        self.seg_t0[v] = t

    def _start_leg(self, v: int, t: float, pax: int, kind: int) -> None:
        px, py = self._position_one(v, t)
        if kind == EV_PICKUP:
            tx, ty = self.p_ox[pax], self.p_oy[pax]
        else:
            tx, ty = self.p_dx[pax], self.p_dy[pax]
        self.seg_t0[v] = t
        self.sx0[v], self.sy0[v] = px, py
        self.sx1[v], self.sy1[v] = tx, ty
        self.leg_target[v] = pax
        self.leg_kind[v] = kind
        self.leg_epoch[v] += 1
        self.dar_waiting.discard(v)
        dist = abs(tx - px) + abs(ty - py)
        self.seq += 1
        heapq.heappush(self.heap, (t + dist, self.seq, kind, v, pax, self.leg_epoch[v]))

    def _go_idle(self, v: int) -> None:
        self.leg_target[v] = -1
        self.leg_kind[v] = -1
        if self.cfg.policy == "dar":
            self.dar_waiting.add(v)

    # -- dispatch -----------------------------------------------------------

    def _avail_mask(self) -> np.ndarray:
        if self.cfg.policy == "shared_a":
            return (self.nb_onboard + self.nb_assigned) < self.c
        # taxi is the c = 1 case of this rule: empty vehicles with room
        return (self.nb_onboard == 0) & (self.nb_assigned < self.c)

    def _nearest_vehicle(self, idxs: np.ndarray, ox: float, oy: float, t: float) -> int:
        px, py = self._positions(idxs, t)
        d = np.abs(px - ox) + np.abs(py - oy)
        return int(idxs[int(np.argmin(d))])  # argmin ties -> smallest vehicle id

    def _assign(self, v: int, pax: int, t: float) -> None:
        if self.nb_onboard[v] + self.nb_assigned[v] >= self.c:
            self.violations += 1
        self.p_assign[pax] = t
        self.assigned[v].append(pax)
        self.nb_assigned[v] += 1
        if self.leg_target[v] == -1:
            self._decide(v, t)
        elif self.leg_kind[v] == EV_DELIVER:
            # Pickups take priority: abandon the delivery leg where it stands.
            self.leg_epoch[v] += 1
            self._decide(v, t)

    def _drain_queue(self, t: float) -> None:
        while self.queue:
            mask = self._avail_mask()
            if not mask.any():
                break
            idxs = np.nonzero(mask)[0]
            pax = self.queue.pop(0)
            v = self._nearest_vehicle(idxs, self.p_ox[pax], self.p_oy[pax], t)
            self._assign(v, pax, t)

    def _decide(self, v: int, t: float) -> None:
        """Pick the vehicle's next leg; pickups before deliveries."""
        px, py = self._position_one(v, t)
        if self.assigned[v]:
            pax = min(self.assigned[v],
                      key=lambda p: (abs(self.p_ox[p] - px) + abs(self.p_oy[p] - py), p))
            self._start_leg(v, t, pax, EV_PICKUP)
        elif self.onboard[v]:
            pax = min(self.onboard[v],
                      key=lambda p: (abs(self.p_dx[p] - px) + abs(self.p_dy[p] - py), p))
            self._start_leg(v, t, pax, EV_DELIVER)
        else:
            self._go_idle(v)

    def _dar_take(self, v: int, pax: int, t: float) -> None:
        self.p_assign[pax] = t
        self.assigned[v].append(pax)
        self.nb_assigned[v] += 1
        self._start_leg(v, t, pax, EV_PICKUP)

    def _dar_next(self, v: int, t: float) -> None:
        if self.pool:
            ids = np.asarray(self.pool)
            px, py = self._position_one(v, t)
            d = np.abs(self.p_ox[ids] - px) + np.abs(self.p_oy[ids] - py)
            ix = int(np.argmin(d))  # ties -> earliest caller (pool is id-ascending)
            self._dar_take(v, self.pool.pop(ix), t)
        else:
            self._go_idle(v)  # wait in place for the next caller

    # -- event handlers -----------------------------------------------------

    def _on_arrival(self, t: float, pax: int) -> None:
        self.in_system += 1
        if self.cfg.policy == "dar":
            if self.dar_waiting:
                idxs = np.fromiter(self.dar_waiting, dtype=np.int64)
                idxs.sort()
                v = self._nearest_vehicle(idxs, self.p_ox[pax], self.p_oy[pax], t)
                self._dar_take(v, pax, t)
            else:
                self.pool.append(pax)
        else:
            self.queue.append(pax)
            self._drain_queue(t)

    def _on_pickup(self, t: float, v: int, pax: int) -> None:
        self._settle(v, t)
        self.p_pickup[pax] = t
        self.assigned[v].remove(pax)
        self.nb_assigned[v] -= 1
        self.onboard[v].append(pax)
        self.nb_onboard[v] += 1
        if self.nb_onboard[v] > self.c:
            self.violations += 1
        if self.cfg.policy == "dar":
            if self.nb_onboard[v] < self.c:
                self._dar_next(v, t)
            else:
                self.dar_initialized[v] = True
                self._decide(v, t)  # no pickups outstanding: delivers nearest
        else:
            self._decide(v, t)

    def _on_deliver(self, t: float, v: int, pax: int) -> None:
        self._settle(v, t)
        if self.assigned[v]:
            self.violations += 1  # delivery completed with a pickup outstanding
        self.p_deliver[pax] = t
        self.onboard[v].remove(pax)
        self.nb_onboard[v] -= 1
        self.in_system -= 1
        ridx = self._real_index(pax)
        if self.first_sample <= ridx <= self.last_sample:
            self.delivered_sampled += 1
        if self.cfg.policy == "dar":
            if self.dar_initialized[v] and self.nb_onboard[v] != self.c - 1:
                self.violations += 1
            self._dar_next(v, t)
        else:
            self._decide(v, t)
            self._drain_queue(t)

    # -- main loop ----------------------------------------------------------

    def run(self) -> SimResult:
        cfg = self.cfg
        t = float(self.rng.exponential(1.0 / cfg.pi))
        self.seq += 1
        heapq.heappush(self.heap, (t, self.seq, EV_ARRIVAL, -1, -1, 0))

        while self.heap:
            t, _, kind, v, pax, epoch = heapq.heappop(self.heap)
            self.events += 1
            if self.events > self.max_events:
                raise ModelError("event budget exceeded; simulation did not settle")
            if kind != EV_ARRIVAL and epoch != self.leg_epoch[v]:
                continue  # leg was abandoned in favor of a pickup

            # Windowed time integrals for Little's law and the queue mean.
            if self.t0_window is not None:
                lo = max(self.t0_window, self.t_prev)
                hi = min(t, self.t1_window) if self.t1_window is not None else t
                if hi > lo:
                    qlen = len(self.pool) if cfg.policy == "dar" else len(self.queue)
                    self.area_in_system += self.in_system * (hi - lo)
                    self.area_queue += qlen * (hi - lo)
            self.t_prev = t

            if kind == EV_ARRIVAL:
                draws = self.rng.random(4)
                pid = self._new_pax(t, *draws)
                ridx = self._real_index(pid)
                if ridx == self.first_sample:
                    self.t0_window = t
                if ridx == self.last_sample:
                    self.t1_window = t
                    self.t_stop = t + max(t - (self.t0_window or 0.0), 50.0 / cfg.pi)
                if self.t0_window is not None and (self.t1_window is None or t <= self.t1_window):
                    qlen = len(self.pool) if cfg.policy == "dar" else len(self.queue)
                    self.slope_t.append(t)
                    self.slope_q.append(qlen)
                self._on_arrival(t, pid)
                gap = float(self.rng.exponential(1.0 / cfg.pi))
                self.seq += 1
                heapq.heappush(self.heap, (t + gap, self.seq, EV_ARRIVAL, -1, -1, 0))
            elif kind == EV_PICKUP:
                self._on_pickup(t, v, pax)
            else:
                self._on_deliver(t, v, pax)

            if self.delivered_sampled >= cfg.sample_passengers:
                break
            if self.t_stop is not None and t > self.t_stop:
                break  # saturated: starved callers would hold the run open

        return self._summarize()

    # -- statistics ---------------------------------------------------------

    def _summarize(self) -> SimResult:
        cfg = self.cfg
        lo_id = self.n_phantoms + self.first_sample - 1
        hi_id = self.n_phantoms + self.last_sample - 1
        doors, wa, wp, rides = [], [], [], []
        for pid in range(lo_id, min(hi_id + 1, len(self.p_call))):
            dl = self.p_deliver[pid]
            if dl is None:
                continue
            call = self.p_call[pid]
            asn = self.p_assign[pid]
            pk = self.p_pickup[pid]
            doors.append(dl - call)
            wa.append(asn - call)
            wp.append(pk - asn)
            rides.append(dl - pk)
        n = len(doors)
        mean_door = float(np.mean(doors)) if n else 0.0
        window = (self.t1_window - self.t0_window) if (
            self.t0_window is not None and self.t1_window is not None
            and self.t1_window > self.t0_window) else 0.0
        mean_l = self.area_in_system / window if window else 0.0
        mean_q = self.area_queue / window if window else 0.0

        ts = np.asarray(self.slope_t)
        qs = np.asarray(self.slope_q, dtype=float)
        if len(ts) >= 2 and float(np.var(ts)) > 0:
            slope = float(np.cov(ts, qs, bias=True)[0, 1] / np.var(ts))
        else:
            slope = 0.0

        if n >= 5:
            q = n // 5
            first = float(np.mean(wa[:q]))
            last = float(np.mean(wa[-q:]))
        else:
            first = last = 0.0
        # Waits below one inter-arrival gap are noise, not drift.
        drift_bar = max(WAIT_RATIO_LIMIT * first, 1.0 / cfg.pi)
        ratio = last / first if first > 0 else (math.inf if last > 0 else 1.0)
        feasible = not (slope > SLOPE_LIMIT or last > drift_bar)

        trace = None
        if cfg.collect_trace:
            trace = [TraceRecord(pax=self._real_index(pid), call=self.p_call[pid],
                                 assign=self.p_assign[pid], pickup=self.p_pickup[pid],
                                 deliver=self.p_deliver[pid], ox=self.p_ox[pid],
                                 oy=self.p_oy[pid], dx=self.p_dx[pid], dy=self.p_dy[pid])
                     for pid in range(self.n_phantoms, len(self.p_call))]

        return SimResult(
            policy=cfg.policy, m=cfg.m, pi=cfg.pi, c=self.c, k=cfg.k, seed=cfg.seed,
            sample_size=n,
            mean_door_to_door=mean_door,
            f_t=mean_door / cfg.k,
            mean_wait_assign=float(np.mean(wa)) if n else 0.0,
            mean_wait_pickup=float(np.mean(wp)) if n else 0.0,
            mean_ride=float(np.mean(rides)) if n else 0.0,
            mean_in_system=mean_l,
            mean_queue=mean_q,
            queue_slope=slope,
            wait_ratio=ratio,
            feasible=feasible,
            protocol_violations=self.violations,
            trace=trace,
        )


def simulate_run(config: SimConfig) -> SimResult:
    """Run one seeded replication."""
    return _Engine(config).run()


def simulate_many(config: SimConfig, reps: int) -> List[SimResult]:
    """Independent replications with seeds config.seed + 0 .. reps-1."""
    return [simulate_run(replace(config, seed=config.seed + i)) for i in range(reps)]


def mean_f_t(results: List[SimResult]) -> float:
    return float(np.mean([r.f_t for r in results]))


def little_check(result: SimResult, pi: float) -> LittleReport:
    """Self-test: time-averaged in-system count vs pi times mean time in system."""
    if result.sample_size == 0 or result.mean_door_to_door <= 0:
        return LittleReport(passed=True, vacuous=True, measured=0.0, predicted=0.0,
                            rel_error=0.0)
    predicted = pi * result.mean_door_to_door
    rel = abs(result.mean_in_system - predicted) / predicted
    return LittleReport(passed=rel <= 0.03, vacuous=False,
                        measured=result.mean_in_system, predicted=predicted,
                        rel_error=rel)


def min_feasible_fleet(policy: str, pi: float, *, c: Optional[int] = None,
                       k: float = DEFAULT_K, seed: int = 0, reps: int = 5,
                       warmup: int = 500, sample: int = 10000,
                       lo: Optional[int] = None, hi: Optional[int] = None,
                       max_expand: int = 8) -> MinFleetResult:
    """Smallest integer fleet whose replications all sustain a steady state.

    Brackets around the analytic critical fleet, expands the bracket if the
    endpoints do not behave as expected, then bisects on integers.
    """
    cap = c if c is not None else _DEFAULT_CAPACITY[policy]
    check_policy_capacity(policy, cap)
    anchor = steady.critical_fleet(policy, pi, k, cap).value
    lo = lo if lo is not None else max(1, int(0.7 * anchor))
    hi = hi if hi is not None else max(lo + 1, int(1.8 * anchor) + 1)
    probes: Dict[int, List[SimResult]] = {}

    def all_feasible(m: int) -> bool:
        if m not in probes:
            cfg = SimConfig(policy=policy, m=m, pi=pi, c=cap, k=k, seed=seed,
                            warmup_passengers=warmup, sample_passengers=sample)
            probes[m] = simulate_many(cfg, reps)
        return all(r.feasible for r in probes[m])

    expand = 0
    while all_feasible(lo):
        if lo <= 1:
            return MinFleetResult(policy=policy, pi=pi, c=cap, m=1, reps=reps, probes=probes)
        lo = max(1, int(lo * 0.6))
        expand += 1
        if expand > max_expand:
            raise ModelError("no infeasible lower bracket found")
    expand = 0
    while not all_feasible(hi):
        hi = int(hi * 1.5) + 1
        expand += 1
        if expand > max_expand:
            raise ModelError("no feasible upper bracket found")

    while hi - lo > 1:
        mid = (lo + hi) // 2
        if all_feasible(mid):
            hi = mid
        else:
            lo = mid
    return MinFleetResult(policy=policy, pi=pi, c=cap, m=hi, reps=reps, probes=probes)
