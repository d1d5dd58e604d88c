"""Command-line front end: curves, critical fleets, frontiers, simulations.

All subcommands stream flat records to stdout as CSV (default) or JSON;
informational notes go to stderr.  Numeric fields are serialized with nine
significant digits so the two formats carry identical data.

Exit codes: 0 success, 1 model/solver error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import figures as figmod
from .baseline import AutoMode, TransitCurve
from .core import DEFAULT_K, ConfigurationError, ModelError
from .pareto import mode_niches, pareto_frontier
from .sim import SimConfig, min_feasible_fleet, simulate_many
from .steady import critical_fleet, default_n_grid, performance_curve, time_ratio_at_fleet


def fmt9(value) -> str:
    """Nine-significant-digit serialization for numeric fields."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _norm(value):
    # JSON mirror of fmt9: floats are rounded to 9 significant digits.
    if isinstance(value, float):
        return float(f"{value:.9g}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


def emit(records: List[dict], fmt: str, stream=None) -> None:
    """Write homogeneous records as CSV (header row) or a JSON array."""
    stream = stream if stream is not None else sys.stdout
    if records:
        keys = list(records[0].keys())
        for rec in records:
            if list(rec.keys()) != keys:
                raise RuntimeError("internal error: mixed record kinds in one emission")
    if fmt == "json":
        payload = [{k: _norm(v) for k, v in rec.items()} for rec in records]
        json.dump(payload, stream, indent=None)
        stream.write("\n")
        return
    if not records:
        return
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(records[0].keys())
    for rec in records:
        writer.writerow([fmt9(v) for v in rec.values()])


def parse_records(text: str) -> List[dict]:
    """Read back an emitted CSV block (used by round-trip tests)."""
    reader = csv.DictReader(io.StringIO(text))
    return [dict(row) for row in reader]


# -- mode list parsing -------------------------------------------------------

def _parse_modes(mode_list: str) -> List[Tuple[str, Optional[int]]]:
    out = []
    for token in mode_list.split(","):
        token = token.strip()
        if not token:
            continue
        if ":" in token:
            name, cval = token.split(":", 1)
            out.append((name.strip(), int(cval)))
        else:
            out.append((token, None))
    if not out:
        raise ConfigurationError("empty --modes list")
    return out


def _default_c(policy: str, c: Optional[int]) -> int:
    if c is not None:
        return c
    return {"taxi": 1, "shared_a": 2, "shared_b": 2, "dar": 2}[policy]


# -- subcommands --------------------------------------------------------------

def _cmd_curve(args) -> int:
    c = _default_c(args.policy, args.c)
    grid = default_n_grid(args.points, args.n_min, args.n_max)
    curve = performance_curve(args.policy, args.pi, args.k, c, grid)
    rows = [{"policy": args.policy, "pi": args.pi, "k": args.k, "c": c,
             "n": p.n, "m": p.m, "f_t": p.f_t, "branch": p.branch}
            for p in curve.valid_points()]
    skipped = len(curve.points) - len(rows)
    if skipped:
        print(f"note: {skipped} grid points had no steady state", file=sys.stderr)
    emit(rows, args.format)
    return 0


def _cmd_mc(args) -> int:
    c = _default_c(args.policy, args.c)
    crit = critical_fleet(args.policy, args.pi, args.k, c)
    flag = "" if crit.attained else " (infimum, not attained)"
    print(f"{fmt9(crit.value)}{flag}")
    return 0


def _cmd_pareto(args) -> int:
    curves, baselines = [], []
    for name, c in _parse_modes(args.modes):
        if name == "transit":
            baselines.append(TransitCurve())
        elif name == "auto":
            baselines.append(AutoMode(args.pi))
        else:
            curves.append(performance_curve(name, args.pi, args.k, _default_c(name, c)))
    m_range = (args.m_min, args.m_max) if args.m_min and args.m_max \
        else figmod.default_m_range(args.pi)
    frontier = pareto_frontier(curves, baselines, m_range=m_range, samples=args.samples)
    niches = mode_niches(frontier)
    if args.niches:
        emit([{"mode": nc.mode, "m_lo": nc.m_lo, "m_hi": nc.m_hi} for nc in niches],
             args.format)
    else:
        emit([{"m": p.m, "f": p.f, "mode": p.mode} for p in frontier], args.format)
        for nc in niches:
            print(f"niche: {nc.mode} m in [{fmt9(nc.m_lo)}, {fmt9(nc.m_hi)}]",
                  file=sys.stderr)
    return 0


def _sim_rows(policy: str, pi: float, k: float, c: int, m: int, seed: int,
              reps: int, warmup: int, sample: int) -> Tuple[List[dict], List]:
    cfg = SimConfig(policy=policy, m=m, pi=pi, c=c, k=k, seed=seed,
                    warmup_passengers=warmup, sample_passengers=sample)
    results = simulate_many(cfg, reps)
    try:
        ft_analytic = time_ratio_at_fleet(policy, pi, k, c, m)
    except ModelError:
        ft_analytic = None
    rows = [{"policy": policy, "m": m, "pi": pi, "seed": r.seed, "f_t_sim": r.f_t,
             "f_t_analytic": ft_analytic, "feasible": r.feasible} for r in results]
    return rows, results


def _cmd_simulate(args) -> int:
    c = _default_c(args.policy, args.c)
    try:
        ft_analytic = time_ratio_at_fleet(args.policy, args.pi, args.k, c, args.m)
    except ModelError:
        ft_analytic = None
    rows, results = [], []
    for rep in range(args.reps):
        cfg = SimConfig(policy=args.policy, m=args.m, pi=args.pi, c=c, k=args.k,
                        seed=args.seed + rep, warmup_passengers=args.warmup,
                        sample_passengers=args.sample, collect_trace=bool(args.trace))
        res = simulate_many(cfg, 1)[0]
        results.append(res)
        rows.append({"policy": args.policy, "m": args.m, "pi": args.pi,
                     "seed": res.seed, "f_t_sim": res.f_t,
                     "f_t_analytic": ft_analytic, "feasible": res.feasible})
    emit(rows, args.format)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rep", "pax", "call", "assign", "pickup", "deliver",
                             "ox", "oy", "dx", "dy"])
            for rep, res in enumerate(results):
                for tr in res.trace or ():
                    writer.writerow([rep, tr.pax] + [fmt9(v) for v in
                                    (tr.call, tr.assign, tr.pickup, tr.deliver,
                                     tr.ox, tr.oy, tr.dx, tr.dy)])
        print(f"trace written to {args.trace}", file=sys.stderr)
    return 0


def _cmd_minfleet(args) -> int:
    c = _default_c(args.policy, args.c)
    if args.sim:
        res = min_feasible_fleet(args.policy, args.pi, c=c, k=args.k, seed=args.seed,
                                 reps=args.reps, warmup=args.warmup, sample=args.sample)
        print(res.m)
    else:
        crit = critical_fleet(args.policy, args.pi, args.k, c)
        flag = "" if crit.attained else " (infimum, not attained)"
        print(f"{fmt9(crit.value)}{flag}")
    return 0


def compare_policy(policy: str, pi: float, m_list: Sequence[int], *,
                   k: float = DEFAULT_K, c: Optional[int] = None, seed: int = 0,
                   reps: int = 5, warmup: int = 500, sample: int = 10000,
                   shift_step: float = 0.5) -> Tuple[List[dict], float]:
    """Analytic vs simulated f_t table plus the best horizontal fleet shift.

    The shift grid is capped where the analytic curve stops existing
    (m_min - m_c), so every candidate evaluates all listed fleet sizes.
    """
    cval = _default_c(policy, c)
    rows: List[dict] = []
    sim_means: Dict[int, float] = {}
    for m in m_list:
        mrows, results = _sim_rows(policy, pi, k, cval, m, seed, reps, warmup, sample)
        rows.extend(mrows)
        sim_means[m] = float(np.mean([r.f_t for r in results]))
    crit = critical_fleet(policy, pi, k, cval)
    max_shift = max(0.0, min(m_list) - crit.value - 0.5)
    shifts = np.arange(0.0, max_shift + 1e-9, shift_step)
    if len(shifts) == 0:
        shifts = np.array([0.0])
    best_shift, best_err = 0.0, np.inf
    for dm in shifts:
        errs = []
        for m in m_list:
            fa = time_ratio_at_fleet(policy, pi, k, cval, m - dm)
            if fa is None:
                errs = None
                break
            errs.append(abs(sim_means[m] - fa))
        if errs is None:
            continue
        err = float(np.mean(errs))
        if err < best_err:
            best_err, best_shift = err, float(dm)
    return rows, best_shift


def _cmd_compare(args) -> int:
    m_list = [int(tok) for tok in args.m_list.split(",") if tok.strip()]
    if not m_list:
        raise ConfigurationError("empty --m-list")
    rows, shift = compare_policy(args.policy, args.pi, m_list, k=args.k, c=args.c,
                                 seed=args.seed, reps=args.reps,
                                 warmup=args.warmup, sample=args.sample)
    emit(rows, args.format)
    print(f"best horizontal shift: {fmt9(shift)} vehicles", file=sys.stderr)
    return 0


def _cmd_figure(args) -> int:
    data = figmod.figure_data(args.name, k=args.k, samples=args.samples)
    emit(figmod.figure_records(data), args.format)
    if args.svg:
        figmod.render_figure(data, args.svg)
        print(f"figure rendered to {args.svg}", file=sys.stderr)
    return 0


# -- parser -------------------------------------------------------------------

def _add_common(p, policies=("taxi", "dar", "shared_a", "shared_b")):
    p.add_argument("--policy", required=True, choices=policies)
    p.add_argument("--pi", type=float, required=True)
    p.add_argument("--k", type=float, default=DEFAULT_K)
    p.add_argument("--c", type=int, default=None)


def _add_sim_common(p, reps_default=5):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=reps_default)
    p.add_argument("--warmup", type=int, default=500)
    p.add_argument("--sample", type=int, default=10000)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fleetflow",
                                 description="Door-to-door fleet performance toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curve", help="trace a policy's {f_t; m} curve")
    _add_common(p)
    p.add_argument("--n-min", type=float, default=1e-2)
    p.add_argument("--n-max", type=float, default=1e4)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("mc", help="critical fleet size")
    _add_common(p)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("pareto", help="multi-modal frontier and niches")
    p.add_argument("--pi", type=float, required=True)
    p.add_argument("--k", type=float, default=DEFAULT_K)
    p.add_argument("--modes", required=True,
                   help="comma list, e.g. taxi,shared_b,dar:5,transit,auto")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--m-min", type=float, default=None)
    p.add_argument("--m-max", type=float, default=None)
    p.add_argument("--niches", action="store_true",
                   help="emit niche records instead of frontier points")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_pareto)

    p = sub.add_parser("simulate", help="run seeded replications at one fleet size")
    _add_common(p)
    p.add_argument("--m", type=int, required=True)
    _add_sim_common(p, reps_default=1)
    p.add_argument("--trace", default=None, help="write per-passenger CSV trace")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("minfleet", help="analytic m_c or simulated minimum fleet")
    _add_common(p)
    p.add_argument("--sim", action="store_true")
    _add_sim_common(p)
    p.set_defaults(func=_cmd_minfleet)

    p = sub.add_parser("compare", help="analytic vs simulated f_t and best shift")
    _add_common(p)
    p.add_argument("--m-list", required=True, help="comma list of fleet sizes")
    _add_sim_common(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("figure", help="emit a named figure's data, optionally render")
    p.add_argument("--name", required=True, choices=sorted(figmod.FIGURES))
    p.add_argument("--k", type=float, default=DEFAULT_K)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--svg", default=None, help="render to this file (format by extension)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_figure)

    return ap


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv and execute; returns the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ModelError, ConfigurationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


main = run_command


def console_main() -> None:
    sys.exit(run_command())
