"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

The report lines are written to the real stdout so they stay visible under
pytest's default capture.  Criteria 8-11 run seeded simulations and take
several minutes on one core; they carry the `slow` marker.
"""

import math
import time

import pytest

from fleetflow.baseline import (
    AutoMode,
    TransitCurve,
    auto_point,
    transit_optimal_spacing,
    transit_time_ratio,
)
from fleetflow.cli import compare_policy
from fleetflow.network import LINK_KINDS, build_network, validate_network
from fleetflow.pareto import mode_niches, niche_width, pareto_frontier
from fleetflow.sim import SimConfig, little_check, mean_f_t, min_feasible_fleet, simulate_many
from fleetflow.steady import (
    closed_form_state,
    conservation_residual,
    critical_fleet,
    default_n_grid,
    fleet_of_n,
    golden_section_min,
    performance_curve,
    solve_conditioned,
    time_ratio_at_fleet,
)

PI, K = 100.0, 0.63
KP = K * PI


def report(capsys, num: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}", flush=True)


# -- criterion 1: taxi critical fleet ----------------------------------------

def test_criterion_1_taxi_critical_fleet(capsys):
    t0 = time.perf_counter()
    m_of_n = fleet_of_n("taxi", PI, K, 1)
    n_star = golden_section_min(m_of_n, 0.1, 1000.0, rel_tol=1e-10)
    m_numeric = m_of_n(n_star)
    m_closed = critical_fleet("taxi", PI, K, 1).value
    elapsed = time.perf_counter() - t0
    ok = (abs(m_numeric - 92.93) <= 0.01
          and abs(m_numeric - m_closed) <= 1e-6 * m_closed
          and elapsed < 0.1)
    report(capsys, "1", ok, f"taxi m_c numeric={m_numeric:.6f} closed={m_closed:.6f} "
                    f"[{elapsed * 1000:.1f} ms]")
    assert abs(m_numeric - 92.93) <= 0.01
    assert abs(m_numeric - m_closed) <= 1e-6 * m_closed
    assert elapsed < 0.1


# -- criterion 2: shared_b critical fleet and solver equivalence -------------

def test_criterion_2_shared_b(capsys):
    t0 = time.perf_counter()
    crit = critical_fleet("shared_b", PI, K, 2)
    worst = 0.0
    for n in default_n_grid(200):
        solved = solve_conditioned("shared_b", PI, K, 2, float(n))
        oracle = closed_form_state("shared_b", PI, K, 2, float(n))
        worst = max(worst, max(abs(solved[nd] - oracle[nd]) for nd in oracle.values))
    elapsed = time.perf_counter() - t0
    ok = abs(crit.value - 81.55) <= 0.1 and worst < 1e-9 and elapsed < 1.0
    report(capsys, "2", ok, f"shared_b m_c={crit.value:.4f} solver-vs-closed-form "
                    f"max|diff|={worst:.2e} [{elapsed:.2f} s]")
    assert abs(crit.value - 81.55) <= 0.1
    assert worst < 1e-9
    assert elapsed < 1.0


# -- criterion 3: shared_a critical fleet -------------------------------------

def test_criterion_3_shared_a(capsys):
    crit = critical_fleet("shared_a", PI, K, 2)
    ok = abs(crit.value - 67.0) <= 1.5
    report(capsys, "3", ok, f"shared_a m_c={crit.value:.4f} (target 67 +/- 1.5)")
    assert ok


# -- criterion 4: dar infima and upper bounds ---------------------------------

def test_criterion_4_dar_bounds(capsys):
    printed = {2: 44.548, 3: 36.373, 5: 28.174}
    ok = True
    details = []
    for c in (2, 3, 5):
        crit = critical_fleet("dar", PI, K, c)
        exact = KP / math.sqrt(c)
        m_hat = performance_curve("dar", PI, K, c,
                                  n_grid=[1.0, 2.0]).m_hat
        m_hat_exact = 2 ** -0.5 * KP + KP * c ** -0.5
        ok &= (not crit.attained
               and abs(crit.value - exact) <= 1e-9
               and abs(crit.value - printed[c]) <= 5e-4
               and abs(m_hat - m_hat_exact) <= 1e-9)
        details.append(f"c={c}: inf={crit.value:.6f} m_hat={m_hat:.6f}")
    # The alternative minima {40, 50, 61} sometimes quoted for these cases are
    # not derivable from the implemented relations; they stay out of pass/fail.
    report(capsys, "4", ok, "; ".join(details))
    assert ok


# -- criterion 5: conservation and structure ----------------------------------

def test_criterion_5_conservation_and_structure(capsys):
    worst = 0.0
    for policy, c in [("taxi", 1), ("shared_a", 2), ("shared_b", 2),
                      ("dar", 2), ("dar", 3), ("dar", 5)]:
        for n in default_n_grid(200):
            st = solve_conditioned(policy, PI, K, c, float(n))
            worst = max(worst, conservation_residual(policy, st, float(n), PI, K, c))
    counts_ok = True
    for c in range(1, 9):
        net = build_network(c, "taxi" if c == 1 else "dar")
        counts_ok &= net.n_nodes == (c + 1) * (c + 2) // 2
        counts_ok &= all(len(net.links[kk]) == c * (c + 1) // 2 for kk in LINK_KINDS)
    ranks_ok = True
    for policy, c in [("taxi", 1), ("shared_a", 2), ("shared_b", 2), ("dar", 4)]:
        rep = validate_network(build_network(c, policy))
        ranks_ok &= rep.passed and rep.conservation_rank == rep.enabled_node_count - 1
    ok = worst < 1e-9 * PI and counts_ok and ranks_ok
    report(capsys, "5", ok, f"max residual={worst:.2e} (limit {1e-9 * PI:.0e}), "
                    f"counts c=1..8 {'ok' if counts_ok else 'BAD'}, "
                    f"ranks {'ok' if ranks_ok else 'BAD'}")
    assert ok


# -- criterion 6: baselines ----------------------------------------------------

def test_criterion_6_baselines(capsys):
    f180 = transit_time_ratio(180.0)
    auto = auto_point(PI)
    eoq_ok = True
    for m in (5.0, 20.0, 180.0, 1234.5):
        s = transit_optimal_spacing(m)
        eoq_ok &= abs(10 * s - 2 / (m * s)) <= 1e-12 * max(10 * s, 1.0)
    ok = f180 == 2.0 and abs(auto.m - 66.67) <= 0.01 and auto.f == 1.0 and eoq_ok
    report(capsys, "6", ok, f"transit f(180)={f180!r}, auto m={auto.m:.4f}, "
                    f"EOQ identity {'ok' if eoq_ok else 'BAD'}")
    assert ok


# -- criterion 7: frontier ordering and transit niche ---------------------------

def test_criterion_7_frontier_ordering_and_niche(capsys):
    mc = {
        "dar5": critical_fleet("dar", PI, K, 5).value,
        "dar2": critical_fleet("dar", PI, K, 2).value,
        "shared_a": critical_fleet("shared_a", PI, K, 2).value,
        "shared_b": critical_fleet("shared_b", PI, K, 2).value,
        "taxi": critical_fleet("taxi", PI, K, 1).value,
    }
    order_ok = (mc["dar5"] < mc["dar2"] < mc["shared_a"]
                < mc["shared_b"] < mc["taxi"])
    widths = {}
    for pi in (100.0, 10000.0):
        curves = [performance_curve(p, pi, K, c) for p, c in
                  [("taxi", 1), ("shared_a", 2), ("shared_b", 2),
                   ("dar", 2), ("dar", 3), ("dar", 5)]]
        front = pareto_frontier(curves, [TransitCurve(), AutoMode(pi)],
                                m_range=(pi / 20, 2 * pi), samples=1000)
        widths[pi] = niche_width(mode_niches(front), "transit")
    niche_ok = widths[10000.0] > widths[100.0]
    ok = order_ok and niche_ok
    report(capsys, "7", ok, f"m_c order {mc['dar5']:.1f} < {mc['dar2']:.1f} < "
                    f"{mc['shared_a']:.1f} < {mc['shared_b']:.1f} < {mc['taxi']:.1f}; "
                    f"transit niche {widths[100.0]:.1f} @pi=100 vs "
                    f"{widths[10000.0]:.1f} @pi=10000")
    assert ok


# -- criteria 8-11: simulation-backed -------------------------------------------

BIAS_FLEETS = (120, 150, 200)

MINFLEET_CASES = [
    # (policy, c, simulated minimum reported for pi=100, tolerance +/-15%)
    ("taxi", 1, 110),
    ("shared_b", 2, 100),
    ("shared_a", 2, 90),
    ("dar", 2, 45),
    ("dar", 3, 60),
    ("dar", 5, 60),
]


@pytest.fixture(scope="module")
def taxi_bias_runs():
    runs = {}
    for m in BIAS_FLEETS:
        t0 = time.perf_counter()
        runs[m] = simulate_many(SimConfig(policy="taxi", m=m, pi=PI, seed=100), 10)
        runs[m, "per_rep"] = (time.perf_counter() - t0) / 10
    return runs


@pytest.fixture(scope="module")
def minfleet_results():
    results = {}
    for policy, c, _ in MINFLEET_CASES:
        results[policy, c] = min_feasible_fleet(policy, PI, c=c, seed=11, reps=5)
    return results


@pytest.mark.slow
def test_criterion_8_simulation_bias(capsys, taxi_bias_runs):
    gaps = {}
    ok = True
    for m in BIAS_FLEETS:
        sim = mean_f_t(taxi_bias_runs[m])
        analytic = time_ratio_at_fleet("taxi", PI, K, 1, m)
        gaps[m] = sim - analytic
        ok &= all(r.f_t >= analytic for r in taxi_bias_runs[m])
        ok &= taxi_bias_runs[m, "per_rep"] < 10.0
    shrinking = gaps[120] > gaps[150] > gaps[200] > 0
    ok &= shrinking
    report(capsys, "8", ok, "taxi sim-analytic gaps " +
           ", ".join(f"m={m}: {gaps[m]:+.4f}" for m in BIAS_FLEETS) +
           f"; per-rep {taxi_bias_runs[150, 'per_rep']:.2f} s")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("policy,c,target", MINFLEET_CASES)
def test_criterion_9_min_fleet(capsys, minfleet_results, policy, c, target):
    got = minfleet_results[policy, c].m
    lo, hi = 0.85 * target, 1.15 * target
    ok = lo <= got <= hi
    report(capsys, "9", ok, f"{policy} c={c}: simulated minimum m={got} "
                    f"(target {target} +/- 15% -> [{lo:.1f}, {hi:.1f}])")
    assert ok


@pytest.mark.slow
def test_criterion_10_shift_estimate(capsys):
    _, shift = compare_policy("taxi", PI, [110, 120, 150], seed=200, reps=5)
    ok = 10.0 <= shift <= 30.0
    report(capsys, "10", ok, f"best horizontal shift = {shift:.1f} vehicles")
    assert ok


@pytest.mark.slow
def test_criterion_11_little_self_test(capsys, taxi_bias_runs, minfleet_results):
    checked, worst = 0, 0.0
    ok = True
    for m in BIAS_FLEETS:
        for r in taxi_bias_runs[m]:
            if r.feasible:
                rep = little_check(r, PI)
                checked += 1
                worst = max(worst, rep.rel_error)
                ok &= rep.passed
    for res in minfleet_results.values():
        for batch in res.probes.values():
            for r in batch:
                if r.feasible:
                    rep = little_check(r, PI)
                    checked += 1
                    worst = max(worst, rep.rel_error)
                    ok &= rep.passed
    report(capsys, "11", ok, f"Little's law on {checked} feasible runs, "
                     f"worst rel error {worst:.4f} (limit 0.03)")
    assert ok
