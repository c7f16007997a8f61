"""Acceptance criteria, one test each, at their stated tolerances.

Every test records a single PASS/FAIL line, printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from treepark import verify
from treepark.analytic import AlphaSolver, regular_closed_form
from treepark.degree_dist import make_custom, make_geometric_shifted, make_regular
from treepark.dynamics import (ArrivalSchedule, draw_arrivals, outcome_violations, run_rsa,
                               sample_focal_park_times, simulate_park_times)
from treepark.tree_gen import sample_ball, sample_rooted_half_tree

INF = math.inf
SEED = 0
N = 100_000


def report(number, title, passed, detail, elapsed=None, limit=None):
    if limit is not None:
        passed = passed and elapsed < limit
        detail += f"; {elapsed:.2f}s (limit {limit:g}s)"
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def timed(fn, *args, **kw):
    start = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - start


def test_c01_classical_constant():
    start = time.perf_counter()
    value = AlphaSolver(make_regular(2)).parking_constant()
    elapsed = time.perf_counter() - start
    err = abs(value - 0.4323323583816936)
    report(1, "classical constant", err <= 1e-9, f"value {value:.16f}, error {err:.2e}",
           elapsed, 1.0)


def test_c02_closed_forms():
    r, elapsed = timed(verify.check_closed_form, 1e-9)
    spots = (abs(AlphaSolver(make_regular(3)).parking_constant() - 0.375) <= 1e-9
             and abs(AlphaSolver(make_regular(4)).parking_constant() - 1 / 3) <= 1e-9
             and regular_closed_form(3, INF) == 0.375)
    report(2, "regular closed forms", r.passed and spots,
           f"max error {r.metric:.2e} over D in (2,3,4,5,10) x 6 times", elapsed, 5.0)


def test_c03_round_trip():
    r = verify.check_round_trip(1e-9)
    report(3, "round trip", r.passed, f"max |phi(alpha(u)) - u| = {r.metric:.2e} on 8 laws")


def test_c04_derivative_identities():
    r = verify.check_derivative(1e-6)
    report(4, "derivative identities", r.passed,
           f"occupancy {r.details['occupancy_derivative']:.2e}, "
           f"vacancy ODE {r.details['vacancy_ode']:.2e}")


def test_c05_oracle_equivalence():
    r, elapsed = timed(verify.check_oracle_mc, 3.0, N, SEED)
    report(5, "oracle equivalence", r.passed,
           f"max |z| {r.metric:.2f} at {r.details['worst_at']}, n={N}", elapsed, 120.0)


def test_c06_theorem_desk_scale():
    r, elapsed = timed(verify.check_theorem_mc, 3.0, N, SEED)
    zs = ", ".join(f"{row['config']}@{row['t']} z={row['z']:+.2f}" for row in r.details["rows"])
    report(6, "theorem vs Monte Carlo", r.passed, zs, elapsed, 600.0)


def test_c07_conditional_vacancy():
    r, elapsed = timed(verify.check_conditional_vacancy, 3.0, N, SEED)
    zs = ", ".join(f"{row['case']} z={row['z']:+.2f}" for row in r.details["rows"])
    report(7, "conditional vacancy", r.passed, zs, elapsed, 180.0)


def test_c08_factorization():
    r = verify.check_factorization(3.0, N, SEED)
    zs = ", ".join(f"t={row['t']:g} z={row['z']:+.2f}" for row in r.details["rows"])
    report(8, "star factorization", r.passed, zs)


FUZZ_CASES = 10_000
FUZZ_TIMES = (0.0, 0.1, 0.5, 1.0, 2.0, INF)


def _fuzz_violations(n_cases, seed):
    rng = np.random.default_rng(seed)
    dists = [make_regular(2), make_regular(3), make_geometric_shifted(0.5),
             make_custom([(2, 0.6), (5, 0.4)])]
    counts = {"hard-core/jamming": 0, "ordering": 0, "monotone": 0}
    for i in range(n_cases):
        dist = dists[i % len(dists)]
        sampler = sample_rooted_half_tree if i % 5 == 0 else sample_ball
        tree = sampler(dist, 1 + i % 4, rng)
        arr = draw_arrivals(tree, rng)
        out = run_rsa(tree, arr)
        counts["hard-core/jamming"] += bool(outcome_violations(tree, arr, out))
        warped = run_rsa(tree, ArrivalSchedule(np.log1p(arr.times) + arr.times**3))
        counts["ordering"] += not np.array_equal(np.isfinite(out.park_time),
                                                 np.isfinite(warped.park_time))
        occ = np.array([out.occupancy(t) for t in FUZZ_TIMES])
        counts["monotone"] += bool(np.any(np.diff(occ.astype(int), axis=0) < 0))
    return counts


def _parallel_mismatches():
    bad = 0
    for method in ("local", "ball"):
        n = 2 * 4096 + 33 if method == "local" else 5000
        a = sample_focal_park_times(make_geometric_shifted(0.5), 4, n, 7, method=method, threads=1)
        b = sample_focal_park_times(make_geometric_shifted(0.5), 4, n, 7, method=method, threads=4)
        bad += not np.array_equal(a, b)
    tree = sample_ball(make_regular(3), 3, np.random.default_rng(1))
    bad += not np.array_equal(simulate_park_times(tree, 10_000, 7, threads=1),
                              simulate_park_times(tree, 10_000, 7, threads=3))
    return bad


def test_c09_property_suite():
    counts = _fuzz_violations(FUZZ_CASES, SEED)
    counts["parallel determinism"] = _parallel_mismatches()
    total = sum(counts.values())
    detail = ", ".join(f"{k} {v}" for k, v in counts.items())
    report(9, "property suite", total == 0, f"{FUZZ_CASES} fuzz cases; violations: {detail}")


def test_c10_radius_stability():
    r = verify.check_radius_stability(3.0, N, SEED)
    zs = ", ".join(f"{row['config']}@{row['t']} z={row['z']:+.2f}" for row in r.details["rows"])
    report(10, "radius stability", r.passed, zs)
