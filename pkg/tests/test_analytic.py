import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy.integrate import quad

from treepark.analytic import AlphaSolver, adaptive_integrate, gk15, regular_closed_form
from treepark.degree_dist import make_custom, make_geometric_shifted, make_regular

INF = math.inf
U_GRID = [i / 10 for i in range(21)]
T_GRID = [0.25, 0.5, 1.0, 2.0, 4.0, INF]


def shipped():
    return ([make_regular(D) for D in (2, 3, 4, 5)]
            + [make_geometric_shifted(p) for p in (0.3, 0.5, 0.9)]
            + [make_custom([(2, 0.5), (4, 0.5)])])


# hand-derived antiderivatives of x / G(x)
def phi_exact(dist, a):
    if dist.kind == "regular":
        D = dist.D
        return -math.log(a) if D == 2 else (a ** (2 - D) - 1) / (D - 2)
    if dist.kind == "geometric":
        p = dist.p
        return (-math.log(a) - (1 - p) * (1 - a)) / p
    assert dist.pmf == ((2, 0.5), (4, 0.5))
    return -math.log(2) - 2 * math.log(a) + math.log1p(a * a)


def test_gk15_exact_on_polynomials():
    for d in range(0, 23):
        k, _ = gk15(lambda x: x**d, 0.0, 1.0)
        assert k == pytest.approx(1 / (d + 1), abs=1e-15)


def test_adaptive_integrate_against_quad():
    f = lambda x: np.exp(-3 * x) / (1 + x * x)
    ref, _ = quad(f, 0.1, 2.0, epsabs=1e-14, epsrel=1e-14)
    assert adaptive_integrate(f, 0.1, 2.0, 1e-12) == pytest.approx(ref, abs=1e-12)


def test_phi_examples():
    assert AlphaSolver(make_regular(2)).phi(math.exp(-1)) == pytest.approx(1.0, abs=1e-12)
    assert AlphaSolver(make_regular(4)).phi(0.5) == pytest.approx(1.5, abs=1e-12)
    for dist in shipped():
        assert AlphaSolver(dist).phi(1.0) == 0.0


@pytest.mark.parametrize("dist", shipped(), ids=lambda d: d.describe())
@pytest.mark.parametrize("a", [0.9, 0.5, 0.37, 0.2, 0.05, 0.013])
def test_phi_matches_antiderivative(dist, a):
    assert AlphaSolver(dist).phi(a) == pytest.approx(phi_exact(dist, a), abs=1e-11 * max(1, phi_exact(dist, a)))


def test_phi_other_custom_against_quad():
    dist = make_custom([(2, 0.2), (3, 0.3), (7, 0.5)])
    solver = AlphaSolver(dist)
    for a in (0.8, 0.4, 0.1):
        ref, _ = quad(lambda x: x / float(dist.G(x)), a, 1.0, epsabs=1e-13, epsrel=1e-12)
        assert solver.phi(a) == pytest.approx(ref, abs=1e-11)


@pytest.mark.parametrize("a", [0.0, -0.5, 1.01])
def test_phi_domain(a):
    with pytest.raises(ValueError):
        AlphaSolver(make_regular(2)).phi(a)


def test_alpha_examples():
    assert AlphaSolver(make_regular(2)).alpha_of_u(1.0) == pytest.approx(math.exp(-1), abs=1e-11)
    assert AlphaSolver(make_regular(3)).alpha_of_u(1.0) == pytest.approx(0.5, abs=1e-11)
    for dist in shipped():
        assert AlphaSolver(dist).alpha_of_u(0.0) == 1.0


@pytest.mark.parametrize("D", [2, 3, 4, 5, 10])
def test_alpha_regular_inverse(D):
    solver = AlphaSolver(make_regular(D))
    for u in U_GRID:
        exact = math.exp(-u) if D == 2 else (1 + (D - 2) * u) ** (-1 / (D - 2))
        assert solver.alpha_of_u(u) == pytest.approx(exact, abs=1e-11)


@pytest.mark.parametrize("dist", shipped(), ids=lambda d: d.describe())
def test_round_trip_and_monotone(dist):
    solver = AlphaSolver(dist)
    alphas = [solver.alpha_of_u(u) for u in U_GRID]
    for u, a in zip(U_GRID, alphas):
        assert abs(solver.phi(a) - u) <= 1e-9
    assert all(x > y for x, y in zip(alphas, alphas[1:]))


def test_alpha_large_u():
    solver = AlphaSolver(make_regular(2))
    assert solver.alpha_of_u(30.0) == pytest.approx(math.exp(-30), rel=1e-9)


def test_alpha_rejects_negative():
    with pytest.raises(ValueError):
        AlphaSolver(make_regular(2)).alpha_of_u(-1e-3)


def test_occupancy_examples():
    assert AlphaSolver(make_regular(5)).occupancy(0.0) == 0.0
    assert AlphaSolver(make_regular(2)).occupancy(INF) == pytest.approx(0.432332358, abs=1e-9)
    assert AlphaSolver(make_regular(3)).occupancy(INF) == pytest.approx(0.375, abs=1e-12)
    with pytest.raises(ValueError):
        AlphaSolver(make_regular(2)).occupancy(-1.0)


def test_parking_constants():
    assert AlphaSolver(make_regular(2)).parking_constant() == pytest.approx(0.4323323584, abs=1e-9)
    assert AlphaSolver(make_regular(4)).parking_constant() == pytest.approx(1 / 3, abs=1e-12)
    assert (AlphaSolver(make_geometric_shifted(1.0)).parking_constant()
            == pytest.approx(AlphaSolver(make_regular(2)).parking_constant(), abs=1e-10))


def test_closed_form_examples():
    assert regular_closed_form(2, INF) == pytest.approx((1 - math.exp(-2)) / 2, abs=1e-15)
    assert regular_closed_form(3, 0.0) == 0.0
    assert regular_closed_form(5, 1.0) == pytest.approx(AlphaSolver(make_regular(5)).occupancy(1.0), abs=1e-9)
    for bad in [(1, 1.0), (3, -1.0)]:
        with pytest.raises(ValueError):
            regular_closed_form(*bad)


@pytest.mark.parametrize("D", [2, 3, 4, 5, 10])
def test_closed_form_agreement(D):
    solver = AlphaSolver(make_regular(D))
    for t in T_GRID:
        assert abs(solver.occupancy(t) - regular_closed_form(D, t)) <= 1e-9


@pytest.mark.parametrize("dist", shipped(), ids=lambda d: d.describe())
def test_occupancy_increasing_below_half(dist):
    solver = AlphaSolver(dist)
    ts = [0.0, 0.1, 0.3, 0.7, 1.5, 3.0, 6.0, 12.0, INF]
    vals = [solver.occupancy(t) for t in ts]
    assert all(0.0 <= v < 0.5 for v in vals)
    assert all(x < y for x, y in zip(vals, vals[1:]))


def test_conditional_vacancy_examples():
    assert AlphaSolver(make_regular(4)).conditional_vacancy_y(0.0) == 1.0
    assert AlphaSolver(make_regular(2)).conditional_vacancy_y(INF) == pytest.approx(math.exp(-1), abs=1e-11)
    assert AlphaSolver(make_regular(3)).conditional_vacancy_y(math.log(2)) == pytest.approx(2 / 3, abs=1e-11)
    with pytest.raises(ValueError):
        AlphaSolver(make_regular(3)).conditional_vacancy_y(-0.1)


def test_derivative_examples():
    for dist in shipped():
        solver = AlphaSolver(dist)
        assert solver.occupancy_derivative(0.0) == pytest.approx(1.0, abs=1e-15)
        assert solver.occupancy_derivative(INF) == 0.0
    with pytest.raises(ValueError):
        AlphaSolver(make_regular(2)).occupancy_derivative(-1.0)


@pytest.mark.parametrize("dist", shipped() + [make_regular(10)], ids=lambda d: d.describe())
def test_derivative_matches_central_difference(dist):
    solver = AlphaSolver(dist)
    h = 1e-4
    for t in (0.25, 0.5, 1.0, 2.0, 4.0):
        fd = (solver.occupancy(t + h) - solver.occupancy(t - h)) / (2 * h)
        assert abs(fd - solver.occupancy_derivative(t)) <= 1e-6


@pytest.mark.parametrize("dist", shipped(), ids=lambda d: d.describe())
def test_vacancy_ode(dist):
    solver = AlphaSolver(dist)
    h = 1e-4
    for s in (0.25, 0.5, 1.0, 2.0):
        dy = (solver.conditional_vacancy_y(s + h) - solver.conditional_vacancy_y(s - h)) / (2 * h)
        y = solver.conditional_vacancy_y(s)
        assert abs(-dy - float(dist.G(y)) / y * math.exp(-s)) <= 1e-6


@pytest.mark.parametrize("dist", [make_regular(3), make_geometric_shifted(0.5),
                                  make_custom([(2, 0.5), (4, 0.5)])], ids=lambda d: d.describe())
def test_integrated_derivative_reproduces_occupancy(dist):
    solver = AlphaSolver(dist)
    for t in (0.5, 1.0, 3.0):
        integral, _ = quad(solver.occupancy_derivative, 0.0, t, epsabs=1e-13, epsrel=1e-13)
        assert abs(integral - solver.occupancy(t)) <= 1e-8


def test_curve_rows():
    rows = AlphaSolver(make_regular(2)).curve([0.0, 1.0, INF])
    assert rows[0]["occupancy"] == 0.0 and rows[0]["alpha"] == 1.0
    assert rows[2]["u"] == 1.0 and rows[2]["derivative"] == 0.0


def test_concurrent_calls_match_serial():
    us = [i / 50 for i in range(101)]
    serial = [AlphaSolver(make_geometric_shifted(0.3)).alpha_of_u(u) for u in us]
    shared = AlphaSolver(make_geometric_shifted(0.3))
    with ThreadPoolExecutor(8) as pool:
        parallel = list(pool.map(shared.alpha_of_u, us))
    assert parallel == serial
