"""Bundled checks comparing the exact formula, the simulator and the oracle.

Each check returns a :class:`CheckResult`; numerical checks compare an
absolute error against a tolerance, statistical ones compare the largest
|z| against a threshold.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .analytic import AlphaSolver, regular_closed_form
from .degree_dist import make_custom, make_geometric_shifted, make_regular
from .dynamics import (Estimate, estimate_conditional_vacancy, estimate_correlation,
                       estimate_root_occupancy_curve, estimate_vertex_occupancy)
from .oracle import MasterEquationSystem
from .tree_gen import from_edges, regular_ball

INF = math.inf

DEFAULT_TOLERANCES = {
    "closed_form": 1e-9,
    "round_trip": 1e-9,
    "derivative": 1e-6,
    "oracle_mc": 3.0,
    "theorem_mc": 3.0,
    "radius_stability": 3.0,
    "conditional_vacancy": 3.0,
    "factorization": 3.0,
}

CLOSED_FORM_DEGREES = (2, 3, 4, 5, 10)
GRID_TIMES = (0.25, 0.5, 1.0, 2.0, 4.0, INF)
ORACLE_TIMES = (0.5, 1.0, 2.0, INF)
DERIVATIVE_TIMES = (0.25, 0.5, 1.0, 2.0, 4.0)
FD_STEP = 1e-4


@dataclass
class CheckResult:
    name: str
    passed: bool
    metric: float
    tolerance: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["metric"] = _json_float(self.metric)
        return d


def _json_float(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def shipped_distributions():
    return ([make_regular(D) for D in (2, 3, 4, 5)]
            + [make_geometric_shifted(p) for p in (0.3, 0.5, 0.9)]
            + [make_custom([(2, 0.5), (4, 0.5)])])


def random_recursive_tree(n: int, seed: int):
    """Each vertex i > 0 attaches to a uniformly chosen earlier vertex."""
    rng = np.random.default_rng(seed)
    edges = [(int(rng.integers(i)), i) for i in range(1, n)]
    return from_edges(edges)[0]


def oracle_trees(seed: int = 2024):
    path4 = from_edges([(0, 1), (1, 2), (2, 3)])[0]
    return {
        "single": from_edges([])[0],
        "edge": from_edges([(0, 1)])[0],
        "path4": path4,
        "star4": regular_ball(4, 1),
        "random10": random_recursive_tree(10, seed),
    }


# (label, dist, radius, n_samples); the geometric ball is much larger, hence fewer samples
def theorem_configs(n_samples: int):
    return [
        ("regular2", make_regular(2), 14, n_samples),
        ("regular3", make_regular(3), 10, n_samples),
        ("geometric0.5", make_geometric_shifted(0.5), 12, max(1, n_samples // 5)),
    ]


THEOREM_MAX_VERTICES = 10**6


def check_closed_form(tol):
    worst, where = 0.0, None
    for D in CLOSED_FORM_DEGREES:
        solver = AlphaSolver(make_regular(D))
        for t in GRID_TIMES:
            err = abs(solver.occupancy(t) - regular_closed_form(D, t))
            if where is None or err > worst:
                worst, where = err, {"D": D, "t": str(t)}
    return CheckResult("closed_form", worst <= tol, worst, tol, {"worst_at": where})


def check_round_trip(tol):
    worst = 0.0
    for dist in shipped_distributions():
        solver = AlphaSolver(dist)
        for i in range(21):
            u = i / 10
            worst = max(worst, abs(solver.phi(solver.alpha_of_u(u)) - u))
    return CheckResult("round_trip", worst <= tol, worst, tol)


def check_derivative(tol):
    """Finite-difference checks of d rho/dt = G(y) e^-t and -dy/ds = G(y)/y e^-s."""
    worst_rho = worst_y = 0.0
    h = FD_STEP
    for D in CLOSED_FORM_DEGREES:
        solver = AlphaSolver(make_regular(D))
        for t in DERIVATIVE_TIMES:
            fd = (solver.occupancy(t + h) - solver.occupancy(t - h)) / (2 * h)
            worst_rho = max(worst_rho, abs(fd - solver.occupancy_derivative(t)))
    for dist in shipped_distributions():
        solver = AlphaSolver(dist)
        for s in (0.25, 0.5, 1.0, 2.0):
            dy = (solver.conditional_vacancy_y(s + h) - solver.conditional_vacancy_y(s - h)) / (2 * h)
            y = solver.conditional_vacancy_y(s)
            worst_y = max(worst_y, abs(-dy - float(dist.G(y)) / y * math.exp(-s)))
    worst = max(worst_rho, worst_y)
    return CheckResult("derivative", worst <= tol, worst, tol,
                       {"occupancy_derivative": worst_rho, "vacancy_ode": worst_y})


def check_oracle_mc(tol, n_samples, seed, threads=1):
    worst, where = 0.0, None
    per_tree = {}
    for name, tree in oracle_trees().items():
        exact = MasterEquationSystem(tree).occupancy(ORACLE_TIMES)
        est = estimate_vertex_occupancy(tree, ORACLE_TIMES, n_samples, seed, threads)
        tree_worst = 0.0
        for i, t in enumerate(ORACLE_TIMES):
            for v, e in enumerate(est[t]):
                z = abs(e.z_score(exact[i, v]))
                tree_worst = max(tree_worst, z)
                if where is None or z > worst:
                    worst, where = z, {"tree": name, "vertex": v, "t": str(t)}
        per_tree[name] = tree_worst
    return CheckResult("oracle_mc", worst <= tol, worst, tol,
                       {"worst_at": where, "max_abs_z_per_tree": per_tree})


def check_theorem_mc(tol, n_samples, seed, threads=1):
    worst, rows = 0.0, []
    for name, dist, radius, n in theorem_configs(n_samples):
        solver = AlphaSolver(dist)
        ests = estimate_root_occupancy_curve(dist, [1.0, INF], radius, n, seed,
                                             max_vertices=THEOREM_MAX_VERTICES, threads=threads)
        for t, e in zip((1.0, INF), ests):
            exact = solver.occupancy(t)
            z = e.z_score(exact)
            worst = max(worst, abs(z))
            rows.append({"config": name, "t": str(t), "exact": exact, "mc": e.mean,
                         "stderr": e.std_err, "z": z})
    return CheckResult("theorem_mc", worst <= tol, worst, tol, {"rows": rows})


def _combined_z(a: Estimate, b: Estimate) -> float:
    se = math.hypot(a.std_err, b.std_err)
    diff = a.mean - b.mean
    if se > 0:
        return diff / se
    return 0.0 if diff == 0 else INF


def check_radius_stability(tol, n_samples, seed, threads=1):
    worst, rows = 0.0, []
    for name, dist, radius, n in theorem_configs(n_samples):
        kw = dict(max_vertices=THEOREM_MAX_VERTICES, threads=threads)
        small = estimate_root_occupancy_curve(dist, [1.0, INF], radius, n, seed, **kw)
        large = estimate_root_occupancy_curve(dist, [1.0, INF], radius + 2, n, seed + 1, **kw)
        for t, a, b in zip((1.0, INF), small, large):
            z = _combined_z(a, b)
            worst = max(worst, abs(z))
            rows.append({"config": name, "t": str(t), "radius": radius, "mc_R": a.mean,
                         "mc_R_plus_2": b.mean, "z": z})
    return CheckResult("radius_stability", worst <= tol, worst, tol, {"rows": rows})


def conditional_vacancy_cases():
    return [
        ("regular2_s0", make_regular(2), 0.0, 12),
        ("regular2_sinf", make_regular(2), INF, 12),
        ("regular3_sln2", make_regular(3), math.log(2.0), 10),
    ]


def check_conditional_vacancy(tol, n_samples, seed, threads=1):
    worst, rows = 0.0, []
    for name, dist, s, radius in conditional_vacancy_cases():
        exact = AlphaSolver(dist).conditional_vacancy_y(s)
        e = estimate_conditional_vacancy(dist, s, radius, n_samples, seed, threads=threads)
        z = e.z_score(exact)
        worst = max(worst, abs(z))
        rows.append({"case": name, "exact": exact, "mc": e.mean, "stderr": e.std_err, "z": z})
    return CheckResult("conditional_vacancy", worst <= tol, worst, tol, {"rows": rows})


def factorization_z(tree, root: int, t: float, n_samples: int, seed: int, threads=1):
    """Joint vacancy of the root's neighbours given no arrival at the root, versus
    the product of single-branch estimates, each simulated on its own branch."""
    nbrs = [int(v) for v in tree.neighbors(root)]
    joint = estimate_correlation(tree, nbrs, [root], t, n_samples, seed, threads)
    prod, var = 1.0, 0.0
    parts = []
    for i, v in enumerate(nbrs):
        branch = _branch(tree, root, v)
        e = estimate_correlation(branch, [1], [0], t, n_samples, seed + 1 + i, threads)
        parts.append(e)
        prod *= e.mean
    for e in parts:
        if e.mean > 0:
            var += (prod / e.mean * e.std_err) ** 2
    se = math.sqrt(joint.std_err**2 + var)
    diff = joint.mean - prod
    z = diff / se if se > 0 else (0.0 if diff == 0 else INF)
    return z, joint, prod


def _branch(tree, root, v):
    """Subtree hanging from ``root`` through neighbour ``v``, relabelled so the
    root is 0 and ``v`` is 1."""
    keep = [root, v]
    stack = [(v, root)]
    edges = [(0, 1)]
    label = {root: 0, v: 1}
    while stack:
        u, par = stack.pop()
        for w in tree.neighbors(u):
            w = int(w)
            if w == par:
                continue
            label[w] = len(keep)
            keep.append(w)
            edges.append((label[u], label[w]))
            stack.append((w, u))
    return from_edges(edges)[0]


def check_factorization(tol, n_samples, seed, threads=1):
    star = regular_ball(3, 1)
    worst, rows = 0.0, []
    for t in (0.5, 1.0, 2.0):
        z, joint, prod = factorization_z(star, 0, t, n_samples, seed, threads)
        worst = max(worst, abs(z))
        rows.append({"t": t, "joint": joint.mean, "product": prod, "z": z})
    return CheckResult("factorization", worst <= tol, worst, tol, {"rows": rows})


CHECKS = {
    "closed_form": lambda tol, n, seed, threads: check_closed_form(tol),
    "round_trip": lambda tol, n, seed, threads: check_round_trip(tol),
    "derivative": lambda tol, n, seed, threads: check_derivative(tol),
    "oracle_mc": check_oracle_mc,
    "theorem_mc": check_theorem_mc,
    "radius_stability": check_radius_stability,
    "conditional_vacancy": check_conditional_vacancy,
    "factorization": check_factorization,
}


def run_checks(names=None, tolerances=None, n_samples: int = 20_000, seed: int = 0,
               threads: int = 1) -> list[CheckResult]:
    names = list(CHECKS) if names is None else list(names)
    if not names:
        raise ValueError("empty check list")
    unknown = [c for c in names if c not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks {unknown}; available: {sorted(CHECKS)}")
    tol = dict(DEFAULT_TOLERANCES)
    for key, value in (tolerances or {}).items():
        if key not in tol:
            raise ValueError(f"unknown tolerance key {key!r}")
        tol[key] = float(value)
    return [CHECKS[c](tol[c], n_samples, seed, threads) for c in names]
