"""Exact transient law of blocking RSA on a small fixed tree.

The Markov chain lives on occupancy bit-vectors n in {0,1}^V; vertex k fills
at rate 1 when k and all its neighbours are empty. The forward equations
dP/dt = M P are integrated with an adaptive Runge-Kutta scheme from the empty
configuration.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .tree_gen import TreeInstance

MAX_ORACLE_VERTICES = 14
RTOL = 1e-12
ATOL = 1e-14
# t = inf is reached once the probability of any still-enabled transition is below this
ACTIVE_MASS_TOL = 1e-12
_HORIZON_STEP = 10.0


class MasterEquationSystem:
    """Forward equations of the parking chain on ``tree``.

    Arrivals at ``tree.blocked`` plus ``extra_blocked`` are switched off.
    """

    def __init__(self, tree: TreeInstance, extra_blocked=(),
                 max_vertices: int = MAX_ORACLE_VERTICES):
        n = tree.n_vertices
        if n > max_vertices:
            raise ValueError(f"oracle handles at most {max_vertices} vertices, tree has {n}")
        if len(tree.parent) and (tree.parent[0] != -1 or len(tree.edges()) != n - 1):
            raise ValueError("oracle input is not a tree")
        self.tree = tree
        self.n = n
        self.blocked = frozenset(tree.blocked) | frozenset(int(v) for v in extra_blocked)
        self.state_dim = 1 << n
        states = np.arange(self.state_dim, dtype=np.int64)
        rows, cols = [], []
        for k in range(n):
            if k in self.blocked:
                continue
            closed = 1 << k
            for j in tree.neighbors(k):
                closed |= 1 << int(j)
            src = states[(states & closed) == 0]
            rows.append(src | (1 << k))
            cols.append(src)
        if rows:
            rows = np.concatenate(rows)
            cols = np.concatenate(cols)
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
        self.exit_rate = np.bincount(cols, minlength=self.state_dim).astype(float)
        gain = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.state_dim,) * 2)
        self.generator = (gain - sp.diags(self.exit_rate)).tocsr()
        self._bits = ((states[:, None] >> np.arange(n)) & 1).astype(bool)

    def _rhs(self, t, p):
        return self.generator @ p

    def distribution(self, times) -> np.ndarray:
        """State probabilities, shape (len(times), 2**n). ``math.inf`` allowed."""
        times = [float(t) for t in times]
        for t in times:
            if math.isnan(t) or t < 0:
                raise ValueError(f"time must be >= 0, got {t!r}")
        p0 = np.zeros(self.state_dim)
        p0[0] = 1.0
        finite = sorted({t for t in times if math.isfinite(t)})
        out = {}
        t_cur, p_cur = 0.0, p0
        if finite:
            sol = solve_ivp(self._rhs, (0.0, finite[-1]), p0, method="DOP853", t_eval=finite,
                            rtol=RTOL, atol=ATOL)
            if not sol.success:
                raise RuntimeError(f"forward-equation integration failed: {sol.message}")
            for i, t in enumerate(finite):
                out[t] = sol.y[:, i]
            t_cur, p_cur = finite[-1], sol.y[:, -1]
        if any(math.isinf(t) for t in times):
            p = p_cur
            while self.active_mass(p) >= ACTIVE_MASS_TOL:
                sol = solve_ivp(self._rhs, (t_cur, t_cur + _HORIZON_STEP), p, method="DOP853",
                                rtol=RTOL, atol=ATOL)
                if not sol.success:
                    raise RuntimeError(f"forward-equation integration failed: {sol.message}")
                t_cur += _HORIZON_STEP
                p = sol.y[:, -1]
            out[math.inf] = p
        return np.array([out[t] for t in times])

    def active_mass(self, p) -> float:
        """Probability of states that still have an enabled arrival."""
        return float(p[self.exit_rate > 0].sum())

    def occupancy(self, times) -> np.ndarray:
        """E n_v(t), shape (len(times), n)."""
        return self.distribution(times) @ self._bits

    def vacancy_correlation(self, A, times) -> np.ndarray:
        """Probability that every vertex in A is empty, one value per time."""
        mask = 0
        for v in A:
            mask |= 1 << int(v)
        empty = (np.arange(self.state_dim) & mask) == 0
        return self.distribution(times)[:, empty].sum(axis=1)


def _check_vertices(tree, vertices):
    bad = [v for v in vertices if not 0 <= int(v) < tree.n_vertices]
    if bad:
        raise ValueError(f"vertices {sorted(bad)} not in tree of {tree.n_vertices} vertices")


def exact_transient(tree: TreeInstance, t: float) -> np.ndarray:
    """Exact per-vertex occupation probabilities at time t."""
    return MasterEquationSystem(tree).occupancy([t])[0]


def exact_correlation(tree: TreeInstance, A, B, t: float) -> float:
    """Exact C_t(A|B): every vertex of A empty, with arrivals on B switched off."""
    _check_vertices(tree, list(A) + list(B))
    return float(MasterEquationSystem(tree, extra_blocked=B).vacancy_correlation(A, [t])[0])
