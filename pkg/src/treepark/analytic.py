"""Exact occupation density of blocking RSA on random trees.

For a degree law with generating function G put

    phi(a) = integral_a^1 x / G(x) dx,

and let alpha(u) solve phi(alpha) = u. The occupation probability of a
vertex, averaged over the dynamics and over trees, is

    rho(t) = (1 - alpha(1 - exp(-t))**2) / 2,

and the vacancy of a root neighbour on a rooted tree whose root has seen no
arrival is y(s) = alpha(1 - exp(-s)).
"""

from __future__ import annotations

import math
import threading

import numpy as np

from .degree_dist import DegreeDistribution

INF = math.inf

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (positive half).
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (and the centre)
_GAUSS_IDX = np.array([1, 3, 5, 7, 9, 11, 13])
_GAUSS_W = np.concatenate([_WG[:-1], _WG[::-1]])

_MAX_BISECTIONS = 60
_ROUNDOFF = 50 * np.finfo(float).eps
_MAX_DYADIC = 1000


def gk15(f, a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod 7/15 panel: (Kronrod estimate, |K - G|)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = f(mid + half * _NODES)
    k = half * float(_KRONROD_W @ fx)
    g = half * float(_GAUSS_W @ fx[_GAUSS_IDX])
    return k, abs(k - g)


def adaptive_integrate(f, a: float, b: float, tol: float, _depth: int = 0) -> float:
    """Integrate a vectorized ``f`` over [a, b] to absolute ``tol`` by bisection.

    Panels are also accepted once the error estimate reaches the roundoff
    level of the panel value, where ``tol`` is no longer attainable.
    """
    if a == b:
        return 0.0
    k, err = gk15(f, a, b)
    if err <= max(tol, _ROUNDOFF * abs(k)) or _depth >= _MAX_BISECTIONS:
        return k
    m = 0.5 * (a + b)
    return (adaptive_integrate(f, a, m, 0.5 * tol, _depth + 1)
            + adaptive_integrate(f, m, b, 0.5 * tol, _depth + 1))


def _u_of_t(t: float) -> float:
    if t < 0 or math.isnan(t):
        raise ValueError(f"time must be >= 0, got {t!r}")
    if t == INF:
        return 1.0
    return -math.expm1(-t)


class AlphaSolver:
    """Evaluates phi, its inverse alpha(u), and the occupation density for one law.

    The integral from 1 down to each dyadic point 2**-k is cached, so phi at
    any alpha costs one short adaptive quadrature on a single panel. The
    cache only grows, under a lock, which keeps concurrent callers consistent.
    """

    def __init__(self, dist: DegreeDistribution, quad_tol: float = 1e-12,
                 root_tol: float = 1e-12):
        self.dist = dist
        self.quad_tol = quad_tol
        self.root_tol = root_tol
        self._lock = threading.Lock()
        # _dyadic[k] = phi(2**-k)
        self._dyadic = [0.0]
        self._panel_tol = quad_tol / 4

    def _integrand(self, x):
        return x / self.dist.G(x)

    def _phi_dyadic(self, k: int) -> float:
        cache = self._dyadic
        if k < len(cache):
            return cache[k]
        with self._lock:
            while len(cache) <= k:
                j = len(cache)
                lo, hi = math.ldexp(1.0, -j), math.ldexp(1.0, 1 - j)
                cache.append(cache[-1] + adaptive_integrate(self._integrand, lo, hi, self._panel_tol))
            return cache[k]

    def _panel_of(self, alpha: float) -> int:
        """Index k with 2**-k <= alpha < 2**(1-k) (k >= 1), or 0 for alpha = 1."""
        if alpha == 1.0:
            return 0
        m, e = math.frexp(alpha)  # alpha = m * 2**e, 0.5 <= m < 1
        return 1 - e

    def phi(self, alpha: float) -> float:
        """integral_alpha^1 x / G(x) dx."""
        if not (0.0 < alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
        k = self._panel_of(alpha)
        if k == 0:
            return 0.0
        hi = math.ldexp(1.0, 1 - k)
        return self._phi_dyadic(k - 1) + adaptive_integrate(self._integrand, alpha, hi, self._panel_tol)

    def dphi(self, alpha: float) -> float:
        """d phi / d alpha = -alpha / G(alpha)."""
        return -alpha / float(self.dist.G(alpha))

    def alpha_of_u(self, u: float) -> float:
        """Solve phi(alpha) = u for alpha in (0, 1]."""
        if u < 0 or math.isnan(u):
            raise ValueError(f"u must be >= 0, got {u!r}")
        if u == 0:
            return 1.0
        # bracket: phi(2**-k) >= u, halving from 1/2 as needed
        k = 1
        while self._phi_dyadic(k) < u:
            k += 1
            if k > _MAX_DYADIC:
                raise OverflowError(f"alpha({u}) underflows double precision")
        lo, hi = math.ldexp(1.0, -k), math.ldexp(1.0, 1 - k)
        phi_hi = self._phi_dyadic(k - 1)
        f_lo = self._phi_dyadic(k) - u  # >= 0
        if f_lo == 0.0:
            return lo
        # f(alpha) = phi(alpha) - u decreases from f_lo > 0 at lo to phi_hi - u < 0 at hi.
        x = lo + (hi - lo) * f_lo / (f_lo - (phi_hi - u))
        ftol = 10 * self.quad_tol
        for _ in range(200):
            fx = self.phi(x) - u
            if abs(fx) <= ftol:
                return x
            if fx > 0:
                lo = x
            else:
                hi = x
            if hi - lo <= self.root_tol * max(1.0, x):
                return 0.5 * (lo + hi)
            step = fx / self.dphi(x)
            xn = x - step
            if not (lo < xn < hi):
                xn = 0.5 * (lo + hi)
            elif abs(step) <= self.root_tol:
                return xn
            x = xn
        raise RuntimeError(f"alpha({u}) inversion did not converge")

    def occupancy(self, t: float) -> float:
        """Occupation probability at time t (t may be ``math.inf``)."""
        a = self.alpha_of_u(_u_of_t(t))
        return 0.5 * (1.0 - a * a)

    def parking_constant(self) -> float:
        return self.occupancy(INF)

    def conditional_vacancy_y(self, s: float) -> float:
        """Averaged vacancy of a root neighbour given no arrival at the root by time s."""
        return self.alpha_of_u(_u_of_t(s))

    def occupancy_derivative(self, t: float) -> float:
        """d/dt of :meth:`occupancy`, i.e. G(y(t)) exp(-t)."""
        u = _u_of_t(t)
        if t == INF:
            return 0.0
        y = self.alpha_of_u(u)
        return float(self.dist.G(y)) * math.exp(-t)

    def curve(self, times) -> list[dict]:
        """Rows (t, u, alpha, occupancy, derivative) for each requested time."""
        rows = []
        for t in times:
            u = _u_of_t(t)
            a = self.alpha_of_u(u)
            deriv = 0.0 if t == INF else float(self.dist.G(a)) * math.exp(-t)
            rows.append({"t": t, "u": u, "alpha": a,
                         "occupancy": 0.5 * (1.0 - a * a), "derivative": deriv})
        return rows


def regular_closed_form(D: int, t: float) -> float:
    """Occupation probability on the D-regular tree, written out directly."""
    if int(D) != D or D < 2:
        raise ValueError(f"D must be an integer >= 2, got {D!r}")
    u = _u_of_t(t)
    if D == 2:
        return 0.5 * (1.0 - math.exp(-2.0 * u))
    return 0.5 * (1.0 - (1.0 + (D - 2) * u) ** (-2.0 / (D - 2)))
