"""Degree distributions on {2, 3, ...} and their generating functions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

REGULAR = "regular"
GEOMETRIC = "geometric"
CUSTOM = "custom"

# integer codes understood by the compiled samplers in dynamics
KIND_CODES = {REGULAR: 0, GEOMETRIC: 1, CUSTOM: 2}


@dataclass(frozen=True)
class DegreeDistribution:
    """Law of the i.i.d. vertex degrees D_i.

    Build instances with :func:`make_regular`, :func:`make_geometric_shifted`
    or :func:`make_custom`; the constructors validate their arguments.
    """

    kind: str
    D: int = 0
    p: float = 0.0
    pmf: tuple[tuple[int, float], ...] = ()
    _ks: np.ndarray = field(default=None, repr=False, compare=False)
    _cdf: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == CUSTOM:
            ks = np.array([k for k, _ in self.pmf], dtype=np.int64)
            cdf = np.cumsum([a for _, a in self.pmf])
            cdf[-1] = 1.0
        elif self.kind == REGULAR:
            ks = np.array([self.D], dtype=np.int64)
            cdf = np.ones(1)
        else:
            ks = np.zeros(1, dtype=np.int64)
            cdf = np.ones(1)
        object.__setattr__(self, "_ks", ks)
        object.__setattr__(self, "_cdf", cdf)

    def prob(self, k: int) -> float:
        """Return a_k."""
        if self.kind == REGULAR:
            return 1.0 if k == self.D else 0.0
        if self.kind == GEOMETRIC:
            return self.p * (1.0 - self.p) ** (k - 2) if k >= 2 else 0.0
        return dict(self.pmf).get(k, 0.0)

    def G(self, s):
        """Generating function, vectorized over ``s``. No domain checks."""
        s = np.asarray(s, dtype=float)
        if self.kind == REGULAR:
            return s**self.D
        if self.kind == GEOMETRIC:
            return self.p * s * s / (1.0 - (1.0 - self.p) * s)
        out = np.zeros_like(s)
        for k, a in self.pmf:
            out = out + a * s**k
        return out

    @property
    def mean_degree(self) -> float:
        if self.kind == REGULAR:
            return float(self.D)
        if self.kind == GEOMETRIC:
            # 2 + mean number of failures of a geometric on {0, 1, ...}
            return 2.0 + (1.0 - self.p) / self.p
        return math.fsum(k * a for k, a in self.pmf)

    @property
    def min_degree(self) -> int:
        if self.kind == REGULAR:
            return self.D
        if self.kind == GEOMETRIC:
            return 2
        return min(k for k, a in self.pmf if a > 0)

    def sampler_params(self):
        """Flat parameters for the compiled samplers: (code, D, p, ks, cdf)."""
        return KIND_CODES[self.kind], int(self.D), float(self.p), self._ks, self._cdf

    def to_dict(self) -> dict:
        if self.kind == REGULAR:
            return {"kind": REGULAR, "D": self.D}
        if self.kind == GEOMETRIC:
            return {"kind": GEOMETRIC, "p": self.p}
        return {"kind": CUSTOM, "pmf": [[k, a] for k, a in self.pmf]}

    def describe(self) -> str:
        """Compact single-token label, used in CSV output."""
        if self.kind == REGULAR:
            return f"regular(D={self.D})"
        if self.kind == GEOMETRIC:
            return f"geometric(p={self.p:g})"
        return "custom(" + ";".join(f"{k}:{a:g}" for k, a in self.pmf) + ")"


def make_regular(D: int) -> DegreeDistribution:
    """Point mass at ``D``; G(s) = s**D."""
    if int(D) != D or D < 2:
        raise ValueError(f"regular degree must be an integer >= 2, got {D!r}")
    return DegreeDistribution(REGULAR, D=int(D))


def make_geometric_shifted(p: float) -> DegreeDistribution:
    """a_k = p (1-p)^(k-2) for k >= 2, so G(s) = p s^2 / (1 - (1-p) s)."""
    p = float(p)
    if not (0.0 < p <= 1.0):
        raise ValueError(f"geometric parameter must lie in (0, 1], got {p!r}")
    return DegreeDistribution(GEOMETRIC, p=p)


def make_custom(weights) -> DegreeDistribution:
    """Finite-support pmf from ``[(k, a_k), ...]``.

    Weights must already sum to one within 1e-9; the stored copy is
    renormalized exactly. Repeated ``k`` entries are merged.
    """
    merged: dict[int, float] = {}
    for k, a in weights:
        if int(k) != k:
            raise ValueError(f"degree must be an integer, got {k!r}")
        k, a = int(k), float(a)
        if k < 2:
            raise ValueError(f"degree {k} < 2: trees would have open ends")
        if a < 0 or not math.isfinite(a):
            raise ValueError(f"negative or non-finite weight {a!r} for degree {k}")
        merged[k] = merged.get(k, 0.0) + a
    if not merged:
        raise ValueError("empty degree distribution")
    total = math.fsum(merged.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights sum to {total!r}, not 1")
    pmf = tuple((k, merged[k] / total) for k in sorted(merged) if merged[k] > 0)
    return DegreeDistribution(CUSTOM, pmf=pmf)


def gf_eval(dist: DegreeDistribution, s: float) -> float:
    """G(s) for 0 <= s <= 1."""
    if not (0.0 <= s <= 1.0):
        raise ValueError(f"generating function argument must lie in [0, 1], got {s!r}")
    if s == 1.0:
        return 1.0
    return float(dist.G(s))


def sample_degrees(dist: DegreeDistribution, rng: np.random.Generator, size=None):
    """Draw i.i.d. degrees. Geometric tails use the exact inverse CDF."""
    if dist.kind == REGULAR:
        return dist.D if size is None else np.full(size, dist.D, dtype=np.int64)
    if dist.kind == GEOMETRIC:
        if dist.p == 1.0:
            return 2 if size is None else np.full(size, 2, dtype=np.int64)
        u = 1.0 - rng.random(size)  # in (0, 1]
        k = 2 + np.floor(np.log(u) / math.log1p(-dist.p)).astype(np.int64)
        return int(k) if size is None else k
    u = rng.random(size)
    k = dist._ks[np.searchsorted(dist._cdf, u, side="right")]
    return int(k) if size is None else k


def sample_degree(dist: DegreeDistribution, rng: np.random.Generator) -> int:
    return sample_degrees(dist, rng)


def from_dict(data: dict) -> DegreeDistribution:
    """Inverse of :meth:`DegreeDistribution.to_dict`."""
    if not isinstance(data, dict) or "kind" not in data:
        raise ValueError(f"distribution description must be an object with a 'kind' key: {data!r}")
    kind = data["kind"]
    try:
        if kind == REGULAR:
            return make_regular(data["D"])
        if kind == GEOMETRIC:
            return make_geometric_shifted(data["p"])
        if kind == CUSTOM:
            return make_custom([tuple(w) for w in data["pmf"]])
    except KeyError as exc:
        raise ValueError(f"distribution {data!r} is missing {exc}") from None
    raise ValueError(f"unknown distribution kind {kind!r}")


def from_json(text: str) -> DegreeDistribution:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid distribution JSON: {exc}") from None
    return from_dict(data)
