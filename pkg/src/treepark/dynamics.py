"""Monte Carlo simulation of blocking RSA on trees.

Each vertex gets one Exp(1) arrival time. Vertices are processed in time
order and a vertex parks at its arrival iff it and all its neighbours are
still empty; a failed arrival can never succeed later because occupied
vertices stay occupied.

Replicates are grouped into fixed blocks of ``BLOCK_SIZE``; block ``b``
draws from ``SeedSequence(master_seed, spawn_key=(stream, b))``. Results
therefore do not depend on how many threads run the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .degree_dist import DegreeDistribution
from .tree_gen import (DEFAULT_MAX_VERTICES, GrowthCapError, TreeInstance, sample_ball,
                       sample_rooted_half_tree)

INF = math.inf
BLOCK_SIZE = 4096
MIN_SAMPLES_FOR_CI = 1000
# exact references (oracle, formula) are good to ~1e-9
DEGENERATE_ATOL = 1e-9

# spawn-key streams, so different estimators with one seed stay independent
_STREAM_ROOT = 1
_STREAM_HALF = 2
_STREAM_FIXED = 3
_STREAM_ENSEMBLE = 4


def occupied(park_time, t: float):
    """n(t) from park times; never-parked vertices (inf) stay empty even at t = inf."""
    return np.isfinite(park_time) & (park_time <= t)


@dataclass(frozen=True, eq=False)
class ArrivalSchedule:
    times: np.ndarray


@dataclass(frozen=True, eq=False)
class ParkOutcome:
    """``park_time[v]`` is the arrival time of v if it parked, else inf."""

    park_time: np.ndarray

    def occupancy(self, t: float) -> np.ndarray:
        return occupied(self.park_time, t).astype(np.int8)


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_err: float
    n_samples: int
    master_seed: int

    @classmethod
    def from_samples(cls, values, master_seed: int) -> "Estimate":
        x = np.asarray(values, dtype=float).ravel()
        n = len(x)
        if n == 0:
            raise ValueError("no samples")
        mean = math.fsum(x) / n
        if n > 1:
            var = math.fsum((x - mean) ** 2) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = math.nan
        return cls(mean, se, n, master_seed)

    @property
    def ci95(self) -> tuple[float, float]:
        if self.n_samples < MIN_SAMPLES_FOR_CI:
            raise ValueError(
                f"normal-approximation CI needs >= {MIN_SAMPLES_FOR_CI} samples, have {self.n_samples}")
        half = 1.96 * self.std_err
        return self.mean - half, self.mean + half

    def z_score(self, reference: float) -> float:
        """Standardized deviation from ``reference``. A zero-variance sample
        counts as agreeing when within ``DEGENERATE_ATOL`` of it."""
        diff = self.mean - reference
        if self.std_err > 0:
            return diff / self.std_err
        return 0.0 if abs(diff) <= DEGENERATE_ATOL else math.copysign(INF, diff)


# -- compiled kernels ---------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _rsa_kernel(indptr, indices, times, park):
    order = np.argsort(times, kind="mergesort")  # stable: lower index wins ties
    n = len(times)
    occupied = np.zeros(n, dtype=np.bool_)
    for j in range(n):
        v = order[j]
        tv = times[v]
        park[v] = np.inf
        if tv == np.inf:
            continue
        free = True
        for q in range(indptr[v], indptr[v + 1]):
            if occupied[indices[q]]:
                free = False
                break
        if free:
            occupied[v] = True
            park[v] = tv


@numba.njit(cache=True, nogil=True)
def _rsa_batch(indptr, indices, times, park):
    for r in range(times.shape[0]):
        _rsa_kernel(indptr, indices, times[r], park[r])


@numba.njit(cache=True, nogil=True)
def _draw_degree(rng, kind, D, p, ks, cdf):
    if kind == 0:
        return D
    if kind == 1:
        if p == 1.0:
            return 2
        u = 1.0 - rng.random()
        return 2 + np.int64(np.floor(np.log(u) / np.log1p(-p)))
    u = rng.random()
    return ks[np.searchsorted(cdf, u, side="right")]


@numba.njit(cache=True, nogil=True)
def _draw_degrees(rng, kind, D, p, ks, cdf, n):
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = _draw_degree(rng, kind, D, p, ks, cdf)
    return out


@numba.njit(cache=True, nogil=True)
def _explore(rng, t_focal, n_focal, radius, kind, D, p, ks, cdf, max_vertices, buf):
    """Decide whether the focal vertex parks, growing the tree lazily.

    A vertex parks iff none of its earlier-arriving neighbours parks, so only
    paths of decreasing arrival times away from the focal vertex matter; the
    parent of any explored vertex arrived later and is never revisited.
    Children of a vertex are drawn only when that vertex is explored.
    Returns (status, n_created, depth, buf) with status 1 = parks,
    0 = blocked, -1 = cap hit (``depth`` is where it happened).
    """
    st_time = np.empty(radius + 1)
    st_start = np.empty(radius + 1, dtype=np.int64)
    st_end = np.empty(radius + 1, dtype=np.int64)
    st_pos = np.empty(radius + 1, dtype=np.int64)
    if n_focal > len(buf):
        buf = np.empty(2 * n_focal)
    for i in range(n_focal):
        buf[i] = rng.exponential()
    created = 1 + n_focal
    if created > max_vertices:
        return -1, created, 1, buf
    top = 0
    st_time[0] = t_focal
    st_start[0] = 0
    st_end[0] = n_focal
    st_pos[0] = 0
    used = n_focal
    child = -1  # -1: nothing returned, 0: child blocked, 1: child parked
    while True:
        if child == 1:
            used = st_start[top]
            if top == 0:
                return 0, created, 0, buf
            top -= 1
            child = 0
            continue
        tv = st_time[top]
        pos = st_pos[top]
        end = st_end[top]
        found = -1
        while pos < end:
            if buf[pos] < tv:
                found = pos
                pos += 1
                break
            pos += 1
        st_pos[top] = pos
        if found < 0:
            used = st_start[top]
            if top == 0:
                return 1, created, 0, buf
            top -= 1
            child = 1
            continue
        if top + 1 == radius:
            # truncation leaf: no children, so nothing can block it
            child = 1
            continue
        nc = _draw_degree(rng, kind, D, p, ks, cdf) - 1
        created += nc
        if created > max_vertices:
            return -1, created, top + 2, buf
        if used + nc > len(buf):
            grown = np.empty(2 * (used + nc))
            grown[:used] = buf[:used]
            buf = grown
        tc = buf[found]
        top += 1
        st_time[top] = tc
        st_start[top] = used
        st_end[top] = used + nc
        st_pos[top] = used
        for i in range(used, used + nc):
            buf[i] = rng.exponential()
        used += nc
        child = -1


@numba.njit(cache=True, nogil=True)
def _local_block(rng, n, radius, half, kind, D, p, ks, cdf, max_vertices, out, fail):
    buf = np.empty(256)
    for i in range(n):
        t = rng.exponential()
        nf = _draw_degree(rng, kind, D, p, ks, cdf)
        if half:
            nf -= 1
        status, created, depth, buf = _explore(rng, t, nf, radius, kind, D, p, ks, cdf,
                                               max_vertices, buf)
        if status < 0:
            fail[0] = i
            fail[1] = created
            fail[2] = depth
            return False
        out[i] = t if status == 1 else np.inf
    return True


# -- single-run API -----------------------------------------------------------

def draw_arrivals(tree: TreeInstance, rng: np.random.Generator) -> ArrivalSchedule:
    times = rng.exponential(size=tree.n_vertices)
    if tree.blocked:
        times[list(tree.blocked)] = INF
    return ArrivalSchedule(times)


def run_rsa(tree: TreeInstance, arrivals: ArrivalSchedule) -> ParkOutcome:
    times = np.ascontiguousarray(arrivals.times, dtype=float)
    if len(times) != tree.n_vertices:
        raise ValueError(f"{len(times)} arrival times for {tree.n_vertices} vertices")
    park = np.empty_like(times)
    _rsa_kernel(tree.indptr, tree.indices, times, park)
    return ParkOutcome(park)


def occupancy_at(outcome: ParkOutcome, v: int, t: float) -> int:
    return int(occupied(outcome.park_time[v], t))


def outcome_violations(tree: TreeInstance, arrivals: ArrivalSchedule, outcome: ParkOutcome) -> list[str]:
    """Hard-core and jamming violations of a finished run (empty if valid)."""
    park, times = outcome.park_time, arrivals.times
    problems = []
    bad = np.isfinite(park) & (park != times)
    for v in np.flatnonzero(bad):
        problems.append(f"vertex {v} parked at {park[v]} but arrived at {times[v]}")
    parked = np.isfinite(park)
    for u, v in tree.edges():
        if parked[u] and parked[v]:
            problems.append(f"adjacent vertices {u} and {v} both parked")
    for v in np.flatnonzero(~parked & np.isfinite(times)):
        nb = tree.neighbors(v)
        if not np.any(park[nb] < times[v]):
            problems.append(f"vertex {v} arrived at {times[v]} with no occupied neighbour yet stayed empty")
    return problems


# -- replicated estimators ----------------------------------------------------

def block_rng(master_seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(stream, block)))


def _run_blocks(work, n_samples: int, master_seed: int, stream: int, threads: int = 1):
    """Apply ``work(rng, first_index, size)`` to every block, concatenated in block order."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if master_seed < 0:
        raise ValueError(f"master_seed must be >= 0, got {master_seed}")
    jobs = [(b, b * BLOCK_SIZE, min(BLOCK_SIZE, n_samples - b * BLOCK_SIZE))
            for b in range(-(-n_samples // BLOCK_SIZE))]

    def one(job):
        b, first, size = job
        return work(block_rng(master_seed, stream, b), first, size)

    if threads <= 1 or len(jobs) == 1:
        parts = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, jobs))
    return np.concatenate(parts)


def _local_work(dist, radius, half, max_vertices):
    kind, D, p, ks, cdf = dist.sampler_params()

    def work(rng, first, size):
        out = np.empty(size)
        fail = np.zeros(3, dtype=np.int64)
        if not _local_block(rng, size, radius, half, kind, D, p, ks, cdf, max_vertices, out, fail):
            i, created, depth = (int(x) for x in fail)
            raise GrowthCapError(created, max_vertices, depth, first + i)
        return out
    return work


def _ball_work(dist, radius, half, max_vertices):
    sampler = sample_rooted_half_tree if half else sample_ball
    focal = 1 if half else 0

    def work(rng, first, size):
        out = np.empty(size)
        for i in range(size):
            try:
                tree = sampler(dist, radius, rng, max_vertices)
            except GrowthCapError as exc:
                raise exc.at_replicate(first + i) from None
            out[i] = run_rsa(tree, draw_arrivals(tree, rng)).park_time[focal]
        return out
    return work


def sample_focal_park_times(dist: DegreeDistribution, radius: int, n_samples: int, master_seed: int,
                            *, half: bool = False, method: str = "local",
                            max_vertices: int = DEFAULT_MAX_VERTICES, threads: int = 1) -> np.ndarray:
    """Park time of the root of a ball (``half=False``) or of vertex 1 of a
    rooted half-tree with blocked root (``half=True``), one per replicate.

    ``method="ball"`` materializes every truncated tree; ``"local"`` draws
    only the part of the same truncated tree that can influence the focal
    vertex, which has the same law and is far cheaper.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    if method == "local":
        work = _local_work(dist, radius, half, max_vertices)
    elif method == "ball":
        work = _ball_work(dist, radius, half, max_vertices)
    else:
        raise ValueError(f"unknown method {method!r}")
    stream = _STREAM_HALF if half else _STREAM_ROOT
    return _run_blocks(work, n_samples, master_seed, stream, threads)


def estimate_root_occupancy(dist: DegreeDistribution, t: float, radius: int, n_samples: int,
                            master_seed: int, **kwargs) -> Estimate:
    """Estimate of the tree- and dynamics-averaged root occupancy at time t."""
    _check_time(t)
    park = sample_focal_park_times(dist, radius, n_samples, master_seed, **kwargs)
    return Estimate.from_samples(occupied(park, t), master_seed)


def estimate_root_occupancy_curve(dist: DegreeDistribution, times, radius: int, n_samples: int,
                                  master_seed: int, **kwargs) -> list[Estimate]:
    """Same as :func:`estimate_root_occupancy` for several times, sharing one set of replicates."""
    for t in times:
        _check_time(t)
    park = sample_focal_park_times(dist, radius, n_samples, master_seed, **kwargs)
    return [Estimate.from_samples(occupied(park, t), master_seed) for t in times]


def estimate_conditional_vacancy(dist: DegreeDistribution, s: float, radius: int, n_samples: int,
                                 master_seed: int, **kwargs) -> Estimate:
    """Vacancy of vertex 1 at time s on a rooted half-tree whose root never receives a car.

    Suppressing the root's arrival is exact conditioning on the root's clock
    not having rung by s, by memorylessness.
    """
    _check_time(s)
    park = sample_focal_park_times(dist, radius, n_samples, master_seed, half=True, **kwargs)
    return Estimate.from_samples(~occupied(park, s), master_seed)


def simulate_park_times(tree: TreeInstance, n_samples: int, master_seed: int,
                        threads: int = 1) -> np.ndarray:
    """Park times on a fixed tree, shape (n_samples, n_vertices)."""
    blocked = sorted(tree.blocked)
    n = tree.n_vertices

    def work(rng, first, size):
        times = rng.exponential(size=(size, n))
        if blocked:
            times[:, blocked] = INF
        park = np.empty_like(times)
        _rsa_batch(tree.indptr, tree.indices, times, park)
        return park

    return _run_blocks(work, n_samples, master_seed, _STREAM_FIXED, threads)


def estimate_vertex_occupancy(tree: TreeInstance, times, n_samples: int, master_seed: int,
                              threads: int = 1) -> dict[float, list[Estimate]]:
    """Per-vertex occupancy estimates on a fixed tree at each requested time."""
    park = simulate_park_times(tree, n_samples, master_seed, threads)
    out = {}
    for t in times:
        _check_time(t)
        occ = occupied(park, t)
        out[t] = [Estimate.from_samples(occ[:, v], master_seed) for v in range(tree.n_vertices)]
    return out


def estimate_correlation(tree_source, A, B, t: float, n_samples: int, master_seed: int,
                         threads: int = 1) -> Estimate:
    """Estimate of C_t(A|B): probability that every vertex of A is empty at t
    when arrivals on B are suppressed.

    ``tree_source`` is a fixed :class:`TreeInstance` or a callable
    ``rng -> TreeInstance`` that resamples the tree for each replicate.
    """
    _check_time(t)
    A = sorted({int(v) for v in A})
    B = {int(v) for v in B}
    if isinstance(tree_source, TreeInstance):
        _check_vertices(tree_source, A, B)
        tree = tree_source.with_blocked(tree_source.blocked | B)
        if not A:
            return Estimate.from_samples(np.ones(n_samples), master_seed)
        park = simulate_park_times(tree, n_samples, master_seed, threads)
        return Estimate.from_samples(~np.any(occupied(park[:, A], t), axis=1), master_seed)

    def work(rng, first, size):
        out = np.empty(size)
        for i in range(size):
            tree = tree_source(rng)
            _check_vertices(tree, A, B)
            tree = tree.with_blocked(tree.blocked | B)
            park = run_rsa(tree, draw_arrivals(tree, rng)).park_time
            out[i] = float(not np.any(occupied(park[A], t)))
        return out

    return Estimate.from_samples(_run_blocks(work, n_samples, master_seed, _STREAM_ENSEMBLE, threads),
                                 master_seed)


def _check_vertices(tree, A, B):
    bad = [v for v in list(A) + list(B) if not 0 <= v < tree.n_vertices]
    if bad:
        raise ValueError(f"vertices {sorted(set(bad))} not in tree of {tree.n_vertices} vertices")


def _check_time(t):
    if math.isnan(t) or t < 0:
        raise ValueError(f"time must be >= 0, got {t!r}")
