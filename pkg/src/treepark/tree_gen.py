"""Finite truncations of random trees with i.i.d. degrees.

Vertices are numbered in BFS order with the root at 0, so every generation
occupies a contiguous index range and each vertex's children are contiguous.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .degree_dist import DegreeDistribution, make_regular, sample_degrees

DEFAULT_MAX_VERTICES = 5_000_000


class GrowthCapError(RuntimeError):
    """A ball grew past ``max_vertices``."""

    def __init__(self, n_vertices: int, max_vertices: int, depth: int, replicate: int | None = None):
        self.n_vertices = n_vertices
        self.max_vertices = max_vertices
        self.depth = depth
        self.replicate = replicate
        where = "" if replicate is None else f"replicate {replicate}: "
        super().__init__(
            f"{where}tree reached {n_vertices} vertices at depth {depth}, "
            f"exceeding max_vertices={max_vertices}")

    def at_replicate(self, replicate: int) -> "GrowthCapError":
        return GrowthCapError(self.n_vertices, self.max_vertices, self.depth, replicate)


@dataclass(frozen=True, eq=False)
class TreeInstance:
    """A finite tree rooted at vertex 0.

    ``parent[v]`` is -1 for the root. ``target_degree`` is the sampled degree
    D_v; vertices at depth ``radius`` keep theirs but have no children.
    Arrivals at ``blocked`` vertices are suppressed.
    """

    parent: np.ndarray
    depth: np.ndarray
    target_degree: np.ndarray
    radius: int
    blocked: frozenset = frozenset()
    indptr: np.ndarray = field(init=False, repr=False)
    indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.parent)
        child = np.arange(1, n)
        par = self.parent[1:]
        src = np.concatenate([child, par])
        dst = np.concatenate([par, child])
        order = np.lexsort((dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", dst[order].astype(np.int64))

    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(v).tolist() for v in range(self.n_vertices)]

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> list[tuple[int, int]]:
        return [(int(self.parent[v]), v) for v in range(1, self.n_vertices)]

    def blocked_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        if self.blocked:
            mask[list(self.blocked)] = True
        return mask

    def with_blocked(self, blocked) -> "TreeInstance":
        blocked = frozenset(int(v) for v in blocked)
        bad = [v for v in blocked if not 0 <= v < self.n_vertices]
        if bad:
            raise ValueError(f"blocked vertices {sorted(bad)} not in tree of {self.n_vertices} vertices")
        return TreeInstance(self.parent, self.depth, self.target_degree, self.radius, blocked)

    def same_as(self, other: "TreeInstance") -> bool:
        return (self.radius == other.radius and self.blocked == other.blocked
                and np.array_equal(self.parent, other.parent)
                and np.array_equal(self.depth, other.depth)
                and np.array_equal(self.target_degree, other.target_degree))


def _grow(parents, depths, degrees, n_total, n_front, front_depth, dist, radius, rng,
          max_vertices):
    """Append generations below the current frontier (the last ``n_front``
    vertices, all at ``front_depth``) until depth ``radius``."""
    d = front_depth
    while n_front:
        ks = np.asarray(sample_degrees(dist, rng, n_front), dtype=np.int64)
        degrees.append(ks)
        if d == radius:
            break
        n_child = ks - 1
        total = int(n_child.sum())
        if n_total + total > max_vertices:
            raise GrowthCapError(n_total + total, max_vertices, d + 1)
        start = n_total - n_front
        parents.append(np.repeat(np.arange(start, n_total, dtype=np.int64), n_child))
        depths.append(np.full(total, d + 1, dtype=np.int64))
        n_total += total
        n_front = total
        d += 1


def sample_ball(dist: DegreeDistribution, radius: int, rng: np.random.Generator,
                max_vertices: int = DEFAULT_MAX_VERTICES) -> TreeInstance:
    """Ball of the given radius around the root of a random tree.

    The root gets D_0 children, every other vertex closer than ``radius``
    gets D_i - 1 children, and vertices at the radius get none.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    if max_vertices < 1:
        raise ValueError(f"max_vertices must be >= 1, got {max_vertices}")
    d0 = int(sample_degrees(dist, rng))
    if 1 + d0 > max_vertices:
        raise GrowthCapError(1 + d0, max_vertices, 1)
    parent = np.concatenate([[-1], np.zeros(d0, dtype=np.int64)]).astype(np.int64)
    depth = np.concatenate([[0], np.ones(d0, dtype=np.int64)]).astype(np.int64)
    return _finish(parent, depth, np.array([d0]), d0, 1, dist, radius, rng, max_vertices, frozenset())


def sample_rooted_half_tree(dist: DegreeDistribution, radius: int, rng: np.random.Generator,
                            max_vertices: int = DEFAULT_MAX_VERTICES) -> TreeInstance:
    """Blocked root 0 joined to vertex 1, which heads a random branch.

    ``radius`` counts generations below vertex 1, so the stored truncation
    depth (measured from vertex 0) is ``radius + 1``. The blocked root is
    recorded with degree 1.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    if max_vertices < 2:
        raise GrowthCapError(2, max_vertices, 1)
    d1 = int(sample_degrees(dist, rng))
    n1 = d1 - 1
    if 2 + n1 > max_vertices:
        raise GrowthCapError(2 + n1, max_vertices, 2)
    parent = np.concatenate([[-1, 0], np.ones(n1, dtype=np.int64)]).astype(np.int64)
    depth = np.concatenate([[0, 1], np.full(n1, 2, dtype=np.int64)]).astype(np.int64)
    return _finish(parent, depth, np.array([1, d1]), n1, 2, dist, radius + 1, rng,
                   max_vertices, frozenset({0}))


def _finish(parent, depth, degree, n_front, front_depth, dist, radius, rng, max_vertices,
            blocked):
    parents, depths, degrees = [parent], [depth], [degree]
    _grow(parents, depths, degrees, len(parent), n_front, front_depth, dist, radius, rng,
          max_vertices)
    return TreeInstance(np.concatenate(parents), np.concatenate(depths),
                        np.concatenate(degrees), radius, blocked)


def regular_ball(D: int, radius: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> TreeInstance:
    """Deterministic ball of the D-regular tree."""
    dist = make_regular(D)
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    # regular sampling never touches the generator
    return sample_ball(dist, radius, np.random.default_rng(0), max_vertices)


def from_edges(edges, n_vertices: int | None = None) -> tuple[TreeInstance, np.ndarray]:
    """Tree from an undirected edge list on vertices 0..n-1, rooted at 0.

    Vertices are relabelled into BFS order; the returned ``labels`` array
    maps new indices back to the input ids.
    """
    edges = [(int(u), int(v)) for u, v in edges]
    ids = {x for e in edges for x in e}
    if n_vertices is None:
        n_vertices = max(ids) + 1 if ids else 1
    if any(x < 0 or x >= n_vertices for x in ids):
        raise ValueError(f"vertex ids must lie in 0..{n_vertices - 1}")
    if len(edges) != n_vertices - 1:
        raise ValueError(f"{len(edges)} edges on {n_vertices} vertices: not a tree")
    adj = [[] for _ in range(n_vertices)]
    for u, v in edges:
        if u == v:
            raise ValueError(f"self-loop at vertex {u}: not a tree")
        adj[u].append(v)
        adj[v].append(u)
    order, parent_of = [0], {0: -1}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if v == parent_of[u]:
                continue
            if v in parent_of:
                raise ValueError(f"cycle through vertex {v}: not a tree")
            parent_of[v] = u
            order.append(v)
            queue.append(v)
    if len(order) != n_vertices:
        raise ValueError("edge list is disconnected: not a tree")
    new = {old: i for i, old in enumerate(order)}
    parent = np.array([new[parent_of[old]] if parent_of[old] >= 0 else -1 for old in order],
                      dtype=np.int64)
    depth = np.zeros(n_vertices, dtype=np.int64)
    for i in range(1, n_vertices):
        depth[i] = depth[parent[i]] + 1
    degree = np.array([len(adj[old]) for old in order], dtype=np.int64)
    tree = TreeInstance(parent, depth, degree, int(depth.max()) if n_vertices > 1 else 0)
    return tree, np.array(order, dtype=np.int64)


def read_edge_list(path) -> tuple[TreeInstance, np.ndarray]:
    """Parse "u v" lines; '#' lines and blank lines are skipped.

    A file with no edges describes the single-vertex tree.
    """
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                u, v = (int(x) for x in parts)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected two integer vertex ids, got {line!r}") from None
            if u < 0 or v < 0:
                raise ValueError(f"{path}:{lineno}: negative vertex id in {line!r}")
            edges.append((u, v))
    return from_edges(edges)


def write_edge_list(tree: TreeInstance, path, seed=None) -> None:
    with open(path, "w") as fh:
        fh.write(f"# radius={tree.radius} seed={seed if seed is not None else 'none'}\n")
        for u, v in tree.edges():
            fh.write(f"{u} {v}\n")
