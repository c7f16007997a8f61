import itertools
import math

import numpy as np
import pytest

from treepark.tree_gen import from_edges


def jammed_probabilities_by_permutation(tree):
    """Exact t = inf occupation probabilities by enumerating every arrival order.

    Arrival orders of i.i.d. continuous clocks are uniform over permutations,
    and the jammed state is the greedy outcome of the order. Blocked vertices
    never arrive and are left out of the permutation.
    """
    n = tree.n_vertices
    active = [v for v in range(n) if v not in tree.blocked]
    adj = tree.adjacency
    counts = np.zeros(n)
    total = 0
    for perm in itertools.permutations(active):
        occ = [False] * n
        for v in perm:
            if not any(occ[w] for w in adj[v]):
                occ[v] = True
        counts += occ
        total += 1
    return counts / total


@pytest.fixture
def path4():
    return from_edges([(0, 1), (1, 2), (2, 3)])[0]


@pytest.fixture
def small_trees():
    return {
        "single": from_edges([])[0],
        "edge": from_edges([(0, 1)])[0],
        "path4": from_edges([(0, 1), (1, 2), (2, 3)])[0],
        "star3": from_edges([(0, 1), (0, 2), (0, 3)])[0],
        "spider": from_edges([(0, 1), (1, 2), (0, 3), (3, 4), (0, 5)])[0],
        "caterpillar": from_edges([(0, 1), (1, 2), (2, 3), (1, 4), (2, 5), (2, 6)])[0],
    }


INF = math.inf


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
