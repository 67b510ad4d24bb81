import itertools

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

ACCEPTANCE_LINES: list[str] = []


def lsa_distance(dist, X, Y) -> int:
    """Matching cost via the Hungarian method; independent of the package's matcher."""
    cost = np.array([[dist[x][y] for y in Y] for x in X])
    rows, cols = linear_sum_assignment(cost)
    return int(cost[rows, cols].sum())


def history_wf(dist, k, X0, requests):
    """Work function from its definition: a DP over server configurations layer by layer.

    Layer t holds OPT_t(X) for configurations containing r_t; the final table
    adds the closing move d(X_t, X).  Distances use :func:`lsa_distance`.
    """
    n = len(dist)
    configs = list(itertools.combinations_with_replacement(range(n), k))
    dmat = {(A, B): lsa_distance(dist, A, B) for A in configs for B in configs}
    layer = {tuple(sorted(X0)): 0}
    for r in requests:
        layer = {
            B: min(v + dmat[(A, B)] for A, v in layer.items())
            for B in configs if r in B
        }
    return {X: min(v + dmat[(A, X)] for A, v in layer.items()) for X in configs}


def support_value(dist, supports, X) -> int:
    return min(v + lsa_distance(dist, S, X) for S, v in supports)


def record(line: str):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cycle8():
    from wfalab.metric import build_cycle

    return build_cycle(8)


@pytest.fixture(scope="session")
def cube3():
    from wfalab.metric import build_hypercube

    return build_hypercube(3)
