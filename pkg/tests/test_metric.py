import hashlib
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import lsa_distance
from wfalab.metric import (
    MetricError,
    build_cycle,
    build_from_matrix,
    build_hypercube,
    config_space,
    enumerate_configs,
    find_antipodes,
    metric_from_descriptor,
    wasserstein,
)

# sha256 of repr(enumerate_configs(n, k)); frozen from the first run
CONFIG_ORDER_DIGESTS = {
    (8, 3): "9fa6319ecaa42aee956ef6167f33c766b92dd4c47b7ff22290a68b447686efa7",
    (6, 3): "258462df04a618821acbb877621880867e22f232da6fd16b356e945ae912e7d6",
    (12, 3): "512b4380ccc9e1835f6e93d2b47c85d3e150462eba430800b083ff77d6c97910",
    (8, 2): "596af3d32ffed57d56bb81ad4431b2ea5e4b2e2de73d9a3761dc52215836aa65",
}


def test_cycle_examples(cycle8):
    assert cycle8.d(0, 5) == 3
    assert cycle8.antipode(2) == 6
    assert cycle8.d(0, 3) + cycle8.d(4, 3) == 4 == cycle8.diameter


@pytest.mark.parametrize("n", [0, 2, 3, 5, 7])
def test_cycle_rejects_bad_sizes(n):
    with pytest.raises(MetricError, match="even"):
        build_cycle(n)


def test_hypercube_examples(cube3):
    assert cube3.d(0, 7) == 3
    assert cube3.antipode(5) == 2
    assert cube3.d(1, 2) == 2
    assert cube3.diameter == 3


def test_hypercube_bounds():
    with pytest.raises(MetricError):
        build_hypercube(0)
    with pytest.raises(MetricError, match="width"):
        build_hypercube(16)


@pytest.mark.parametrize("metric", [build_cycle(n) for n in (4, 6, 8, 10, 12, 16)]
                         + [build_hypercube(d) for d in (1, 2, 3, 4)], ids=repr)
def test_antipode_identity_exact(metric):
    D, anti, delta = metric.dist, metric.antipode_array, metric.diameter
    assert np.all(D + D[anti] == delta)
    assert np.all(anti[anti] == np.arange(metric.n))


def test_matrix_equals_cycle(cycle8):
    m = build_from_matrix(cycle8.dist.tolist())
    assert np.array_equal(m.dist, cycle8.dist)
    assert m.antipodes == cycle8.antipodes
    assert m.diameter == cycle8.diameter


def test_matrix_symmetry_error():
    bad = build_cycle(8).dist.copy()
    bad[0, 1] = 2
    with pytest.raises(MetricError, match="asymmetric"):
        build_from_matrix(bad)


def test_matrix_triangle_error_names_triple():
    with pytest.raises(MetricError, match=r"triangle inequality fails on \(0,1,2\)"):
        build_from_matrix([[0, 1, 5], [1, 0, 1], [5, 1, 0]])


def test_matrix_diagonal_error():
    with pytest.raises(MetricError, match="diagonal"):
        build_from_matrix([[1, 1], [1, 0]])


def test_path_has_no_antipodes():
    path = [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
    m = build_from_matrix(path)
    assert m.antipodes is None
    # every involution of three points fails the antipode identity
    for perm in itertools.permutations(range(3)):
        if any(perm[perm[a]] != a for a in range(3)):
            continue
        assert not all(path[a][b] + path[perm[a]][b] == 2 for a in range(3) for b in range(3))
    with pytest.raises(MetricError):
        m.antipode(0)


def test_descriptor_roundtrip(cycle8, cube3):
    for m in (cycle8, cube3, build_from_matrix([[0, 1], [1, 0]])):
        again = metric_from_descriptor(m.descriptor)
        assert np.array_equal(again.dist, m.dist)
        assert again.antipodes == m.antipodes
    with pytest.raises(MetricError):
        metric_from_descriptor({"type": "torus"})


def test_wasserstein_examples(cycle8):
    assert wasserstein(cycle8, (1, 3, 6), (1, 3, 6)) == 0
    assert wasserstein(cycle8, (4, 5, 6), (4, 4, 4)) == lsa_distance(cycle8.dist, (4, 5, 6), (4, 4, 4)) == 3
    assert wasserstein(cycle8, (0, 0, 0), (4, 4, 4)) == 12
    with pytest.raises(MetricError):
        wasserstein(cycle8, (0, 1), (0, 1, 2))


def test_wasserstein_matrix_matches_hungarian(cycle8):
    sp = config_space(cycle8, 3)
    W = sp.wasserstein_matrix
    rng = np.random.default_rng(3)
    for a, b in rng.integers(0, len(sp), size=(400, 2)):
        X, Y = sp.configs_list[a], sp.configs_list[b]
        assert W[a, b] == lsa_distance(cycle8.dist, X, Y)


@pytest.mark.parametrize("metric", [build_cycle(6), build_cycle(8), build_hypercube(3)], ids=repr)
def test_wasserstein_is_a_metric(metric):
    W = config_space(metric, 3).wasserstein_matrix
    assert np.all(np.diag(W) == 0)
    off = ~np.eye(len(W), dtype=bool)
    assert np.all(W[off] > 0)
    assert np.array_equal(W, W.T)
    assert np.all(W[:, None, :] <= W[:, :, None] + W[None, :, :])


def test_enumerate_configs_examples():
    assert len(enumerate_configs(8, 3)) == 120
    assert enumerate_configs(2, 2) == [(0, 0), (0, 1), (1, 1)]
    assert len(enumerate_configs(build_cycle(8), 1)) == 8
    with pytest.raises(MetricError):
        enumerate_configs(4, 0)


@pytest.mark.parametrize("nk", sorted(CONFIG_ORDER_DIGESTS))
def test_enumerate_configs_golden_order(nk):
    digest = hashlib.sha256(repr(enumerate_configs(*nk)).encode()).hexdigest()
    assert digest == CONFIG_ORDER_DIGESTS[nk]


def test_lookup_is_order_free(cycle8):
    sp = config_space(cycle8, 3)
    for row, conf in enumerate(sp.configs_list):
        for perm in itertools.permutations(conf):
            assert sp.lookup(perm) == row


@st.composite
def graph_metrics(draw):
    n = draw(st.integers(2, 7))
    weights = draw(st.lists(st.integers(1, 5), min_size=n * n, max_size=n * n))
    D = np.array(weights).reshape(n, n)
    D = np.minimum(D, D.T)
    np.fill_diagonal(D, 0)
    for b in range(n):  # Floyd-Warshall
        D = np.minimum(D, D[:, b][:, None] + D[b][None, :])
    return D


@settings(max_examples=60, deadline=None)
@given(graph_metrics())
def test_shortest_path_metrics_validate(D):
    m = build_from_matrix(D)
    anti = m.antipodes
    n, delta = len(D), int(D.max())
    brute = [
        perm for perm in itertools.permutations(range(n))
        if all(perm[perm[a]] == a for a in range(n))
        and all(D[a][b] + D[perm[a]][b] == delta for a in range(n) for b in range(n))
    ]
    if anti is None:
        assert brute == []
    else:
        assert list(anti) in [list(p) for p in brute]
    assert find_antipodes(D) == anti
