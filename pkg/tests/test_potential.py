import itertools
import random

import pytest

from conftest import history_wf
from wfalab.metric import build_cycle, build_from_matrix, build_hypercube
from wfalab.potential import (
    CanonicalPotential,
    all_pairs,
    bcl_canonical,
    canonical_min,
    check_canonical_argument,
    check_lemma3,
    check_lemma4,
    ck_canonical,
    classic_potentials,
    eval_canonical,
    example1_potential,
    in_P,
    paper_potential,
    phi_circle,
    phi_min,
    phi_min_at,
    phi_star,
    phi_star_min_P,
    phi_value,
)
from wfalab.sweep import builtin_testcases
from wfalab.wfa import random_instance, simulate
from wfalab.workfunction import SupportWF, from_support, initial_wf, run_requests, update


def evolved(metric, k, T, seed):
    inst = random_instance(metric, k, T, seed)
    return run_requests(initial_wf(metric, k, inst.X0), inst.requests)


def test_in_P_examples(cycle8):
    assert in_P(cycle8, 0, 3, 6)
    assert not in_P(cycle8, 0, 1, 2)
    assert in_P(cycle8, 0, 4, 4)
    assert in_P(cycle8, 1, 1, 5)


def test_in_P_matches_largest_gap():
    # on a cycle, the three points avoid every open half-circle exactly when
    # no circular gap between consecutive points exceeds half the length
    m = build_cycle(12)
    for x, y, z in itertools.product(range(12), repeat=3):
        a, b, c = sorted((x, y, z))
        gaps = (b - a, c - b, 12 - c + a)
        assert in_P(m, x, y, z) == (max(gaps) <= 6)


def test_phi_symmetries_exhaustive(cycle8):
    wf = evolved(cycle8, 3, 8, seed=1)
    for u, x, y, z in itertools.product(range(8), repeat=4):
        v = phi_circle(wf, u, x, y, z)
        assert v == phi_circle(wf, u, y, z, x)
        # reflecting the triple swaps every x into the antipode slot
        a = cycle8.antipode
        assert v == phi_circle(wf, u, a(z), a(y), a(x)) + (
            cycle8.d(a(z), a(y)) + cycle8.d(a(y), a(x)) + cycle8.d(a(x), a(z))
            - cycle8.d(x, y) - cycle8.d(y, z) - cycle8.d(z, x)
        )


def test_phi_star_relation(cycle8):
    wf = evolved(cycle8, 3, 6, seed=2)
    rng = random.Random(0)
    for _ in range(300):
        u, x, y, z = (rng.randrange(8) for _ in range(4))
        dist = cycle8.d(x, y) + cycle8.d(y, z) + cycle8.d(z, x)
        assert phi_star(wf, u, x, y, z) == phi_circle(wf, u, x, y, z) + dist
        if in_P(cycle8, x, y, z):
            assert phi_star(wf, u, x, y, z) == phi_circle(wf, u, x, y, z) + 2 * cycle8.diameter


def brute_phi(dist, anti, table, n):
    def w(*pts):
        return table[tuple(sorted(pts))]

    best = None
    for u, x, y, z in itertools.product(range(n), repeat=4):
        v = (w(anti[u], anti[u], anti[u]) + w(u, x, anti[y]) + w(u, y, anti[z]) + w(u, z, anti[x])
             - dist[x][y] - dist[y][z] - dist[z][x])
        best = v if best is None else min(best, v)
    return best


def test_phi_min_against_definition():
    m = build_cycle(6)
    X0, reqs = (0, 1, 3), [4, 2, 5, 0, 3]
    table = history_wf(m.dist, 3, X0, reqs)
    wf = run_requests(initial_wf(m, 3, X0), reqs)
    anti = [m.antipode(p) for p in range(6)]
    assert phi_value(wf) == brute_phi(m.dist, anti, table, 6)
    wit = phi_min(wf)
    assert phi_circle(wf, wit.u, *wit.slots) == wit.value
    at = phi_min_at(wf, 2)
    assert at.u == 2 and at.value >= wit.value


def test_phi_bounds_on_trace(cycle8):
    inst = random_instance(cycle8, 3, 40, seed=5)
    trace = simulate(inst, potential=phi_value)
    delta = cycle8.diameter
    phi0 = phi_value(initial_wf(cycle8, 3, inst.X0))
    assert phi0 >= -3 * delta
    assert trace.steps[-1].potential <= 4 * trace.opt + 12 * delta
    prev = phi0
    for step in trace.steps:
        assert step.potential - prev >= step.extended_cost
        prev = step.potential


@pytest.mark.parametrize("n", [6, 8, 10])
def test_minimizer_at_request_and_semicircle_form_on_cycles(n):
    m = build_cycle(n)
    for seed in range(4):
        inst = random_instance(m, 3, 10, seed)
        wf = initial_wf(m, 3, inst.X0)
        for r in inst.requests:
            wf = update(wf, r)
            assert check_lemma3(wf)
            assert check_lemma4(wf)


def test_semicircle_restricted_minimum_is_in_P(cycle8):
    wf = evolved(cycle8, 3, 12, seed=9)
    wit = phi_star_min_P(wf)
    assert in_P(cycle8, *wit.slots)
    assert phi_star(wf, wit.u, *wit.slots) == wit.value


def test_minimizer_at_request_fails_on_cube_support(cube3):
    tc = next(t for t in builtin_testcases() if t.name == "c")
    rep = check_lemma3(from_support(tc.support))
    assert not rep
    assert rep.detail["global"] < rep.detail["at_request"]
    with pytest.raises(ValueError):
        check_lemma3(initial_wf(cube3, 3, (0, 1, 2)))


def test_circle_potential_requires_k3(cycle8):
    with pytest.raises(ValueError):
        phi_value(initial_wf(cycle8, 2, (0, 4)))


# ---------------------------------------------------------------------------
# canonical potentials


def test_bitmask_serialization():
    assert len(all_pairs(3)) == 15
    assert all_pairs(3)[0] == ((1, 1), (1, 2))
    assert CanonicalPotential.from_bitmask(3, 1).pairs == {((1, 1), (1, 2))}
    assert CanonicalPotential.from_bitmask(3, 0).hex() == "0000"
    assert CanonicalPotential.from_bitmask(3, 0x7FFF).hex() == "7fff"
    assert example1_potential().hex() == "143a"
    assert paper_potential().hex() == "254a"
    assert bcl_canonical().hex() == "0c58"
    assert ck_canonical(3).hex() == "20aa"
    for b in (0, 5, 0x143A, 0x7FFF):
        p = CanonicalPotential.from_bitmask(3, b)
        assert p.bitmask == b and CanonicalPotential.from_hex(3, p.hex()) == p
    with pytest.raises(ValueError):
        CanonicalPotential.from_bitmask(3, 1 << 15)
    with pytest.raises(ValueError):
        CanonicalPotential.of(3, [((1, 1), (1, 1))])
    with pytest.raises(ValueError):
        CanonicalPotential.of(3, [((1, 1), (4, 1))])
    # pair orientation does not matter
    assert CanonicalPotential.of(3, [((2, 1), (1, 1))]) == CanonicalPotential.of(3, [((1, 1), (2, 1))])


def test_eval_canonical_examples(cycle8):
    wf = evolved(cycle8, 3, 5, seed=3)
    empty = CanonicalPotential.from_bitmask(3, 0)
    slots = (1, 2, 3, 4, 5, 6)
    a = cycle8.antipode
    plain = wf((a(0),) * 3) + wf((0, 1, 2)) + wf((0, 3, 4)) + wf((0, 5, 6))
    assert eval_canonical(empty, wf, 0, slots) == plain
    one = CanonicalPotential.of(3, [((1, 1), (3, 2))])
    assert eval_canonical(one, wf, 0, slots) == plain - cycle8.d(1, 6)
    # bitmask 143a collapses to Phi when the slot points sit at antipodes
    ex = example1_potential()
    for x, y, z, u in [(0, 3, 6, 1), (2, 2, 5, 7)]:
        val = eval_canonical(ex, wf, u, (x, a(y), y, a(z), z, a(x)))
        anti_terms = sum(cycle8.d(p, a(p)) for p in (x, y, z))
        assert val == phi_circle(wf, u, x, y, z) - anti_terms
    with pytest.raises(ValueError):
        eval_canonical(empty, wf, 0, (1, 2, 3))


def brute_canonical(p, wf, us):
    n, k = wf.metric.n, p.k
    return min(
        eval_canonical(p, wf, u, slots)
        for u in us
        for slots in itertools.product(range(n), repeat=k * (k - 1))
    )


@pytest.mark.parametrize("bitmask", [0, 0x143A, 0x254A, 0x0C58, 0x7FFF, 0x1234])
def test_canonical_min_against_brute_force(bitmask):
    m = build_cycle(4)
    wf = run_requests(initial_wf(m, 3, (0, 1, 1)), [3, 2, 0])
    p = CanonicalPotential.from_bitmask(3, bitmask)
    wit = canonical_min(p, wf)
    assert wit.value == brute_canonical(p, wf, range(4))
    assert eval_canonical(p, wf, wit.u, wit.slots) == wit.value
    assert canonical_min(p, wf, restrict_u=0).value == brute_canonical(p, wf, [0])


def test_canonical_min_k2(cycle8):
    wf = evolved(cycle8, 2, 10, seed=4)
    for b in range(2):
        p = CanonicalPotential.from_bitmask(2, b)
        assert canonical_min(p, wf).value == brute_canonical(p, wf, range(8))


def test_canonical_argument_on_builtin_cases():
    cases = {t.name: t for t in builtin_testcases()}
    assert check_canonical_argument(example1_potential(), cases["a"].support)
    assert check_canonical_argument(example1_potential(), cases["b"].support)
    assert not check_canonical_argument(example1_potential(), cases["c"].support)
    assert not check_canonical_argument(paper_potential(), cases["a"].support)
    assert not check_canonical_argument(CanonicalPotential.from_bitmask(3, 0), cases["a"].support)
    assert check_canonical_argument(CanonicalPotential.from_bitmask(3, 0), cases["c"].support)


def test_display_bitmask_counterexample_on_case_a():
    tc = next(t for t in builtin_testcases() if t.name == "a")
    wf = from_support(tc.support)
    p = paper_potential()
    glob = canonical_min(p, wf)
    assert (canonical_min(p, wf, restrict_u=4).value, glob.value) == (26, 25)
    assert glob.u != 4 and eval_canonical(p, wf, glob.u, glob.slots) == 25


@pytest.mark.parametrize("name,multiple", [("CL", -2), ("BCL", -1), ("CK2", 1), ("CK3", 5)])
def test_classic_potentials_constant_offset(name, multiple):
    cp = classic_potentials()[name]
    m = build_cycle(8)
    for seed in range(6):
        wf = evolved(m, cp.k, 8, seed)
        assert cp.original(wf) - canonical_min(cp.canonical, wf).value == multiple * m.diameter


def test_ck_offset_follows_square_sum():
    m = build_cycle(6)
    for k in (2, 3):
        wf = evolved(m, k, 6, seed=k)
        offset = classic_potentials(ck_k=(k,))[f"CK{k}"].original(wf) - canonical_min(ck_canonical(k), wf).value
        assert offset == m.diameter * sum((k - i) ** 2 for i in range(1, k))


def test_example1_tracks_phi_with_constant_shift():
    for n in (6, 8):
        m = build_cycle(n)
        for seed in range(3):
            wf = evolved(m, 3, 8, seed)
            assert phi_value(wf) - canonical_min(example1_potential(), wf).value == 3 * m.diameter


def test_canonical_requires_matching_k(cycle8):
    with pytest.raises(ValueError):
        canonical_min(ck_canonical(2), initial_wf(cycle8, 3, (0, 1, 2)))
    path = build_from_matrix([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    with pytest.raises(Exception):
        canonical_min(ck_canonical(2), initial_wf(path, 2, (0, 1)))


def test_canonical_on_hypercube_support_values():
    cube = build_hypercube(3)
    s = SupportWF(cube, 3, (((7, 0, 1), 0), ((7, 0, 2), 0), ((7, 0, 4), 0)), 7)
    assert check_canonical_argument(bcl_canonical(), s)
    assert check_canonical_argument(ck_canonical(3), s)
