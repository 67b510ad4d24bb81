"""Exhaustive check of every k=3 canonical potential against support-set test cases.

A bitmask selects distance pairs among the six slots (1,1) .. (3,2) in the
order of :func:`wfalab.potential.all_pairs`.  A bitmask passes a test case when
the potential's minimum with u fixed to the request equals its global minimum.
"""
from __future__ import annotations

import hashlib
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .metric import FiniteMetric, build_cycle, build_hypercube
from .potential import all_pairs, slots_of
from .workfunction import SupportWF, from_support

K = 3
NPAIRS = len(all_pairs(K))
TOTAL = 2**NPAIRS

# report states per (bitmask, test case)
UNEVALUATED, PASS, FAIL = 0, 1, 2


@dataclass(frozen=True)
class TestCase:
    name: str
    metric: FiniteMetric
    support: SupportWF

    __test__ = False  # not a pytest class

    def __post_init__(self):
        self.metric.require_antipodes()
        if self.support.metric is not self.metric:
            raise ValueError(f"test case {self.name}: support lives on another metric")

    @classmethod
    def from_json(cls, name: str, data: dict) -> "TestCase":
        s = SupportWF.from_json(data)
        return cls(name, s.metric, s)


def _digits(text: str) -> tuple[int, ...]:
    return tuple(int(c) for c in text)


@lru_cache(maxsize=1)
def builtin_testcases() -> tuple[TestCase, ...]:
    circle = build_cycle(8)
    cube = build_hypercube(3)
    a = [("456", 8), ("457", 8), ("436", 9), ("437", 9), ("416", 10), ("417", 10), ("425", 10), ("423", 11)]
    b = [("456", 8), ("405", 9), ("416", 10), ("425", 10), ("446", 10), ("401", 11), ("402", 11), ("422", 12)]
    c = [("701", 0), ("702", 0), ("704", 0)]

    def make(name, metric, pairs, r):
        return TestCase(name, metric, SupportWF(metric, K, tuple((_digits(s), v) for s, v in pairs), r))

    return (make("a", circle, a, 4), make("b", circle, b, 4), make("c", cube, c, 7))


@dataclass
class Tables:
    """Integer tables of one test case.

    ``base[u] = w(ū³)``, ``wtab[u, a, b] = w({u, a, b})`` and ``dtab`` is the
    distance matrix.  The remaining arrays re-index these for the sweep's
    group-of-two super-variables (state s = a * n + b).
    """

    name: str
    r: int
    base: np.ndarray
    wtab: np.ndarray
    dtab: np.ndarray
    dtype: type = np.int32
    group: np.ndarray = field(init=False, repr=False)
    intra: np.ndarray = field(init=False, repr=False)
    cross: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.dtab.shape[0]
        S = n * n
        first = np.repeat(np.arange(n), n)
        second = np.tile(np.arange(n), n)
        pos = (first, second)
        # worst-case magnitude: four work values plus fifteen distances
        bound = 4 * int(np.abs(self.wtab).max(initial=0)) + 4 * int(np.abs(self.base).max(initial=0)) \
            + NPAIRS * int(self.dtab.max(initial=0))
        self.dtype = np.int16 if bound < 2**14 else np.int32
        assert bound < 2**30, "work values too large for the sweep tables"
        self.group = self.wtab.reshape(n, S).astype(self.dtype)
        self.intra = self.dtab[first, second].astype(self.dtype)
        # cross[pa, pb][s, s'] = d(position pa of s, position pb of s')
        self.cross = np.empty((2, 2, S, S), dtype=self.dtype)
        for pa in range(2):
            for pb in range(2):
                self.cross[pa, pb] = self.dtab[pos[pa][:, None], pos[pb][None, :]]

    @property
    def n(self) -> int:
        return self.dtab.shape[0]


def precompute(tc: TestCase) -> Tables:
    wf = from_support(tc.support)
    m = tc.metric
    anti = m.antipode_array
    T = wf.triple_table
    return Tables(tc.name, tc.support.r, T[anti, anti, anti].copy(), T.copy(), m.dist.copy())


@lru_cache(maxsize=None)
def _pair_layout():
    """For each pair index: ('intra', group) or ('cross', g, g', pa, pb) with g < g'."""
    slot_index = {s: i for i, s in enumerate(slots_of(K))}
    layout = []
    for a, b in all_pairs(K):
        ia, ib = slot_index[a], slot_index[b]
        ga, pa = divmod(ia, 2)
        gb, pb = divmod(ib, 2)
        if ga == gb:
            layout.append(("intra", ga))
        else:
            if ga > gb:
                ga, gb, pa, pb = gb, ga, pb, pa
            layout.append(("cross", ga, gb, pa, pb))
    return tuple(layout)


def _bitmask_terms(tables: Tables, bitmask: int):
    S = tables.n ** 2
    dt = tables.dtype
    groups = [tables.group.copy() for _ in range(K)]
    M = {(0, 1): np.zeros((S, S), dt), (0, 2): np.zeros((S, S), dt), (1, 2): np.zeros((S, S), dt)}
    for b, item in enumerate(_pair_layout()):
        if not (bitmask >> b) & 1:
            continue
        if item[0] == "intra":
            groups[item[1]] -= tables.intra[None, :]
        else:
            _, ga, gb, pa, pb = item
            M[(ga, gb)] += tables.cross[pa, pb]
    mtot = M[(0, 1)][:, :, None] + M[(0, 2)][:, None, :]
    mtot += M[(1, 2)][None, :, :]
    return groups, mtot


def _min_at(tables: Tables, groups, mtot, u: int) -> int:
    pair = groups[0][u][:, None] + groups[1][u][None, :]
    grid = pair[:, :, None] - mtot
    grid += groups[2][u][None, None, :]
    return int(grid.min()) + int(tables.base[u])


def check_bitmask(tables: Tables, bitmask: int) -> bool:
    """Canonical argument for one potential: no u beats the minimum at u = r."""
    groups, mtot = _bitmask_terms(tables, bitmask)
    m_r = _min_at(tables, groups, mtot, tables.r)
    for u in range(tables.n):
        if u != tables.r and _min_at(tables, groups, mtot, u) < m_r:
            return False
    return True


# ----------------------------------------------------------------------------
# slot relabelings


@lru_cache(maxsize=1)
def _relabel_maps() -> np.ndarray:
    """(48, 15) array: image pair index of every pair under each slot relabeling."""
    order = all_pairs(K)
    where = {p: i for i, p in enumerate(order)}
    maps = []
    for perm in itertools.permutations(range(1, K + 1)):
        for flips in itertools.product((False, True), repeat=K):
            def move(slot):
                i, j = slot
                j2 = (3 - j) if flips[i - 1] else j
                return (perm[i - 1], j2)

            img = []
            for a, b in order:
                x, y = move(a), move(b)
                img.append(where[(x, y) if x < y else (y, x)])
            maps.append(img)
    return np.array(maps, dtype=np.int64)


def relabel(bitmask: int, index: int) -> int:
    img = _relabel_maps()[index]
    return sum(1 << int(img[b]) for b in range(NPAIRS) if (bitmask >> b) & 1)


@lru_cache(maxsize=1)
def _canonical_table() -> np.ndarray:
    masks = np.arange(TOTAL, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(NPAIRS)) & 1
    best = np.full(TOTAL, TOTAL, dtype=np.int64)
    for img in _relabel_maps():
        image = (bits << img[None, :]).sum(axis=1)
        np.minimum(best, image, out=best)
    return best


def orbit_canonicalize(bitmask: int) -> int:
    """Smallest bitmask among the 48 relabelings of slots."""
    if not 0 <= bitmask < TOTAL:
        raise ValueError(f"bitmask {bitmask} out of range")
    return int(_canonical_table()[bitmask])


def orbit(bitmask: int) -> list[int]:
    return sorted({relabel(bitmask, i) for i in range(len(_relabel_maps()))})


# ----------------------------------------------------------------------------
# sweep


@dataclass
class SweepReport:
    testcases: list[str]
    bitmasks: np.ndarray
    states: np.ndarray  # (len(bitmasks), len(testcases)) of UNEVALUATED / PASS / FAIL
    subsets: list[str]
    elapsed: float = 0.0
    workers: int = 1

    @property
    def total(self) -> int:
        return len(self.bitmasks)

    def passes(self, subset) -> np.ndarray:
        cols = [self.testcases.index(c) for c in subset_members(subset, self.testcases)]
        if not cols:
            return np.ones(self.total, dtype=bool)
        sub = self.states[:, cols]
        if np.any(np.all(sub != FAIL, axis=1) & np.any(sub == UNEVALUATED, axis=1)):
            raise ValueError(f"subset {subset!r} was not fully decided by this sweep")
        return np.all(sub == PASS, axis=1)

    def survivors(self, subset) -> list[int]:
        return [int(b) for b in self.bitmasks[self.passes(subset)]]

    @property
    def pass_all(self) -> int:
        return int(self.passes(self.testcases).sum())

    def orbits(self, subset) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for b in self.survivors(subset):
            out.setdefault(orbit_canonicalize(b), []).append(b)
        return out

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.asarray(self.bitmasks, dtype=np.int64).tobytes())
        h.update(np.asarray(self.states, dtype=np.uint8).tobytes())
        return h.hexdigest()

    def to_json(self) -> dict:
        fmt = "{:04x}".format
        out = {
            "testcases": list(self.testcases),
            "total": self.total,
            "pass_all": self.pass_all,
            "per_case": {
                name: {
                    "evaluated": int((self.states[:, i] != UNEVALUATED).sum()),
                    "passed": int((self.states[:, i] == PASS).sum()),
                }
                for i, name in enumerate(self.testcases)
            },
            "survivors": {s: [fmt(b) for b in self.survivors(s)] for s in self.subsets},
            "orbits": {
                s: {fmt(rep): [fmt(b) for b in members] for rep, members in self.orbits(s).items()}
                for s in self.subsets
            },
            "digest": self.digest(),
            "elapsed_seconds": round(self.elapsed, 3),
            "workers": self.workers,
        }
        return out


def subset_label(members: Sequence[str]) -> str:
    """'ab' when every name is one character, otherwise names joined by '+'."""
    return "".join(members) if all(len(c) == 1 for c in members) else "+".join(members)


def subset_members(label, names: Sequence[str]) -> tuple[str, ...]:
    """Inverse of :func:`subset_label` (a sequence of names is accepted as is)."""
    if not isinstance(label, str):
        members = tuple(label)
    elif label in names:
        members = (label,)
    elif "+" in label:
        members = tuple(label.split("+"))
    else:
        members = tuple(label)
    for c in members:
        if c not in names:
            raise ValueError(f"subset {label!r} names unknown test case {c!r}")
    return members


def default_subsets(names: Sequence[str]) -> list[str]:
    """Prefixes of the case names: ['a', 'ab', 'abc'] for the built-in cases."""
    return [subset_label(names[:i]) for i in range(1, len(names) + 1)]


def _evaluate_chunk(tables: Sequence[Tables], order: Sequence[int], subsets: Sequence[tuple[int, ...]],
                    bitmasks: np.ndarray) -> np.ndarray:
    states = np.zeros((len(bitmasks), len(tables)), dtype=np.uint8)
    for row, b in enumerate(bitmasks):
        st = states[row]
        for ci in order:
            # a case is needed while some requested subset holding it is undecided
            needed = any(
                ci in sub and not any(st[c] == FAIL for c in sub) for sub in subsets
            )
            if not needed:
                continue
            st[ci] = PASS if check_bitmask(tables[ci], int(b)) else FAIL
    return states


def sweep(testcases: Sequence[TestCase], bitmask_range: Optional[Iterable[int]] = None,
          order: Optional[Sequence[str]] = None, subsets: Optional[Sequence[str]] = None,
          workers: int = 1) -> SweepReport:
    """Evaluate bitmasks against test cases with early exit.

    ``order`` is the evaluation order of case names (default: "c" first when
    present, then the rest); ``subsets`` are the case-name strings whose
    survivor lists must be exact (default: prefixes of the case list).  Each
    bitmask evaluates a case only while it can still change a requested
    subset.  Survivor lists, orbits and ``pass_all`` are therefore the same for
    every ``order``; the raw ``states`` (and the digest) record which cases were
    skipped and so depend on ``order``, but never on ``workers``.
    """
    names = [tc.name for tc in testcases]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate test case names {names}")
    bitmasks = np.arange(TOTAL) if bitmask_range is None else np.array(list(bitmask_range), dtype=np.int64)
    if len(bitmasks) and (bitmasks.min() < 0 or bitmasks.max() >= TOTAL):
        raise ValueError("bitmask range outside [0, 2^15)")
    if subsets is None:
        subsets = default_subsets(names)
    else:
        subsets = [subset_label(subset_members(s, names)) for s in subsets]
    if order is None:
        order = sorted(names, key=lambda c: (c != "c", names.index(c)))
    order_idx = [names.index(c) for c in order]
    sub_idx = [tuple(names.index(c) for c in subset_members(s, names)) for s in subsets]
    if names and tuple(range(len(names))) not in sub_idx:
        sub_idx.append(tuple(range(len(names))))

    start = time.perf_counter()
    tables = [precompute(tc) for tc in testcases]
    if workers <= 1 or len(bitmasks) < 2 * workers:
        states = _evaluate_chunk(tables, order_idx, sub_idx, bitmasks)
    else:
        chunks = np.array_split(bitmasks, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_evaluate_chunk, [tables] * workers, [order_idx] * workers,
                                  [sub_idx] * workers, chunks))
        states = np.concatenate(parts, axis=0)
    return SweepReport(names, bitmasks, states.reshape(len(bitmasks), len(names)), subsets,
                       time.perf_counter() - start, workers)
