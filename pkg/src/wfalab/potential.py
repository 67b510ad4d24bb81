"""Potentials over work functions on metrics with antipodes.

Two families live here:

* the 3-server circle potential ``Phi(w, u, x, y, z)`` and its distance-free
  variant ``Phi*``, minimized exhaustively over all points;
* canonical potentials ``w(ū^k) + sum_i w(u X_i) - sum_{pairs} d(.,.)`` where
  the k(k-1) slot points are indexed ``(i, j)`` with ``i in 1..k`` and
  ``j in 1..k-1``, plus the classic potentials written in original form.

Every minimization is exhaustive and uses exact integers.  Ties go to the
smallest ``u`` and then to the lexicographically smallest slot assignment.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Optional

import numpy as np

from .metric import FiniteMetric, MetricError
from .workfunction import Report, SupportWF, WorkFunction, from_support

Slot = tuple[int, int]
SlotPair = tuple[Slot, Slot]


@dataclass(frozen=True)
class PotentialWitness:
    value: int
    u: int
    slots: tuple[int, ...]


def _require_k3_antipodes(wf: WorkFunction):
    if wf.k != 3:
        raise ValueError(f"the circle potential is defined for k=3, got k={wf.k}")
    wf.metric.require_antipodes()


def in_P(m: FiniteMetric, x: int, y: int, z: int) -> bool:
    """(x, y, z) are not inside one open semicircle: pairwise distances sum to 2Δ."""
    m.require_antipodes()
    return m.d(x, y) + m.d(y, z) + m.d(z, x) == 2 * m.diameter


def phi_star(wf: WorkFunction, u: int, x: int, y: int, z: int) -> int:
    _require_k3_antipodes(wf)
    a = wf.metric.antipode
    return wf((a(u),) * 3) + wf((u, x, a(y))) + wf((u, y, a(z))) + wf((u, z, a(x)))


def phi_circle(wf: WorkFunction, u: int, x: int, y: int, z: int) -> int:
    d = wf.metric.d
    return phi_star(wf, u, x, y, z) - d(x, y) - d(y, z) - d(z, x)


def _circle_grid(wf: WorkFunction, with_distances: bool = True) -> np.ndarray:
    """Phi (or Phi*) for every (u, x, y, z) as an n^4 array."""
    _require_k3_antipodes(wf)
    m = wf.metric
    anti = m.antipode_array
    T = wf.triple_table
    base = T[anti, anti, anti]
    F = T[:, :, anti]  # F[u, x, y] = w(u x ȳ)
    grid = (
        base[:, None, None, None]
        + F[:, :, :, None]                        # w(u x ȳ)  axes (u, x, y)
        + F[:, None, :, :]                        # w(u y z̄)  axes (u, y, z)
        + F.transpose(0, 2, 1)[:, :, None, :]     # w(u z x̄)  axes (u, x, z)
    )
    if with_distances:
        D = m.dist
        grid = grid - (D[:, :, None] + D[None, :, :] + D.T[:, None, :])[None]
    return grid


def _witness_from_grid(grid: np.ndarray, u_offset: int = 0) -> PotentialWitness:
    flat = int(np.argmin(grid))
    u, x, y, z = np.unravel_index(flat, grid.shape)
    return PotentialWitness(int(grid.flat[flat]), int(u) + u_offset, (int(x), int(y), int(z)))


def phi_min(wf: WorkFunction) -> PotentialWitness:
    return _witness_from_grid(_circle_grid(wf))


def phi_min_at(wf: WorkFunction, u: int) -> PotentialWitness:
    u = wf.metric.check_point(u)
    return _witness_from_grid(_circle_grid(wf)[u:u + 1], u_offset=u)


def phi_value(wf: WorkFunction) -> int:
    return phi_min(wf).value


def p_mask(m: FiniteMetric) -> np.ndarray:
    """Boolean n^3 membership table of the semicircle set P."""
    m.require_antipodes()
    D = m.dist
    total = D[:, :, None] + D[None, :, :] + D.T[:, None, :]
    return total == 2 * m.diameter


def phi_star_min_P(wf: WorkFunction) -> PotentialWitness:
    """Minimum of Phi* over all u and (x, y, z) in P."""
    grid = _circle_grid(wf, with_distances=False)
    big = np.iinfo(np.int64).max
    grid = np.where(p_mask(wf.metric)[None], grid, big)
    return _witness_from_grid(grid)


def check_lemma3(wf: WorkFunction, r: Optional[int] = None) -> Report:
    """The circle potential's global minimum is attained at u = last request."""
    r = wf.last_request if r is None else r
    if r is None:
        raise ValueError("work function has no last request")
    grid = _circle_grid(wf)
    glob = _witness_from_grid(grid)
    at_r = _witness_from_grid(grid[r:r + 1], u_offset=r)
    ok = at_r.value == glob.value
    return Report("minimizer-at-request", ok, [] if ok else [glob],
                  witness=at_r, detail={"global": glob.value, "at_request": at_r.value})


def check_lemma4(wf: WorkFunction) -> Report:
    """Unrestricted Phi minimum equals the P-restricted Phi* minimum minus 2Δ."""
    glob = phi_min(wf)
    restricted = phi_star_min_P(wf)
    target = restricted.value - 2 * wf.metric.diameter
    ok = glob.value == target
    return Report("semicircle-equivalence", ok, [] if ok else [(glob, restricted)],
                  witness=restricted, detail={"phi": glob.value, "restricted_minus_2delta": target})


# ----------------------------------------------------------------------------
# canonical potentials


def slots_of(k: int) -> list[Slot]:
    return [(i, j) for i in range(1, k + 1) for j in range(1, k)]


@lru_cache(maxsize=None)
def all_pairs(k: int) -> tuple[SlotPair, ...]:
    """Unordered slot pairs in the serialization order (lexicographic)."""
    return tuple(itertools.combinations(slots_of(k), 2))


def _norm_pair(a: Slot, b: Slot) -> SlotPair:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class CanonicalPotential:
    k: int
    pairs: frozenset

    def __post_init__(self):
        valid = set(all_pairs(self.k))
        norm = frozenset(_norm_pair(tuple(a), tuple(b)) for a, b in self.pairs)
        for a, b in norm:
            if a == b:
                raise ValueError(f"pair joins slot {a} with itself")
        bad = norm - valid
        if bad:
            raise ValueError(f"slot pairs out of range for k={self.k}: {sorted(bad)}")
        object.__setattr__(self, "pairs", norm)

    @classmethod
    def of(cls, k: int, pairs: Iterable) -> "CanonicalPotential":
        return cls(k, frozenset(pairs))

    @classmethod
    def from_bitmask(cls, k: int, bitmask: int) -> "CanonicalPotential":
        order = all_pairs(k)
        if not 0 <= bitmask < 2 ** len(order):
            raise ValueError(f"bitmask {bitmask} out of range for k={k}")
        return cls(k, frozenset(p for b, p in enumerate(order) if (bitmask >> b) & 1))

    @classmethod
    def from_hex(cls, k: int, text: str) -> "CanonicalPotential":
        return cls.from_bitmask(k, int(text, 16))

    @property
    def bitmask(self) -> int:
        return sum(1 << b for b, p in enumerate(all_pairs(self.k)) if p in self.pairs)

    def hex(self) -> str:
        width = (len(all_pairs(self.k)) + 3) // 4
        return f"{self.bitmask:0{width}x}"

    def __len__(self):
        return len(self.pairs)


def eval_canonical(p: CanonicalPotential, wf: WorkFunction, u: int, slots) -> int:
    """Value at ``u`` and the slot assignment listed in ``slots_of(k)`` order."""
    if wf.k != p.k:
        raise ValueError(f"potential is for k={p.k}, work function has k={wf.k}")
    wf.metric.require_antipodes()
    k = p.k
    slots = tuple(int(s) for s in slots)
    if len(slots) != k * (k - 1):
        raise ValueError(f"expected {k * (k - 1)} slot points, got {len(slots)}")
    pos = {s: slots[i] for i, s in enumerate(slots_of(k))}
    total = wf((wf.metric.antipode(u),) * k)
    for i in range(1, k + 1):
        total += wf((u,) + tuple(pos[(i, j)] for j in range(1, k)))
    for a, b in p.pairs:
        total -= wf.metric.d(pos[a], pos[b])
    return total


class _CanonicalTables:
    """Dense per-group tables for one (potential, work function).

    Group i holds slots (i, 1..k-1) as one super-variable with n^(k-1) states.
    """

    def __init__(self, p: CanonicalPotential, wf: WorkFunction):
        if wf.k != p.k:
            raise ValueError(f"potential is for k={p.k}, work function has k={wf.k}")
        wf.metric.require_antipodes()
        k, n = p.k, wf.metric.n
        self.k, self.n = k, n
        self.S = n ** (k - 1)
        D = wf.metric.dist
        anti = wf.metric.antipode_array
        T = wf.triple_table if k > 1 else wf.values
        self.base = wf.values[wf.space.index[tuple([anti] * k)]] if k > 1 else wf.values[anti]
        # states[s] = the k-1 points of state s
        self.states = np.array(list(itertools.product(range(n), repeat=k - 1)), dtype=np.int64).reshape(self.S, k - 1)
        cols = tuple(self.states[:, j] for j in range(k - 1))
        group = np.stack([T[(np.full(self.S, u),) + cols] for u in range(n)])  # (n, S)
        self.group = []
        for i in range(1, k + 1):
            g = group.copy()
            for (a, b) in p.pairs:
                if a[0] == b[0] == i:
                    g -= D[self.states[:, a[1] - 1], self.states[:, b[1] - 1]][None, :]
            self.group.append(g)
        cross = np.zeros((self.S,) * k, dtype=np.int64)
        for (a, b) in p.pairs:
            if a[0] == b[0]:
                continue
            term = D[self.states[:, a[1] - 1][:, None], self.states[:, b[1] - 1][None, :]]
            shape = [1] * k
            shape[a[0] - 1] = self.S
            shape[b[0] - 1] = self.S
            cross = cross + term.reshape(shape)
        self.cross = cross

    def grid_at(self, u: int) -> np.ndarray:
        k = self.k
        total = -self.cross + self.base[u]
        for i in range(k):
            shape = [1] * k
            shape[i] = self.S
            total = total + self.group[i][u].reshape(shape)
        return total

    def witness(self, u: int, grid: np.ndarray) -> PotentialWitness:
        flat = int(np.argmin(grid))
        idx = np.unravel_index(flat, grid.shape)
        slots = tuple(int(v) for s in idx for v in self.states[s])
        return PotentialWitness(int(grid.flat[flat]), u, slots)


def canonical_min(p: CanonicalPotential, wf: WorkFunction, restrict_u: Optional[int] = None) -> PotentialWitness:
    """Exhaustive minimum over u (or the single ``restrict_u``) and all slot assignments."""
    tables = _CanonicalTables(p, wf)
    us = range(wf.metric.n) if restrict_u is None else [wf.metric.check_point(restrict_u)]
    best = None
    for u in us:
        w = tables.witness(u, tables.grid_at(u))
        if best is None or w.value < best.value:
            best = w
    return best


def check_canonical_argument(p: CanonicalPotential, wf_support: SupportWF | WorkFunction) -> bool:
    """True iff the canonical minimum is attained with u equal to the last request."""
    wf = from_support(wf_support) if isinstance(wf_support, SupportWF) else wf_support
    r = wf.last_request
    if r is None:
        raise ValueError("work function has no last request")
    return canonical_min(p, wf, restrict_u=r).value == canonical_min(p, wf).value


# ----------------------------------------------------------------------------
# named potentials


def paper_potential() -> CanonicalPotential:
    """Circle potential with distance terms among x, y, z and among their antipodes."""
    return CanonicalPotential.of(3, [
        ((1, 1), (2, 1)), ((2, 1), (3, 1)), ((3, 1), (1, 1)),
        ((1, 2), (2, 2)), ((2, 2), (3, 2)), ((3, 2), (1, 2)),
    ])


def example1_potential() -> CanonicalPotential:
    """Circle potential with antipode-enforcing pairs and the semicircle triangle."""
    return CanonicalPotential.of(3, [
        ((1, 2), (2, 1)), ((2, 2), (3, 1)), ((3, 2), (1, 1)),
        ((1, 1), (2, 1)), ((2, 1), (3, 1)), ((3, 1), (1, 1)),
    ])


def cl_canonical() -> CanonicalPotential:
    return CanonicalPotential.of(2, [((1, 1), (2, 1))])


def bcl_canonical() -> CanonicalPotential:
    return CanonicalPotential.of(3, [
        ((1, 2), (2, 2)),
        ((1, 1), (3, 1)), ((1, 1), (3, 2)),
        ((2, 1), (3, 1)), ((2, 1), (3, 2)),
    ])


def ck_canonical(k: int) -> CanonicalPotential:
    pairs = [
        ((i, l), (j, i))
        for i in range(1, k + 1)
        for j in range(i + 1, k + 1)
        for l in range(i, k)
    ]
    return CanonicalPotential.of(k, pairs)


def _last_request(wf: WorkFunction) -> int:
    if wf.last_request is None:
        raise ValueError("original-form potential needs the work function's last request")
    return wf.last_request


def cl_original(wf: WorkFunction) -> int:
    """min over x, y, z of w(rx) + w(ry) + w(rz) - d(r, x) - d(y, z), k = 2."""
    if wf.k != 2:
        raise ValueError(f"CL potential needs k=2, got k={wf.k}")
    wf.metric.require_antipodes()
    r = _last_request(wf)
    D = wf.metric.dist
    row = wf.triple_table[r]  # w(r a)
    first = int((row - D[r]).min())
    pair = int((row[:, None] + row[None, :] - D).min())
    return first + pair


def bcl_original(wf: WorkFunction) -> int:
    """min over C, p, b, b', a, a' of
    w(C) + w(r p b) + w(r p b') + w(r a a') - d(C, r^3) - d(b, b') - d(p, a) - d(p, a')."""
    if wf.k != 3:
        raise ValueError(f"BCL potential needs k=3, got k={wf.k}")
    wf.metric.require_antipodes()
    r = _last_request(wf)
    sp = wf.space
    D = wf.metric.dist
    c_term = int((wf.values - sp.wasserstein_matrix[:, sp.power_row(r)]).min())
    W = wf.triple_table[r]  # W[a, b] = w(r a b)
    # for each p: min over b, b' of W[p,b] + W[p,b'] - d(b,b')
    pb = (W[:, :, None] + W[:, None, :] - D[None, :, :]).min(axis=(1, 2))
    # for each p: min over a, a' of W[a,a'] - d(p,a) - d(p,a')
    pa = (W[None, :, :] - D[:, :, None] - D[:, None, :]).min(axis=(1, 2))
    return c_term + int((pb + pa).min())


def ck_original(wf: WorkFunction) -> int:
    """min over x_1..x_k of sum_{i=1}^{k+1} w(x̄_{i-1}^{i-1} x_i ... x_k)."""
    wf.metric.require_antipodes()
    k, n = wf.k, wf.metric.n
    anti = wf.metric.antipode_array
    best = None
    for xs in itertools.product(range(n), repeat=k):
        total = 0
        for i in range(1, k + 2):
            conf = [int(anti[xs[i - 2]])] * (i - 1) + list(xs[i - 1:])
            total += int(wf.values[wf.space.lookup(conf)])
        best = total if best is None else min(best, total)
    return best


@dataclass(frozen=True)
class ClassicPotential:
    name: str
    k: int
    original: Callable[[WorkFunction], int]
    canonical: CanonicalPotential


def classic_potentials(ck_k: Iterable[int] = (2, 3)) -> dict[str, ClassicPotential]:
    out = {
        "CL": ClassicPotential("CL", 2, cl_original, cl_canonical()),
        "BCL": ClassicPotential("BCL", 3, bcl_original, bcl_canonical()),
    }
    for k in ck_k:
        out[f"CK{k}"] = ClassicPotential(f"CK{k}", k, ck_original, ck_canonical(k))
    out["phi254a"] = ClassicPotential("phi254a", 3, phi_value, paper_potential())
    out["phi143a"] = ClassicPotential("phi143a", 3, phi_value, example1_potential())
    return out
