"""Finite metric spaces with integer distances, antipodes and k-configurations.

Every distance is an exact integer.  A configuration is a sorted tuple of k
point ids (repeats allowed); :func:`enumerate_configs` fixes the table order
used by every work-function table in the package.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import comb
from typing import Optional, Sequence

import numpy as np

Configuration = tuple[int, ...]

# point ids are stored as int16 in lookup tables
MAX_POINTS = 2**15


class MetricError(ValueError):
    """Raised for invalid metric data or invalid arguments to metric operations."""


@dataclass(frozen=True, eq=False)
class FiniteMetric:
    """Immutable finite metric on points ``0..n-1``.

    ``antipodes`` is ``None`` when the metric has no antipodal involution.
    Instances hash by identity so derived tables can be cached per metric.
    """

    dist: np.ndarray
    antipodes: Optional[tuple[int, ...]] = None
    name: str = "matrix"
    descriptor: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        d = np.array(self.dist, dtype=np.int64)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @cached_property
    def diameter(self) -> int:
        return int(self.dist.max()) if self.n else 0

    @property
    def has_antipodes(self) -> bool:
        return self.antipodes is not None

    def d(self, a: int, b: int) -> int:
        return int(self.dist[a, b])

    def antipode(self, a: int) -> int:
        if self.antipodes is None:
            raise MetricError(f"metric '{self.name}' has no antipodes")
        return self.antipodes[a]

    @cached_property
    def antipode_array(self) -> np.ndarray:
        if self.antipodes is None:
            raise MetricError(f"metric '{self.name}' has no antipodes")
        return np.asarray(self.antipodes, dtype=np.int64)

    def require_antipodes(self) -> None:
        if self.antipodes is None:
            raise MetricError(f"metric '{self.name}' has no antipodes; operation needs them")

    def check_point(self, p: int) -> int:
        if not 0 <= int(p) < self.n:
            raise MetricError(f"point {p} out of range for n={self.n}")
        return int(p)

    def __repr__(self):
        return f"FiniteMetric({self.name}, n={self.n}, diameter={self.diameter})"


def build_cycle(n: int) -> FiniteMetric:
    """Even cycle with unit edges: the discretized circle of diameter n/2."""
    if n < 4 or n % 2:
        raise MetricError(f"cycle needs an even n >= 4 so every point has an antipode, got {n}")
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    dist = np.minimum(gap, n - gap)
    anti = tuple((a + n // 2) % n for a in range(n))
    return FiniteMetric(dist, anti, name=f"cycle{n}", descriptor={"type": "cycle", "n": n})


def build_hypercube(dim: int) -> FiniteMetric:
    """Hamming cube {0,1}^dim; point ids are the coordinate bits."""
    if dim < 1:
        raise MetricError(f"hypercube dimension must be >= 1, got {dim}")
    if 2**dim > MAX_POINTS:
        raise MetricError(f"hypercube dimension {dim} exceeds the {MAX_POINTS}-point id width")
    n = 2**dim
    idx = np.arange(n)
    xor = idx[:, None] ^ idx[None, :]
    dist = np.zeros((n, n), dtype=np.int64)
    for bit in range(dim):
        dist += (xor >> bit) & 1
    full = n - 1
    anti = tuple(a ^ full for a in range(n))
    return FiniteMetric(dist, anti, name=f"cube{dim}", descriptor={"type": "hypercube", "dim": dim})


def find_antipodes(dist: np.ndarray) -> Optional[tuple[int, ...]]:
    """Return the antipodal involution of ``dist`` if one exists.

    Each row a admits at most one candidate partner b (d(a, y) + d(b, y) = diameter
    for all y forces d(a, b) = diameter and fixes the row of b), so scanning all
    candidates per point is exhaustive over involutions.
    """
    n = dist.shape[0]
    if n == 0:
        return None
    delta = int(dist.max())
    if delta == 0:
        return None
    anti = []
    for a in range(n):
        cands = np.nonzero(np.all(dist[a][None, :] + dist == delta, axis=1))[0]
        if len(cands) == 0:
            return None
        anti.append(int(cands[0]))
    if any(anti[anti[a]] != a for a in range(n)):
        return None
    return tuple(anti)


def build_from_matrix(matrix: Sequence[Sequence[int]], name: str = "matrix") -> FiniteMetric:
    """Validate an integer distance matrix and detect antipodes."""
    dist = np.asarray(matrix)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise MetricError(f"distance matrix must be square, got shape {dist.shape}")
    if dist.size and not np.issubdtype(dist.dtype, np.integer):
        if not np.all(np.asarray(dist, dtype=float) == np.round(np.asarray(dist, dtype=float))):
            raise MetricError("distances must be integers")
    dist = dist.astype(np.int64)
    n = dist.shape[0]
    if n > MAX_POINTS:
        raise MetricError(f"{n} points exceeds the {MAX_POINTS}-point id width")
    if (dist < 0).any():
        a, b = map(int, np.argwhere(dist < 0)[0])
        raise MetricError(f"negative distance d({a},{b}) = {dist[a, b]}")
    diag = np.nonzero(np.diag(dist))[0]
    if len(diag):
        a = int(diag[0])
        raise MetricError(f"non-zero diagonal d({a},{a}) = {dist[a, a]}")
    asym = np.argwhere(dist != dist.T)
    if len(asym):
        a, b = map(int, asym[0])
        raise MetricError(f"asymmetric: d({a},{b}) = {dist[a, b]} != d({b},{a}) = {dist[b, a]}")
    # through[a, c] = min over b of d(a,b) + d(b,c)
    for b in range(n):
        bad = np.argwhere(dist > dist[:, b][:, None] + dist[b][None, :])
        if len(bad):
            a, c = map(int, bad[0])
            raise MetricError(
                f"triangle inequality fails on ({a},{b},{c}): "
                f"d({a},{c}) = {dist[a, c]} > {dist[a, b]} + {dist[b, c]}"
            )
    return FiniteMetric(dist, find_antipodes(dist), name=name,
                        descriptor={"type": "matrix", "matrix": dist.tolist()})


def metric_from_descriptor(desc: dict) -> FiniteMetric:
    """Build a metric from its JSON descriptor ``{"type": ..., "n"|"dim"|"matrix": ...}``."""
    kind = desc.get("type")
    if kind == "cycle":
        return build_cycle(int(desc["n"]))
    if kind == "hypercube":
        return build_hypercube(int(desc["dim"]))
    if kind == "matrix":
        return build_from_matrix(desc["matrix"])
    raise MetricError(f"unknown metric type {kind!r}")


def enumerate_configs(m: FiniteMetric | int, k: int) -> list[Configuration]:
    """All k-multisets of points as sorted tuples, in lexicographic order."""
    n = m if isinstance(m, int) else m.n
    if k < 1:
        raise MetricError(f"k must be >= 1, got {k}")
    return list(itertools.combinations_with_replacement(range(n), k))


def canon(points) -> Configuration:
    return tuple(sorted(int(p) for p in points))


def _matching_cost(dist: np.ndarray, X, Y) -> int:
    return min(sum(int(dist[x, y]) for x, y in zip(X, perm)) for perm in itertools.permutations(Y))


def wasserstein(m: FiniteMetric, X, Y) -> int:
    """Minimum-cost perfect matching between two k-multisets."""
    if len(X) != len(Y):
        raise MetricError(f"configurations have different sizes {len(X)} and {len(Y)}")
    for p in itertools.chain(X, Y):
        m.check_point(p)
    return _matching_cost(m.dist, X, Y)


class ConfigSpace:
    """Lookup tables for the k-configurations of one metric.

    ``configs`` is the (N, k) array in :func:`enumerate_configs` order and
    ``index`` maps any ordered k-tuple of points to its configuration row.
    """

    def __init__(self, metric: FiniteMetric, k: int):
        if k < 1:
            raise MetricError(f"k must be >= 1, got {k}")
        self.metric = metric
        self.k = k
        self.configs_list = enumerate_configs(metric, k)
        self.configs = np.array(self.configs_list, dtype=np.int64).reshape(len(self.configs_list), k)
        n = metric.n
        index = np.full((n,) * k, -1, dtype=np.int64)
        for row, conf in enumerate(self.configs_list):
            for perm in set(itertools.permutations(conf)):
                index[perm] = row
        self.index = index
        self.row_of = {conf: row for row, conf in enumerate(self.configs_list)}

    def __len__(self):
        return len(self.configs_list)

    @property
    def n(self) -> int:
        return self.metric.n

    def lookup(self, points) -> int:
        """Row of the configuration holding ``points`` (any order)."""
        if len(points) != self.k:
            raise MetricError(f"expected {self.k} points, got {len(points)}")
        return int(self.index[tuple(self.metric.check_point(p) for p in points)])

    def lookup_rows(self, cols: np.ndarray) -> np.ndarray:
        """Vectorized lookup: ``cols`` has trailing axis k."""
        return self.index[tuple(cols[..., i] for i in range(self.k))]

    @cached_property
    def wasserstein_matrix(self) -> np.ndarray:
        """All-pairs configuration distances, brute force over the k! matchings."""
        dist = self.metric.dist
        C = self.configs
        best = None
        for perm in itertools.permutations(range(self.k)):
            cost = np.zeros((len(C), len(C)), dtype=np.int64)
            for i, j in enumerate(perm):
                cost += dist[C[:, i][:, None], C[:, j][None, :]]
            best = cost if best is None else np.minimum(best, cost)
        best.setflags(write=False)
        return best

    @cached_property
    def antipode_rows(self) -> np.ndarray:
        """Row of the configuration of antipodes, for every row."""
        anti = self.metric.antipode_array
        return self.lookup_rows(anti[self.configs])

    def power_row(self, p: int) -> int:
        """Row of p^k."""
        return self.lookup((p,) * self.k)

    @cached_property
    def common_counts(self) -> np.ndarray:
        """Size of the multiset intersection of every pair of configurations."""
        N, n = len(self), self.n
        counts = np.zeros((N, n), dtype=np.int64)
        for i in range(self.k):
            np.add.at(counts, (np.arange(N), self.configs[:, i]), 1)
        out = np.zeros((N, N), dtype=np.int64)
        for p in range(n):
            out += np.minimum(counts[:, p][:, None], counts[:, p][None, :])
        return out


@lru_cache(maxsize=64)
def config_space(metric: FiniteMetric, k: int) -> ConfigSpace:
    return ConfigSpace(metric, k)


def num_configs(n: int, k: int) -> int:
    return comb(n + k - 1, k)
