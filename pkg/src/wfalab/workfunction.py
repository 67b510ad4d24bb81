"""Exact work-function tables and checkers for their structural properties.

A :class:`WorkFunction` stores one integer per k-configuration, indexed in
:func:`wfalab.metric.enumerate_configs` order.  Checkers return a
:class:`Report` whose ``violations`` carry explicit witnesses.
"""
from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .metric import (
    Configuration,
    ConfigSpace,
    FiniteMetric,
    MetricError,
    canon,
    config_space,
    metric_from_descriptor,
)


@dataclass
class Report:
    name: str
    passed: bool
    violations: list = field(default_factory=list)
    witness: object = None
    detail: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({len(self.violations)} violations, first: {self.violations[0]})" if self.violations else ""
        return f"{self.name}: {status}{extra}"


@dataclass(frozen=True, eq=False)
class WorkFunction:
    metric: FiniteMetric
    k: int
    values: np.ndarray
    last_request: Optional[int] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.int64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if len(v) != len(self.space):
            raise ValueError(f"table has {len(v)} entries, expected {len(self.space)}")

    @property
    def space(self) -> ConfigSpace:
        return config_space(self.metric, self.k)

    def __call__(self, points) -> int:
        return int(self.values[self.space.lookup(points)])

    def at_rows(self, rows) -> np.ndarray:
        return self.values[rows]

    @cached_property
    def digest(self) -> str:
        return hashlib.sha256(self.values.tobytes()).hexdigest()[:16]

    @cached_property
    def triple_table(self) -> np.ndarray:
        """``T[a, b, ...] = w({a, b, ...})`` as a dense n^k array."""
        return self.values[self.space.index]

    def with_values(self, values, last_request="keep") -> "WorkFunction":
        r = self.last_request if last_request == "keep" else last_request
        return WorkFunction(self.metric, self.k, values, r)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "last_request": self.last_request,
            "values": self.values.tolist(),
        }


@dataclass(frozen=True)
class SupportWF:
    """Function induced by support sets ``w(X) = min_i v_i + d(S_i, X)``."""

    metric: FiniteMetric
    k: int
    pairs: tuple[tuple[Configuration, int], ...]
    r: int

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("support list must be non-empty")
        fixed = []
        for S, v in self.pairs:
            S = canon(S)
            if len(S) != self.k:
                raise ValueError(f"support {S} has {len(S)} points, expected k={self.k}")
            for p in S:
                self.metric.check_point(p)
            if self.r not in S:
                raise ValueError(f"support {S} does not contain the last request {self.r}")
            if v < 0:
                raise ValueError(f"support value {v} for {S} is negative")
            fixed.append((S, int(v)))
        object.__setattr__(self, "pairs", tuple(fixed))

    @classmethod
    def from_json(cls, data: dict) -> "SupportWF":
        metric = metric_from_descriptor(data["metric"])
        pairs = tuple((tuple(s["S"]), int(s["v"])) for s in data["supports"])
        return cls(metric, int(data.get("k", 3)), pairs, int(data["r"]))

    def to_json(self) -> dict:
        return {
            "metric": self.metric.descriptor,
            "k": self.k,
            "r": self.r,
            "supports": [{"S": list(S), "v": v} for S, v in self.pairs],
        }


def _check_config(m: FiniteMetric, k: int, X) -> Configuration:
    if len(X) != k:
        raise MetricError(f"configuration {tuple(X)} has {len(X)} points, expected {k}")
    return canon(m.check_point(p) for p in X)


def initial_wf(m: FiniteMetric, k: int, X0) -> WorkFunction:
    X0 = _check_config(m, k, X0)
    sp = config_space(m, k)
    return WorkFunction(m, k, sp.wasserstein_matrix[sp.row_of[X0]].copy())


def update(wf: WorkFunction, r: int) -> WorkFunction:
    """One request: ``w_t(X) = min over x in X of w_{t-1}(X - x + r) + d(x, r)``."""
    r = wf.metric.check_point(r)
    sp = wf.space
    C = sp.configs
    best = None
    for pos in range(wf.k):
        moved = C.copy()
        moved[:, pos] = r
        cand = wf.values[sp.lookup_rows(moved)] + wf.metric.dist[C[:, pos], r]
        best = cand if best is None else np.minimum(best, cand)
    return WorkFunction(wf.metric, wf.k, best, r)


def update_oracle(wf: WorkFunction, r: int) -> WorkFunction:
    """Definitional update: min over Y containing r of w_{t-1}(Y) + d(Y, X)."""
    r = wf.metric.check_point(r)
    sp = wf.space
    holds_r = np.any(sp.configs == r, axis=1)
    W = sp.wasserstein_matrix[holds_r]
    vals = (wf.values[holds_r][:, None] + W).min(axis=0)
    return WorkFunction(wf.metric, wf.k, vals, r)


def run_requests(wf: WorkFunction, requests: Sequence[int]) -> WorkFunction:
    for r in requests:
        wf = update(wf, r)
    return wf


def from_support(s: SupportWF) -> WorkFunction:
    sp = config_space(s.metric, s.k)
    rows = [sp.row_of[S] for S, _ in s.pairs]
    vals = np.array([v for _, v in s.pairs], dtype=np.int64)
    table = (vals[:, None] + sp.wasserstein_matrix[rows]).min(axis=0)
    return WorkFunction(s.metric, s.k, table, s.r)


def _same_space(a: WorkFunction, b: WorkFunction):
    if a.metric is not b.metric or a.k != b.k:
        raise ValueError("work functions live on different configuration spaces")


def check_monotone_pair(prev: WorkFunction, next: WorkFunction, r: int) -> Report:
    _same_space(prev, next)
    sp = prev.space
    violations = []
    for row in np.nonzero(next.values < prev.values)[0]:
        violations.append(("decrease", sp.configs_list[row], int(prev.values[row]), int(next.values[row])))
    holds_r = np.any(sp.configs == r, axis=1)
    for row in np.nonzero(holds_r & (next.values != prev.values))[0]:
        violations.append(("changed-with-request", sp.configs_list[row], int(prev.values[row]), int(next.values[row])))
    return Report("monotonicity", not violations, violations)


def check_lipschitz(wf: WorkFunction, max_witnesses: int = 20) -> Report:
    sp = wf.space
    diff = wf.values[:, None] - wf.values[None, :]
    bad = np.argwhere(diff > sp.wasserstein_matrix)
    violations = [
        (sp.configs_list[a], sp.configs_list[b], int(wf.values[a]), int(wf.values[b]), int(sp.wasserstein_matrix[a, b]))
        for a, b in bad[:max_witnesses]
    ]
    return Report("lipschitz", len(bad) == 0, violations, detail={"count": int(len(bad))})


class _QuasiConvexTables:
    """Per-space index tables for the quasi-convexity exchange inequality.

    For each bijection ``perm`` (position i of X goes to position perm[i] of Y)
    and each subset mask of X-positions moved across, ``swap[p, m]`` holds the
    row of X with the masked positions replaced by their images in Y.  The
    partner configuration of mask m is the one for the complementary mask.
    """

    def __init__(self, sp: ConfigSpace):
        k, C = sp.k, sp.configs
        self.perms = list(itertools.permutations(range(k)))
        N = len(sp)
        X = np.broadcast_to(C[:, None, :], (N, N, k))
        Y = np.broadcast_to(C[None, :, :], (N, N, k))
        dtype = np.int16 if N < 2**15 else np.int32
        self.swap = np.empty((len(self.perms), 2**k, N, N), dtype=dtype)
        self.valid = np.empty((len(self.perms), N, N), dtype=bool)
        common = sp.common_counts
        for pi, perm in enumerate(self.perms):
            Yp = Y[:, :, list(perm)]
            fixed = (X == Yp).sum(axis=2)
            # fixing every common copy is equivalent to fixing |X ∩ Y| positions
            self.valid[pi] = fixed == common
            for mask in range(2**k):
                sel = np.array([(mask >> i) & 1 for i in range(k)], dtype=bool)
                mixed = np.where(sel, Yp, X)
                self.swap[pi, mask] = sp.lookup_rows(mixed)


_QC_CACHE: dict = {}


def _qc_tables(sp: ConfigSpace) -> _QuasiConvexTables:
    key = id(sp)
    if key not in _QC_CACHE:
        _QC_CACHE[key] = (sp, _QuasiConvexTables(sp))
    return _QC_CACHE[key][1]


def _bijection_ok(wf: WorkFunction, X: Configuration, Y: Configuration, perm) -> bool:
    k = wf.k
    common = itertools.chain.from_iterable(
        [p] * min(X.count(p), Y.count(p)) for p in set(X)
    )
    fixed = sum(1 for i in range(k) if X[i] == Y[perm[i]])
    if fixed != len(list(common)):
        return False
    lhs = wf(X) + wf(Y)
    for mask in range(2**k):
        A = [Y[perm[i]] if (mask >> i) & 1 else X[i] for i in range(k)]
        B = [X[i] if (mask >> i) & 1 else Y[perm[i]] for i in range(k)]
        if lhs < wf(A) + wf(B):
            return False
    return True


def check_quasiconvex(wf: WorkFunction, X, Y) -> Report:
    """Search bijections X -> Y fixing common points for the exchange inequality."""
    X = _check_config(wf.metric, wf.k, X)
    Y = _check_config(wf.metric, wf.k, Y)
    for perm in itertools.permutations(range(wf.k)):
        if _bijection_ok(wf, X, Y, perm):
            return Report("quasi-convexity", True, witness=[(X[i], Y[perm[i]]) for i in range(wf.k)])
    return Report("quasi-convexity", False, [("no bijection works", X, Y)])


def check_quasiconvex_all(wf: WorkFunction, max_witnesses: int = 20) -> Report:
    """Quasi-convexity for every ordered pair of configurations at once."""
    sp = wf.space
    qc = _qc_tables(sp)
    v = wf.values
    lhs = v[:, None] + v[None, :]
    full = 2**wf.k - 1
    found = np.zeros(lhs.shape, dtype=bool)
    for pi in range(len(qc.perms)):
        ok = qc.valid[pi].copy()
        for mask in range(2**wf.k):
            if mask > full - mask:
                break
            rhs = v[qc.swap[pi, mask]] + v[qc.swap[pi, full - mask]]
            ok &= lhs >= rhs
        found |= ok
    bad = np.argwhere(~found)
    violations = [(sp.configs_list[a], sp.configs_list[b]) for a, b in bad[:max_witnesses]]
    return Report("quasi-convexity", len(bad) == 0, violations, detail={"count": int(len(bad))})


def _dist_to_power(sp: ConfigSpace, r: int) -> np.ndarray:
    return sp.wasserstein_matrix[:, sp.power_row(r)]


def check_duality(prev: WorkFunction, next: WorkFunction, r: int) -> Report:
    _same_space(prev, next)
    sp = prev.space
    score = prev.values - _dist_to_power(sp, r)
    argmin = np.nonzero(score == score.min())[0]
    gain = next.values - prev.values
    argmax = set(np.nonzero(gain == gain.max())[0].tolist())
    missing = [sp.configs_list[row] for row in argmin if row not in argmax]
    return Report(
        "duality", not missing, missing,
        detail={"argmin": [sp.configs_list[i] for i in argmin], "max_gain": int(gain.max())},
    )


def check_antipode_minimizer(prev: WorkFunction, r: int) -> Report:
    m = prev.metric
    m.require_antipodes()
    sp = prev.space
    score = prev.values - _dist_to_power(sp, r)
    at = int(score[sp.power_row(m.antipode(r))])
    best = int(score.min())
    witness = sp.configs_list[int(np.argmin(score))]
    ok = at == best
    return Report("antipode-minimizer", ok, [] if ok else [(witness, best, at)],
                  detail={"min": best, "at_antipode": at})


def extended_cost(prev: WorkFunction, next: WorkFunction) -> int:
    _same_space(prev, next)
    return int((next.values - prev.values).max())


def resolves_from(wf: WorkFunction, X, x: int, r: int) -> bool:
    X = _check_config(wf.metric, wf.k, X)
    if x not in X:
        raise ValueError(f"point {x} is not in configuration {X}")
    rest = list(X)
    rest.remove(x)
    return wf(X) == wf(rest + [r]) + wf.metric.d(x, r)


def check_resolving(wf: WorkFunction, r: int) -> Report:
    """Every configuration resolves from at least one of its points."""
    sp = wf.space
    C = sp.configs
    any_ok = np.zeros(len(sp), dtype=bool)
    for pos in range(wf.k):
        moved = C.copy()
        moved[:, pos] = r
        any_ok |= wf.values == wf.values[sp.lookup_rows(moved)] + wf.metric.dist[C[:, pos], r]
    bad = [sp.configs_list[i] for i in np.nonzero(~any_ok)[0]]
    return Report("resolving", not bad, bad)
