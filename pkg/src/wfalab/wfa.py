"""Work function algorithm simulation, OPT, and simple request adversaries."""
from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .metric import Configuration, FiniteMetric, canon, config_space, metric_from_descriptor
from .workfunction import WorkFunction, extended_cost, initial_wf, update

ADVERSARIES = ("uniform-random", "farthest-point", "antipodal")


@dataclass(frozen=True)
class Instance:
    metric: FiniteMetric
    k: int
    X0: Configuration
    requests: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.X0) != self.k:
            raise ValueError(f"X0 {self.X0} has {len(self.X0)} points, expected k={self.k}")
        for p in self.X0:
            self.metric.check_point(p)
        for r in self.requests:
            self.metric.check_point(r)
        object.__setattr__(self, "X0", canon(self.X0))
        object.__setattr__(self, "requests", tuple(int(r) for r in self.requests))

    @classmethod
    def from_json(cls, data: dict) -> "Instance":
        metric = metric_from_descriptor(data["metric"])
        return cls(metric, int(data["k"]), tuple(data["X0"]), tuple(data.get("requests", ())))

    def to_json(self) -> dict:
        return {"metric": self.metric.descriptor, "k": self.k, "X0": list(self.X0), "requests": list(self.requests)}


@dataclass(frozen=True)
class Step:
    t: int
    request: int
    config: Configuration
    cost: int
    wf_digest: str
    extended_cost: int
    potential: Optional[int] = None


@dataclass
class Trace:
    instance: Instance
    steps: list[Step] = field(default_factory=list)
    opt: int = 0
    phi0: Optional[int] = None
    final_wf: Optional[WorkFunction] = None

    @property
    def alg(self) -> int:
        return sum(s.cost for s in self.steps)

    @property
    def extended_total(self) -> int:
        return sum(s.extended_cost for s in self.steps)

    @property
    def configs(self) -> list[Configuration]:
        return [self.instance.X0] + [s.config for s in self.steps]

    def to_json(self) -> dict:
        return {
            "instance": self.instance.to_json(),
            "ALG": self.alg,
            "OPT": self.opt,
            "ALG_minus_3OPT": self.alg - 3 * self.opt,
            "extended_cost_total": self.extended_total,
            "phi0": self.phi0,
            "steps": [
                {
                    "t": s.t,
                    "request": s.request,
                    "config": list(s.config),
                    "cost": s.cost,
                    "wf_digest": s.wf_digest,
                    "extended_cost": s.extended_cost,
                    "phi": s.potential,
                }
                for s in self.steps
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "request", "cost", "extcost", "alg_so_far", "phi"])
        so_far = 0
        for s in self.steps:
            so_far += s.cost
            writer.writerow([s.t, s.request, s.cost, s.extended_cost, so_far, "" if s.potential is None else s.potential])
        return buf.getvalue()


def wfa_step(prev_wf: WorkFunction, next_wf: WorkFunction, r: int, X_prev) -> tuple[Configuration, int]:
    """WFA move: argmin over X containing r of w_t(X) + d(X, X_prev), first in table order."""
    sp = next_wf.space
    prev_row = sp.lookup(X_prev)
    holds_r = np.nonzero(np.any(sp.configs == r, axis=1))[0]
    score = next_wf.values[holds_r] + sp.wasserstein_matrix[holds_r, prev_row]
    row = int(holds_r[int(np.argmin(score))])
    return sp.configs_list[row], int(sp.wasserstein_matrix[row, prev_row])


def opt_cost(final_wf: WorkFunction) -> int:
    return int(final_wf.values.min())


def simulate(inst: Instance, potential: Optional[Callable[[WorkFunction], int]] = None,
             on_step: Optional[Callable] = None) -> Trace:
    """Run the WFA over ``inst``.

    ``potential`` maps a work function to a potential value recorded per step;
    ``on_step(t, prev_wf, next_wf, r)`` is called after every update.
    """
    wf = initial_wf(inst.metric, inst.k, inst.X0)
    trace = Trace(inst)
    if potential is not None:
        trace.phi0 = potential(wf)
    X = inst.X0
    for t, r in enumerate(inst.requests, start=1):
        nxt = update(wf, r)
        X, cost = wfa_step(wf, nxt, r, X)
        if on_step is not None:
            on_step(t, wf, nxt, r)
        trace.steps.append(Step(
            t, r, X, cost, nxt.digest, extended_cost(wf, nxt),
            potential(nxt) if potential is not None else None,
        ))
        wf = nxt
    trace.opt = opt_cost(wf)
    trace.final_wf = wf
    return trace


def gen_requests(metric: FiniteMetric, X0, kind: str, T: int, seed: int = 0, k: Optional[int] = None) -> list[int]:
    """Deterministic request sequences.

    ``farthest-point`` and ``antipodal`` run the WFA alongside to track the
    current configuration.  ``antipodal`` requests the antipode of the server
    that moved last (the first server of X0 before any move).
    """
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    if kind not in ADVERSARIES:
        raise ValueError(f"unknown adversary {kind!r}; choose from {ADVERSARIES}")
    if kind == "antipodal":
        metric.require_antipodes()
    X = canon(X0)
    k = len(X) if k is None else k
    if kind == "uniform-random":
        rng = random.Random(seed)
        return [rng.randrange(metric.n) for _ in range(T)]

    wf = initial_wf(metric, k, X)
    last_moved = X[0]
    out = []
    for _ in range(T):
        if kind == "farthest-point":
            gap = metric.dist[:, list(X)].min(axis=1)
            r = int(np.argmax(gap))
        else:
            r = metric.antipode(last_moved)
        nxt = update(wf, r)
        X_new, cost = wfa_step(wf, nxt, r, X)
        if cost > 0:
            last_moved = r
        X, wf = X_new, nxt
        out.append(r)
    return out


def random_instance(metric: FiniteMetric, k: int, T: int, seed: int, kind: str = "uniform-random") -> Instance:
    rng = random.Random(seed)
    X0 = canon(rng.randrange(metric.n) for _ in range(k))
    return Instance(metric, k, X0, tuple(gen_requests(metric, X0, kind, T, seed=rng.randrange(2**31), k=k)))
