"""Command line: ``wfalab simulate | verify | sweep | equiv``.

Exit codes: 0 success, 1 a check failed (witness printed), 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

import numpy as np

from . import potential as pot
from .metric import MetricError, build_cycle, build_hypercube, metric_from_descriptor
from .sweep import TestCase, builtin_testcases, sweep
from .wfa import ADVERSARIES, Instance, random_instance, simulate
from .workfunction import (
    WorkFunction,
    check_antipode_minimizer,
    check_duality,
    check_lipschitz,
    check_monotone_pair,
    check_quasiconvex_all,
    check_resolving,
    extended_cost,
    initial_wf,
    update,
    update_oracle,
)

ALL_CHECKS = (
    "oracle", "monotone", "lipschitz", "quasiconvex", "duality", "antipode",
    "resolving", "request-minimizer", "semicircle", "stepwise", "bounds",
)
ANTIPODE_CHECKS = {"antipode", "request-minimizer", "semicircle", "stepwise", "bounds"}
CLASSIC = ("CL", "BCL", "CK2", "CK3")


class InputError(Exception):
    pass


def _load_json(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from exc


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _circle_k3(metric, k) -> bool:
    return k == 3 and metric.has_antipodes


# ----------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    try:
        inst = Instance.from_json(_load_json(args.instance))
    except (KeyError, TypeError, ValueError, MetricError) as exc:
        raise InputError(f"{args.instance}: invalid instance ({exc})") from exc
    potential = pot.phi_value if _circle_k3(inst.metric, inst.k) else None
    trace = simulate(inst, potential=potential)
    if args.output:
        text = trace.to_csv() if args.format == "csv" else json.dumps(trace.to_json(), indent=1) + "\n"
        _write(args.output, text)
    print(f"ALG={trace.alg} OPT={trace.opt} ALG-3*OPT={trace.alg - 3 * trace.opt} "
          f"sum_extended_cost={trace.extended_total}")
    return 0


def _verify_instance(inst: Instance, checks: set, out) -> bool:
    m, k = inst.metric, inst.k
    circle = m.descriptor.get("type") == "cycle"
    delta = m.diameter
    ok = True

    def fail(t, report_or_msg):
        nonlocal ok
        msg = report_or_msg.summary() if hasattr(report_or_msg, "summary") else report_or_msg
        out.append(f"t={t}: {msg}")
        ok = False

    wf = initial_wf(m, k, inst.X0)
    if "lipschitz" in checks and not check_lipschitz(wf):
        fail(0, check_lipschitz(wf))
    if "quasiconvex" in checks and not check_quasiconvex_all(wf):
        fail(0, check_quasiconvex_all(wf))
    phi_prev = pot.phi_value(wf) if checks & {"stepwise", "bounds"} else None
    if "bounds" in checks and phi_prev < -3 * delta:
        fail(0, f"Phi_0={phi_prev} < -3*Delta={-3 * delta}")
    ext_total = 0
    for t, r in enumerate(inst.requests, start=1):
        nxt = update(wf, r)
        if "oracle" in checks:
            ora = update_oracle(wf, r)
            bad = np.nonzero(ora.values != nxt.values)[0]
            if len(bad):
                row = int(bad[0])
                fail(t, f"update/oracle mismatch at {nxt.space.configs_list[row]}: "
                        f"{nxt.values[row]} vs {ora.values[row]}")
        ec = extended_cost(wf, nxt)
        ext_total += ec
        if "monotone" in checks and not (rep := check_monotone_pair(wf, nxt, r)):
            fail(t, rep)
        if "lipschitz" in checks and not (rep := check_lipschitz(nxt)):
            fail(t, rep)
        if "quasiconvex" in checks and not (rep := check_quasiconvex_all(nxt)):
            fail(t, rep)
        if "duality" in checks and not (rep := check_duality(wf, nxt, r)):
            fail(t, rep)
        if "resolving" in checks and not (rep := check_resolving(nxt, r)):
            fail(t, rep)
        if "antipode" in checks:
            if not (rep := check_antipode_minimizer(wf, r)):
                fail(t, rep)
            a = nxt.space.power_row(m.antipode(r))
            if ec != int(nxt.values[a] - wf.values[a]):
                fail(t, f"extended cost {ec} not attained at antipode^k")
        if "request-minimizer" in checks:
            rep = pot.check_lemma3(nxt, r)
            if not rep:
                if circle:
                    fail(t, rep)
                else:
                    out.append(f"t={t}: (reported only, not a circle) {rep.summary()}")
        if "semicircle" in checks and not (rep := pot.check_lemma4(nxt)):
            fail(t, rep)
        if phi_prev is not None:
            phi = pot.phi_value(nxt)
            if "stepwise" in checks and phi - phi_prev < ec:
                fail(t, f"Phi_t - Phi_(t-1) = {phi - phi_prev} < extended cost {ec}")
            phi_prev = phi
        wf = nxt
    if "bounds" in checks:
        opt = int(wf.values.min())
        if phi_prev > 4 * opt + 12 * delta:
            fail(len(inst.requests), f"Phi_T={phi_prev} > 4*OPT+12*Delta={4 * opt + 12 * delta}")
        if ext_total > 4 * opt + 15 * delta:
            fail(len(inst.requests), f"sum extended cost {ext_total} > 4*OPT+15*Delta")
    return ok


def _verify_table(data: dict, checks: set, out) -> bool:
    metric = metric_from_descriptor(data["metric"])
    wf = WorkFunction(metric, int(data["k"]), data["values"], data.get("last_request"))
    ok = True
    for name, fn in (("lipschitz", check_lipschitz), ("quasiconvex", check_quasiconvex_all)):
        if name in checks:
            rep = fn(wf)
            if not rep:
                out.append(rep.summary())
                ok = False
    return ok


def cmd_verify(args) -> int:
    checks = set(ALL_CHECKS) if args.checks == "all" else set(args.checks.split(","))
    unknown = checks - set(ALL_CHECKS)
    if unknown:
        raise InputError(f"unknown checks {sorted(unknown)}; choose from {ALL_CHECKS}")
    out: list[str] = []
    if args.table:
        try:
            ok = _verify_table(_load_json(args.table), checks, out)
        except (KeyError, TypeError, ValueError, MetricError) as exc:
            raise InputError(f"{args.table}: invalid table ({exc})") from exc
    else:
        if args.instance:
            try:
                inst = Instance.from_json(_load_json(args.instance))
            except (KeyError, TypeError, ValueError, MetricError) as exc:
                raise InputError(f"{args.instance}: invalid instance ({exc})") from exc
        elif args.random:
            n, k, T, seed = args.random
            metric = build_hypercube(n) if args.metric_type == "hypercube" else build_cycle(n)
            inst = random_instance(metric, k, T, seed, kind=args.adversary)
        else:
            raise InputError("give an instance file, --random N K T SEED, or --table FILE")
        needs = checks & ANTIPODE_CHECKS
        if needs and not inst.metric.has_antipodes:
            raise InputError(f"checks {sorted(needs)} need a metric with antipodes")
        if checks & {"request-minimizer", "semicircle", "stepwise", "bounds"} and inst.k != 3:
            raise InputError("potential checks need k=3")
        ok = _verify_instance(inst, checks, out)
    for line in out:
        print(line)
    print(f"verify: {'all checks passed' if ok else 'FAILED'} ({', '.join(sorted(checks))})")
    return 0 if ok else 1


def cmd_sweep(args) -> int:
    cases: list[TestCase] = []
    if args.builtin:
        wanted = args.cases.split(",") if args.cases else None
        cases = [tc for tc in builtin_testcases() if wanted is None or tc.name in wanted]
    for path in args.testcases:
        data = _load_json(path)
        try:
            cases.append(TestCase.from_json(data.get("name", Path(path).stem), data))
        except (KeyError, TypeError, ValueError, MetricError) as exc:
            raise InputError(f"{path}: invalid test case ({exc})") from exc
    if not cases and not args.allow_empty:
        raise InputError("no test cases: use --builtin or pass test case files")
    rng = None
    if args.range:
        try:
            lo, hi = (int(v, 0) for v in args.range.split(":"))
        except ValueError as exc:
            raise InputError(f"--range must be START:END, got {args.range!r}") from exc
        rng = range(lo, hi)
    try:
        report = sweep(cases, rng, workers=args.threads)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    data = report.to_json()
    if args.output:
        _write(args.output, json.dumps(data, indent=1) + "\n")
    print(f"sweep: {data['total']} bitmasks, cases {','.join(data['testcases'])}, "
          f"pass_all={data['pass_all']}, {data['elapsed_seconds']}s")
    for subset, survivors in data["survivors"].items():
        print(f"  survivors[{subset}] = {len(survivors)} in {len(data['orbits'][subset])} orbits")
    if args.assert_theorem2 and data["pass_all"] != 0:
        print(f"assertion failed: {data['pass_all']} bitmasks pass every case")
        return 1
    return 0


def equivalence_samples(metric, k: int, samples: int, seed: int, T: int = 6) -> list[WorkFunction]:
    rng = random.Random(seed)
    out = []
    for _ in range(samples):
        inst = random_instance(metric, k, rng.randint(1, T), rng.randrange(2**31))
        wf = initial_wf(metric, k, inst.X0)
        for r in inst.requests:
            wf = update(wf, r)
        out.append(wf)
    return out


def check_equivalence(cp: pot.ClassicPotential, wfs: list[WorkFunction]) -> tuple[bool, int, list]:
    """Offset original - canonical from the first sample, asserted on the rest."""
    offsets = [cp.original(wf) - pot.canonical_min(cp.canonical, wf).value for wf in wfs]
    const = offsets[0]
    bad = [(i, off) for i, off in enumerate(offsets) if off != const]
    return not bad, const, bad


def cmd_equiv(args) -> int:
    try:
        metric = metric_from_descriptor(_load_json(args.metric)) if args.metric else build_cycle(8)
    except (KeyError, TypeError, ValueError, MetricError) as exc:
        raise InputError(f"invalid metric ({exc})") from exc
    if not metric.has_antipodes:
        raise InputError(f"metric {metric.name} has no antipodes")
    names = args.potentials.split(",") if args.potentials else list(CLASSIC)
    if args.with_circle:
        names += ["phi143a", "phi254a"]
    table = pot.classic_potentials()
    unknown = [n for n in names if n not in table]
    if unknown:
        raise InputError(f"unknown potentials {unknown}; choose from {sorted(table)}")
    ok = True
    for name in names:
        cp = table[name]
        wfs = equivalence_samples(metric, cp.k, args.samples + 1, args.seed)
        good, const, bad = check_equivalence(cp, wfs)
        if good:
            print(f"{name}: original = canonical {const:+d} on {len(wfs)} samples")
        else:
            ok = False
            print(f"{name}: offset not constant: first {const}, deviating samples {bad[:5]}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wfalab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the WFA on an instance file")
    p.add_argument("instance")
    p.add_argument("--output", "-o")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run work-function and potential checks at every step")
    p.add_argument("instance", nargs="?")
    p.add_argument("--random", nargs=4, type=int, metavar=("N", "K", "T", "SEED"),
                   help="random instance; N is the cycle size (or cube dimension)")
    p.add_argument("--metric-type", choices=("cycle", "hypercube"), default="cycle")
    p.add_argument("--adversary", choices=ADVERSARIES, default="uniform-random")
    p.add_argument("--table", help="JSON work-function table; runs the static checks on it")
    p.add_argument("--checks", default="all", help=f"comma list from {','.join(ALL_CHECKS)} or 'all'")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="check every k=3 canonical potential against test cases")
    p.add_argument("testcases", nargs="*", help="support-set JSON files")
    p.add_argument("--builtin", action="store_true", help="use the built-in cases a, b, c")
    p.add_argument("--cases", help="restrict built-in cases, e.g. a,b")
    p.add_argument("--range", help="bitmask range START:END (default 0:32768)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", "-o")
    p.add_argument("--assert-theorem2", action="store_true", help="exit 1 unless no bitmask passes every case")
    p.add_argument("--allow-empty", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("equiv", help="compare classic potentials with their canonical forms")
    p.add_argument("metric", nargs="?", help="metric descriptor JSON (default: 8-cycle)")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--potentials", help=f"comma list (default {','.join(CLASSIC)})")
    p.add_argument("--with-circle", action="store_true", help="also compare the circle potential with bitmasks 143a and 254a")
    p.set_defaults(func=cmd_equiv)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InputError, MetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
