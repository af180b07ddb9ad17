"""Command line interface: run, experiment, verify, oracle.

Exit status is 0 on success, 1 when a verification fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .catalog import Scenario, scenario, scenario_for
from .dsl import ProtocolError, load_protocol_file
from .engine import initial_configuration, run_until, trial_rng
from .graphs import read_graph
from .harness import ExperimentError, emit_csv, fit_exponent, run_trials, sweep
from .kernel import run_fast
from .model import STOP_PREDICATE
from .oracle import ChainError, enumerate_reachable, expected_hitting_time, verify_stabilization
from .stability import observer


class UsageError(Exception):
    pass


def _add_protocol_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("-p", "--protocol", help="catalog name such as krc(k=3), or a protocol file")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="protocol parameter, repeatable")
    p.add_argument("--input-graph", metavar="PATH",
                   help="graph to copy (leader-replication), plain text format")
    p.add_argument("--input-size", type=int, metavar="K",
                   help="size of the random connected graph to copy (leader-replication)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", metavar="PATH", help="file of 'key = value' lines mirroring flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netcon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single execution")
    _add_protocol_args(run)
    run.add_argument("-n", type=int)
    run.add_argument("--cap", type=int)
    run.add_argument("--trace", metavar="PATH", help="write effective steps to PATH")

    exp = sub.add_parser("experiment", help="sweep over population sizes")
    _add_protocol_args(exp)
    exp.add_argument("--ns", help="comma separated population sizes")
    exp.add_argument("--trials", type=int)
    exp.add_argument("--fit", action="store_true", help="fit the log-log slope")
    exp.add_argument("--csv", metavar="PATH")
    exp.add_argument("--cap-factor", type=float, default=1.0)

    ver = sub.add_parser("verify", help="all trials must reach the target")
    _add_protocol_args(ver)
    ver.add_argument("-n", type=int)
    ver.add_argument("--trials", type=int)
    ver.add_argument("--cap", type=int)

    orc = sub.add_parser("oracle", help="exact analysis at small n")
    _add_protocol_args(orc)
    orc.add_argument("-n", type=int)
    orc.add_argument("--hitting", action="store_true", help="expected steps to the stop set")
    orc.add_argument("--verify", action="store_true", help="check every closed class")
    orc.add_argument("--dump", metavar="PATH", help="write the reachable chain")
    orc.add_argument("--max-n", type=int, default=4)
    return parser


_FLAG_TYPES = {"n": int, "trials": int, "cap": int, "seed": int, "input_size": int,
               "max_n": int, "cap_factor": float, "fit": "bool", "hitting": "bool",
               "verify": "bool"}


def read_config(path: str) -> dict[str, object]:
    """Parse ``key = value`` lines; keys use flag names with '-' or '_'."""
    out: dict[str, object] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key == "p":
            key = "protocol"
        kind = _FLAG_TYPES.get(key, str)
        if kind == "bool":
            out[key] = value.lower() in ("1", "true", "yes", "on")
        elif key == "param":
            out.setdefault("param", []).append(value)
        else:
            try:
                out[key] = kind(value)
            except ValueError:
                raise UsageError(f"{path}:{lineno}: bad value for {key}") from None
    return out


def _merge_config(args: argparse.Namespace, argv) -> None:
    if not getattr(args, "config", None):
        return
    given = set()
    for a in argv:
        if a.startswith("-"):
            key = a.split("=")[0].lstrip("-").replace("-", "_")
            given.add("protocol" if key == "p" else key)
    for key, value in read_config(args.config).items():
        if not hasattr(args, key):
            raise UsageError(f"config key {key!r} does not apply to '{args.command}'")
        if key == "param":
            args.param = list(value) + list(args.param)
        elif key not in given:
            setattr(args, key, value)


def resolve(args: argparse.Namespace) -> Scenario:
    if not args.protocol:
        raise UsageError("missing -p/--protocol")
    options = {}
    if args.input_graph:
        options["input_graph"] = read_graph(args.input_graph)
    if args.input_size:
        options["input_size"] = args.input_size
    params = {}
    for item in args.param:
        if "=" not in item:
            raise UsageError(f"bad --param {item!r}, expected KEY=VALUE")
        k, v = item.split("=", 1)
        try:
            params[k.strip()] = int(v)
        except ValueError:
            raise UsageError(f"parameter {k} must be an integer") from None
    path = Path(args.protocol)
    if path.is_file():
        if params:
            raise UsageError("--param applies to catalog protocols only")
        return scenario_for(load_protocol_file(path).protocol, **options)
    try:
        return scenario(args.protocol, params, **options)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _need(value, flag: str):
    if value is None:
        raise UsageError(f"missing {flag}")
    return value


def cmd_run(args, out) -> int:
    sc = resolve(args)
    n = _need(args.n, "-n")
    sc.check_n(n)
    cap = args.cap if args.cap is not None else sc.cap(n)
    rng = trial_rng(args.seed, 0)
    start = initial_configuration(n, sc.protocol, sc.overrides(n, rng))
    config = start.copy()
    stop = sc.stop(n)
    if args.trace:
        with open(args.trace, "w") as fh:
            res = run_until(config, sc.protocol, stop, cap, rng,
                            on_change=lambda rec: fh.write(rec.format(sc.protocol) + "\n"))
    else:
        res = run_fast(config, sc.protocol, stop, cap, rng)
    g = observer(sc.protocol)(res.config, sc.protocol)
    print(f"steps {res.steps}", file=out)
    print(f"reason {res.reason}", file=out)
    print(f"output nodes {len(g.nodes)} edges {len(g.edges)}", file=out)
    if res.reason != STOP_PREDICATE:
        return 1
    if sc.has_target:
        ok = sc.target(res.config, start)
        print(f"target {'satisfied' if ok else 'VIOLATED'}", file=out)
        return 0 if ok else 1
    return 0


def cmd_experiment(args, out) -> int:
    sc = resolve(args)
    raw = _need(args.ns, "--ns")
    try:
        ns = [int(x) for x in str(raw).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --ns {raw!r}") from None
    trials = _need(args.trials, "--trials")
    for n in ns:
        sc.check_n(n)
    table = sweep(sc, ns, trials, args.seed, args.cap_factor)
    text = emit_csv(table, args.csv)
    out.write(text)
    if args.fit:
        f = fit_exponent(table)
        print(f"slope {f.slope:.6f} intercept {f.intercept:.6f} r2 {f.r2:.6f} "
              f"n {f.n_min}..{f.n_max}", file=out)
    return 0


def cmd_verify(args, out) -> int:
    sc = resolve(args)
    n = _need(args.n, "-n")
    trials = _need(args.trials, "--trials")
    sc.check_n(n)
    if not sc.has_target:
        raise UsageError(f"{sc.protocol.name} has no target predicate to verify")
    stats = run_trials(sc, n, trials, args.seed, args.cap, check_target=True)
    bad = [o for o in stats.outcomes if o.reason != STOP_PREDICATE or not o.target_ok]
    for o in bad:
        print(f"trial {o.index}: {o.reason} after {o.steps} steps, target "
              f"{'satisfied' if o.target_ok else 'not satisfied'}", file=out)
    print(f"{sc.protocol.name} n={n}: {trials - len(bad)}/{trials} trials reached the target "
          f"(mean {stats.mean:.6g} steps)", file=out)
    return 0 if not bad else 1


def cmd_oracle(args, out) -> int:
    sc = resolve(args)
    n = _need(args.n, "-n")
    sc.check_n(n)
    chain = enumerate_reachable(sc.protocol, n, sc.overrides(n, trial_rng(args.seed, 0)),
                                max_n=args.max_n)
    print(f"reachable configurations {len(chain)}", file=out)
    if args.dump:
        Path(args.dump).write_text(chain.dump())
    status = 0
    if args.hitting:
        t = expected_hitting_time(chain, sc.stop(n))
        print(repr(round(t, 9)), file=out)
    if args.verify:
        if not sc.has_target:
            raise UsageError(f"{sc.protocol.name} has no target predicate to verify")
        start = chain.configuration(0)
        verdict = verify_stabilization(chain, lambda c: sc.target(c, start), observer(sc.protocol))
        print(verdict.describe(sc.protocol), file=out)
        status = 0 if verdict.passed else 1
    return status


COMMANDS = {"run": cmd_run, "experiment": cmd_experiment, "verify": cmd_verify,
            "oracle": cmd_oracle}


def main(argv: Sequence[str] | None = None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _merge_config(args, argv)
        return COMMANDS[args.command](args, out)
    except (UsageError, ValueError, ProtocolError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"netcon: error: {exc}", file=sys.stderr)
        return 2
    except (ExperimentError, ChainError) as exc:
        print(f"netcon: {exc}", file=sys.stderr)
        return 1
