"""Command line front end.

Exit codes: 0 when every checked invariant holds, 1 on a violation, 2 on a
configuration error.  Outputs depend only on the arguments.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import checks
from . import expander as ex
from . import harness
from . import renaming as rn
from . import repository as rp
from . import simcore as sc
from . import storecollect as scl

CLEAN, VIOLATION, CONFIG = 0, 1, 2


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _text_arg(value: str | None) -> str | None:
    """Inline text, or the contents of a file when given as @path."""
    if value is None or not value.startswith("@"):
        return value
    return Path(value[1:]).read_text()


def _schedule_text(value: str | None) -> str | None:
    text = _text_arg(value)
    return None if text is None else text.replace(";", "\n")


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="scheduler / construction seed")
    p.add_argument("--out", default=d(None), help="directory for output artifacts")
    p.add_argument("--json", action="store_true", default=d(False), help="print JSON")
    p.add_argument("--profile", choices=sorted(rn.PROFILES), default=d("scaled"),
                   help="expander constants profile")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="exsel", description="Exclusive selection simulator.")
    _add_globals(p, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _add_globals(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rename", parents=[common], help="run one renaming execution")
    r.add_argument("--algo", choices=rn.ALGORITHMS, required=True)
    r.add_argument("--k", type=int, default=None, help="contention the plan is built for")
    r.add_argument("--n", type=int, default=None, help="number of processes (default k)")
    r.add_argument("--N", type=int, default=None, help="original name space size")
    r.add_argument("--originals", type=_ints, default=None)
    r.add_argument("--scheduler", choices=("random", "round_robin"), default="random")
    r.add_argument("--crashes", type=int, default=0)
    r.add_argument("--crash-script", default=None, help="schedule prefix ('A 1; X 2' or @file)")
    r.add_argument("--graph-seed", type=int, default=0)

    e = sub.add_parser("explore", parents=[common], help="exhaustive interleaving certification")
    e.add_argument("--algo", choices=rn.ALGORITHMS + rp.ALGORITHMS, required=True)
    e.add_argument("--k", type=int, default=2, help="processes")
    e.add_argument("--N", type=int, default=None)
    e.add_argument("--bound", type=int, default=6, help="events per process")
    e.add_argument("--crash-budget", type=int, default=0)
    e.add_argument("--requests", type=int, default=1, help="deposits or commits per process")
    e.add_argument("--state-cap", type=int, default=5_000_000)

    x = sub.add_parser("expander", parents=[common], help="build, verify, or match on an expander")
    xs = x.add_subparsers(dest="action", required=True)
    xb = xs.add_parser("build", parents=[common])
    xb.add_argument("--v", type=int, required=True)
    xb.add_argument("--L", type=int, required=True)
    xb.add_argument("--delta", type=int, default=None)
    xb.add_argument("--w", type=int, default=None)
    xv = xs.add_parser("verify", parents=[common])
    xv.add_argument("--graph", required=True)
    xv.add_argument("--L", type=int, default=None)
    xm = xs.add_parser("matching", parents=[common])
    xm.add_argument("--graph", required=True)
    xm.add_argument("--X", type=_ints, required=True)
    for q in (xb, xv):
        q.add_argument("--epsilon", type=float, default=ex.DEFAULT_EPSILON)
        mode = q.add_mutually_exclusive_group()
        mode.add_argument("--exact", action="store_true")
        mode.add_argument("--sampled", type=int, default=None, metavar="TRIALS")

    c = sub.add_parser("collect-demo", parents=[common], help="scripted store/collect run")
    c.add_argument("--backend", choices=sorted(scl.BACKENDS), default="adaptive")
    c.add_argument("--k", type=int, default=3)
    c.add_argument("--N", type=int, default=None)
    c.add_argument("--ops", required=True, help="'S p v' / 'C p' requests (';' separated or @file)")
    c.add_argument("--crashes", type=int, default=0)
    c.add_argument("--graph-seed", type=int, default=0)

    d = sub.add_parser("repository", parents=[common], help="deposit or naming run")
    d.add_argument("--algo", choices=rp.ALGORITHMS, required=True)
    d.add_argument("--n", type=int, default=3)
    d.add_argument("--deposits", default="10",
                   help="requests per process, or a '<slot> v ...' script as @file")
    d.add_argument("--crash-script", default=None, help="schedule prefix ('A 1; X 2' or @file)")
    d.add_argument("--rule", choices=rp.RULES, default="fresh")

    b = sub.add_parser("bench", parents=[common], help="run an experiment grid")
    b.add_argument("--config", default=None, help="JSON file mirroring ExperimentConfig")
    b.add_argument("--algo", choices=rn.ALGORITHMS, default=None)
    b.add_argument("--ks", type=_ints, default=None)
    b.add_argument("--Ns", type=_ints, default=None)
    b.add_argument("--repetitions", type=int, default=None)
    b.add_argument("--mode", choices=("random", "exhaustive"), default=None)

    k = sub.add_parser("check", parents=[common], help="run invariant suites over a JSONL trace")
    k.add_argument("--trace", required=True)
    k.add_argument("--suite", default="core")
    k.add_argument("--param", action="append", default=[], metavar="KEY=JSON")
    return p


# -- commands -------------------------------------------------------------------------


def _write(args, name: str, text: str) -> None:
    if args.out is None:
        return
    path = Path(args.out) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _strs(found: Sequence[checks.Violation]) -> list[str]:
    return [str(v) for v in found]


def cmd_rename(args) -> tuple[dict, int]:
    n = args.n or args.k or (len(args.originals) if args.originals else 2)
    originals = args.originals or rn.default_originals(n, args.N)
    setup = rn.prepare(args.algo, originals, N=args.N, k=args.k, profile=args.profile,
                       graph_seed=args.graph_seed)
    if args.scheduler == "round_robin":
        schedule: sc.Schedule = sc.RoundRobin()
    else:
        schedule = sc.SeededRandom(args.seed, crashes=args.crashes)
    prefix = _schedule_text(args.crash_script)
    if prefix:
        schedule = sc.Chain(sc.parse_schedule(prefix), schedule)
    outcome = setup.run(schedule)
    bound = rn.declared_bound(args.algo, args.k or len(setup.pids), setup)
    found = checks.check_trace(
        outcome.trace, harness.renaming_suite(args.algo),
        hi=bound, slots=[p.slot for p in setup.pids], n=len(setup.pids),
    )
    result = {**outcome.to_dict(), "declared_bound": bound, "violations": _strs(found)}
    _write(args, "trace.jsonl", outcome.trace.to_jsonl())
    return result, VIOLATION if found else CLEAN


def cmd_explore(args) -> tuple[dict, int]:
    if args.algo in rp.ALGORITHMS:
        system = rp.build_repository(args.algo, args.k, rp.RequestScript.uniform(args.k, args.requests))
        machines, memory = system.machines(), system.memory
    else:
        setup = rn.prepare(args.algo, rn.default_originals(args.k, args.N), N=args.N,
                           profile=args.profile, graph_seed=args.seed)
        machines, memory = setup.machines(), setup.memory
    cert = sc.certify_interleavings(
        machines, memory, args.bound, args.crash_budget, harness.exclusive_property, args.state_cap,
    )
    result = {
        "algo": args.algo, "processes": args.k, "bound": args.bound,
        "crash_budget": args.crash_budget, "traces": cert.traces, "states": cert.states,
        "violations": cert.violations,
        "counterexample": None if cert.holds else sc.format_schedule(
            sc.Activate(s) if m == "A" else sc.Crash(s) for m, s in cert.counterexample),
    }
    return result, CLEAN if cert.holds else VIOLATION


def _mode(args) -> tuple[str, int]:
    if args.sampled is not None:
        return "sampled", args.sampled
    return "exact", 0


def _verdict(v: ex.Verdict) -> dict:
    return {
        "passed": v.passed, "mode": v.mode, "checked": v.checked,
        "statistical": v.statistical, "witness": list(v.witness) if v.witness else None,
        "failing_subsets": len(v.violations),
    }


def cmd_expander(args) -> tuple[dict, int]:
    if args.action == "build":
        prof = rn.get_profile(args.profile)
        params = ex.ExpanderParams.derive(args.v, args.L, prof.c_w, prof.c_delta, args.epsilon)
        if args.delta is not None or args.w is not None:
            params = ex.ExpanderParams(
                args.v, args.L, args.delta or params.delta, args.w or params.w_size, args.epsilon,
            )
        mode, trials = _mode(args)
        g = ex.build_lossless_expander(params, args.seed, verify_mode=mode, trials=trials or 1000)
        verdict = ex.verify_expansion(g, params.L, params.epsilon, mode, trials or 1000, args.seed)
        _write(args, "graph.txt", g.to_text())
        result = {
            "v_size": g.v_size, "w_size": g.w_size, "delta": g.delta, "L": g.L,
            "epsilon": params.epsilon, "attempts": g.attempts, "verdict": _verdict(verdict),
        }
        return result, CLEAN if verdict.passed else VIOLATION
    g = ex.BipartiteGraph.from_text(Path(args.graph).read_text())
    if args.action == "verify":
        mode, trials = _mode(args)
        verdict = ex.verify_expansion(g, args.L or g.L, args.epsilon, mode, trials or 1000, args.seed)
        return {"L": args.L or g.L, "verdict": _verdict(verdict)}, CLEAN if verdict.passed else VIOLATION
    match = ex.unique_neighbor_matching(g, args.X)
    result = {
        "X": args.X, "matched": len(match),
        "matching": {str(v): w for v, w in sorted(match.items())},
    }
    return result, CLEAN


def cmd_collect(args) -> tuple[dict, int]:
    ops = scl.parse_ops(_text_arg(args.ops))
    system = scl.build_system(args.backend, rn.default_originals(args.k, args.N), N=args.N,
                              profile=args.profile, graph_seed=args.graph_seed)
    trace = system.run(ops, sc.SeededRandom(args.seed, crashes=args.crashes))
    params = {"controls": system.layout.controls,
              "slot_names": {p.slot: p.original_name for p in system.pids},
              "n": len(system.pids)}
    found = checks.check_trace(trace, "core,storecollect", **params)
    records = [
        {"slot": r.slot, "op": r.kind, "steps": r.steps,
         "value": [list(kv) for kv in r.value] if r.kind == "C" else r.value}
        for r in scl.operations(trace)
    ]
    result = {
        "backend": args.backend, "registers_used": system.registers_used,
        "operations": records, "crashed": sorted(trace.crashed), "violations": _strs(found),
    }
    _write(args, "trace.jsonl", trace.to_jsonl())
    return result, VIOLATION if found else CLEAN


def repository_suite(algo: str) -> str:
    if algo == "naming":
        return "core,naming"
    if algo == "altruistic":
        return "core,persistence,pipelining,help"
    return "core,persistence,pipelining"


def cmd_repository(args) -> tuple[dict, int]:
    text = _text_arg(args.deposits)
    if text.strip().isdigit():
        script = rp.RequestScript.uniform(args.n, int(text))
    else:
        script = rp.RequestScript.parse(text)
    system = rp.build_repository(args.algo, args.n, script, args.rule)
    schedule: sc.Schedule = sc.SeededRandom(args.seed)
    prefix = _schedule_text(args.crash_script)
    if prefix:
        schedule = sc.Chain(sc.parse_schedule(prefix), schedule)
    trace = system.run(schedule)
    found = checks.check_trace(trace, repository_suite(args.algo), **system.check_params())
    base = system.layout.dedicated
    result: dict[str, Any] = {
        "algo": args.algo, "n": args.n, "rule": args.rule,
        "crashed": sorted(trace.crashed),
        "quiescent": rp.quiescent(trace, range(1, args.n + 1)),
        "steps": {str(s): v for s, v in sorted(trace.step_counts.items())},
        "violations": _strs(found),
    }
    if args.algo == "naming":
        names = rp.committed(trace)
        result.update(commits=len(names), max_name=max(names, default=0), skipped=rp.skipped(trace),
                      log=[[e.slot, e.val] for e in trace.decisions("commit")])
    else:
        result.update(acks=len(rp.acks(trace)), frontier=rp.frontier(trace, base),
                      waste=rp.waste(trace, base),
                      log=[[e.slot, e.val] for e in trace.decisions("ack")])
    _write(args, "trace.jsonl", trace.to_jsonl())
    return result, VIOLATION if found else CLEAN


def cmd_bench(args) -> tuple[dict, int]:
    raw: dict[str, Any] = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text())
        if not isinstance(raw, dict):
            raise sc.ConfigurationError("config must be a JSON object")
    for key, val in (("algo", args.algo), ("ks", args.ks), ("Ns", args.Ns),
                     ("repetitions", args.repetitions), ("mode", args.mode)):
        if val is not None:
            raw[key] = val
    raw.setdefault("profile", args.profile)
    if "algo" not in raw:
        raise sc.ConfigurationError("bench needs --algo or a config with 'algo'")
    cfg = harness.ExperimentConfig.from_json(json.dumps(raw))
    res = harness.run_experiment(cfg, out=args.out)
    return res.summary(), CLEAN if res.clean else VIOLATION


def cmd_check(args) -> tuple[dict, int]:
    trace = sc.ExecutionTrace.from_jsonl(Path(args.trace).read_text())
    params: dict[str, Any] = {}
    for item in args.param:
        key, sep, val = item.partition("=")
        if not sep:
            raise sc.ConfigurationError(f"--param expects KEY=JSON, got {item!r}")
        params[key] = json.loads(val)
    if "slot_names" in params:
        params["slot_names"] = {int(s): v for s, v in params["slot_names"].items()}
    found = checks.check_trace(trace, args.suite, **params)
    return {"suite": args.suite, "events": len(trace.events), "violations": _strs(found)}, (
        VIOLATION if found else CLEAN
    )


COMMANDS = {
    "rename": cmd_rename,
    "explore": cmd_explore,
    "expander": cmd_expander,
    "collect-demo": cmd_collect,
    "repository": cmd_repository,
    "bench": cmd_bench,
    "check": cmd_check,
}


def _render(result: dict) -> str:
    lines = []
    for key in sorted(result):
        val = result[key]
        if isinstance(val, (dict, list)):
            val = json.dumps(val, sort_keys=True)
        lines.append(f"{key}: {val}")
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result, code = COMMANDS[args.command](args)
    except (sc.ConfigurationError, ex.SizeExceeded, ValueError, OSError, sc.ExplorationLimit) as err:
        print(f"exsel: error: {err}", file=sys.stderr)
        return CONFIG
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.command != "bench":
        _write(args, f"{args.command}.json", text + "\n")
    print(text if args.json else _render(result))
    return code


if __name__ == "__main__":
    sys.exit(main())
