"""Command-line front end.

Exit codes: 0 holds/success, 1 violated, 2 unknown, 3 usage or parse error.
All generator-backed commands take --seed; output is deterministic for
fixed inputs and seeds.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import chains as chains_mod
from .backtranslation import (
    RfrxcReport,
    backtranslate_ctx,
    build_tree,
    ctx_accepts,
    source_variant,
    tree_backtranslate,
    verify_rfrxc,
)
from .compiler import compile_program
from .counterexamples import demos as demos_mod
from .counterexamples import fuel, minilang, rtep
from .criteria import Bounds, check_criterion, parse_criterion
from .machine import run_whole
from .monitors import dense_bounded_check, monitor_from_json, safety_bounded_check
from .sexpr import ParseError, parse_context, parse_iface_file, parse_program
from .syntax import context_to_sexpr, program_to_sexpr
from .traces import WriteEv, event_from_json, trace_from_jsonl, trace_to_jsonl
from .typecheck import LinkError, link_source, link_target

USAGE_ERROR = 3


def _read(path: str) -> str:
    return Path(path).read_text()


def cmd_compile(args) -> int:
    program = parse_program(_read(args.program), "src")
    print(program_to_sexpr(compile_program(program)))
    return 0


def cmd_run(args) -> int:
    lang = args.lang
    program = parse_program(_read(args.program), lang)
    context = parse_context(_read(args.context), lang)
    whole = link_source(program, context) if lang == "src" else link_target(program, context)
    inputs = [int(x) for x in args.inputs.split(",")] if args.inputs else []
    result = run_whole(whole, inputs, args.budget, informative=args.informative)
    sys.stdout.write(trace_to_jsonl(result.trace))
    return 0


def cmd_backtranslate_ctx(args) -> int:
    iface = parse_iface_file(_read(args.iface))
    ctx = parse_context(_read(args.context), "tgt")
    print(context_to_sexpr(backtranslate_ctx(ctx, iface)))
    return 0


def cmd_backtranslate_traces(args) -> int:
    iface = parse_iface_file(_read(args.iface))
    payload = json.loads(_read(args.prefixes))
    mus = [trace_from_jsonl("\n".join(json.dumps(row) for row in item)) for item in payload]
    if args.programs:
        programs = [parse_program(_read(p), "src") for p in args.programs]
        inputs = [int(x) for x in args.inputs.split(",")] if args.inputs else []
        report = verify_rfrxc(programs, _guess_target_ctx(args), inputs, args.budget)
        out = _rfrxc_json(report)
        print(json.dumps(out, indent=2))
        return 0 if report.passed else 1
    tree = build_tree(mus, iface)
    src_ctx = tree_backtranslate(tree, iface)
    replays = [
        {
            "prefix": repr(mu),
            "source_variant": repr(source_variant(mu, iface)),
            "replayed": ctx_accepts(src_ctx, source_variant(mu, iface)),
        }
        for mu in mus
    ]
    out = {
        "context": context_to_sexpr(src_ctx),
        "stages": {"tree": True, "replay": all(r["replayed"] for r in replays)},
        "prefixes": replays,
    }
    print(json.dumps(out, indent=2))
    return 0 if out["stages"]["replay"] else 1


def _guess_target_ctx(args):
    if not args.target_ctx:
        raise SystemExit("--target-ctx is required together with --programs")
    return parse_context(_read(args.target_ctx), "tgt")


def _rfrxc_json(report: RfrxcReport) -> dict:
    return {
        "passed": report.passed,
        "stages": {s.name: s.ok for s in report.stages},
        "context": context_to_sexpr(report.context) if report.context else None,
        "outcomes": [
            {
                "mu": repr(o.mu),
                "wanted": repr(o.wanted),
                "produced": repr(o.produced),
                "ok": o.ok,
            }
            for o in report.outcomes
        ],
    }


def _make_chain(name: str, args, iface=None):
    if name == "lt-ld":
        if iface is None:
            raise SystemExit("lt-ld chain needs at least one --programs file")
        return chains_mod.lt_ld_chain(iface)
    if name == "fuel-rsp":
        return fuel.fuel_rsp_chain()
    if name == "fuel-rdp":
        return fuel.fuel_rdp_chain()
    if name == "rtep":
        return rtep.rtep_chain()
    if name == "tini":
        return minilang.tini_chain()
    if name == "introspect":
        return minilang.introspect_chain()
    if name == "khs":
        return minilang.khs_chain(args.k)
    raise SystemExit(f"unknown chain {name}")


def cmd_check(args) -> int:
    criterion = parse_criterion(args.criterion)
    bounds = Bounds(
        ctx_size=args.ctx_size, input_len=args.input_len, budget=args.budget
    )
    if args.chain == "lt-ld":
        programs = [parse_program(_read(p), "src") for p in args.programs]
        if not programs:
            raise SystemExit("lt-ld chain needs --programs")
        chain = chains_mod.lt_ld_chain(programs[0].iface)
        target_ctx = (
            parse_context(_read(args.target_ctx), "tgt") if args.target_ctx else None
        )
    elif args.chain == "rtep":
        chain = _make_chain("rtep", args)
        programs = [rtep.CONST_ONE_BOOL] * max(1, len(args.programs) or 1)
        if args.criterion == "rtep":
            programs = [rtep.CONST_ONE_BOOL, rtep.RtepProgram(True, rtep.ENum(1))]
        target_ctx = None
    elif args.chain in ("tini", "introspect", "khs"):
        chain = _make_chain(args.chain, args)
        if args.chain == "tini":
            programs = [minilang.TINI_PROGRAM]
            target_ctx = minilang.ReadPrivateFn()
        elif args.chain == "introspect":
            programs = [minilang.INTROSPECT_P1, minilang.INTROSPECT_P2]
            target_ctx = minilang.CodeReadFn(((1, 1), (2, 2)))
        else:
            programs = [minilang.khs_program(args.k)]
            target_ctx = minilang.falsifying_context(args.k)
    elif args.chain in ("fuel-rsp", "fuel-rdp"):
        chain = _make_chain(args.chain, args)
        programs = [fuel.LOOP_42 if args.chain == "fuel-rdp" else fuel.LOOP_41]
        target_ctx = fuel.UNIT_CTX if args.chain == "fuel-rsp" else 4
    else:
        raise SystemExit(f"unknown chain {args.chain}")

    verdict = check_criterion(chain, criterion, programs, target_ctx, bounds)
    out = verdict.to_json()
    out["chain"] = args.chain
    out["criterion"] = str(criterion)
    print(json.dumps(out, indent=2))
    return verdict.exit_code


def cmd_classify(args) -> int:
    spec = json.loads(_read(args.monitor))
    monitor = monitor_from_json(spec)
    alphabet = [WriteEv(42), WriteEv(0)]
    if args.alphabet:
        alphabet = [event_from_json(row) for row in json.loads(args.alphabet)]
    dense = dense_bounded_check(monitor, args.depth, alphabet)
    safety = safety_bounded_check(monitor, args.depth, alphabet)
    out = {
        "monitor": monitor.name,
        "depth": args.depth,
        "dense": {
            "verdict": dense.verdict.value,
            "witness": repr(dense.witness) if dense.witness else None,
            "saturated": dense.saturated,
        },
        "safety": {
            "verdict": safety.verdict.value,
            "witness": repr(safety.witness) if safety.witness else None,
            "saturated": safety.saturated,
        },
    }
    print(json.dumps(out, indent=2))
    return 0


def cmd_demo(args) -> int:
    report = demos_mod.run_demo(args.name, k=args.k, depth=args.depth)
    if args.json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        print(f"demo {report.name}: {'PASS' if report.passed else 'FAIL'}")
        for c in report.checks:
            mark = "ok" if c.passed else "FAIL"
            print(f"  [{mark}] {c.description}")
            if c.witness:
                print(f"        {c.witness}")
        for note in report.notes:
            print(f"  note: {note}")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="robustcomp",
        description="workbench for robust-property-preservation criteria",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a source program to the target language")
    p.add_argument("program")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("run", help="run a linked program and print its trace")
    p.add_argument("--lang", choices=("src", "tgt"), required=True)
    p.add_argument("--program", required=True)
    p.add_argument("--context", required=True)
    p.add_argument("--inputs", default="")
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--informative", action="store_true")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("backtranslate-ctx", help="universal embedding of a target context")
    p.add_argument("--iface", required=True)
    p.add_argument("context")
    p.set_defaults(fn=cmd_backtranslate_ctx)

    p = sub.add_parser(
        "backtranslate-traces", help="trace-tree back-translation of informative prefixes"
    )
    p.add_argument("--iface", required=True)
    p.add_argument("--prefixes", required=True, help="JSON list of JSON-lines traces")
    p.add_argument("--programs", nargs="*", default=[])
    p.add_argument("--target-ctx")
    p.add_argument("--inputs", default="")
    p.add_argument("--budget", type=int, default=1000)
    p.set_defaults(fn=cmd_backtranslate_traces)

    p = sub.add_parser("check", help="bounded criterion check on a chain")
    p.add_argument("--chain", required=True)
    p.add_argument("--criterion", required=True)
    p.add_argument("--programs", nargs="*", default=[])
    p.add_argument("--target-ctx")
    p.add_argument("--ctx-size", type=int, default=3)
    p.add_argument("--input-len", type=int, default=2)
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("classify", help="bounded safety/dense classification of a monitor")
    p.add_argument("--monitor", required=True, help="monitor JSON file")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--alphabet", help="JSON list of event objects")
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("demo", help="run a separation demo")
    p.add_argument("name", choices=demos_mod.DEMO_NAMES)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_demo)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ParseError, LinkError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(f"error: {exc.code}", file=sys.stderr)
            return USAGE_ERROR
        raise


if __name__ == "__main__":
    sys.exit(main())
