"""
Effex - Command Line Tool
=========================

Single entry point for checking, running, translating and analysing programs
of the four calculi (MAM, λeff, λmon, λdel).

Exit codes: 0 success, 1 check/simulation/law failure or source error,
2 usage error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from effex.core.effex_ast import MonadDef, Reify
from effex.core.effex_denot import (
    AtomSet,
    INFINITE,
    check_monad_laws,
    den_program,
    den_vtype,
    den_ctype,
    enumerate_set,
    pigeonhole_demo,
    show_element,
)
from effex.core.effex_opsem import NormalForm, OutOfFuel, Stuck, run
from effex.core.effex_surface import (
    FILE_EXTENSIONS,
    SourceFile,
    parse,
    parse_effect,
    parse_type,
    print_source,
    print_term,
    print_type,
    show_result,
)
from effex.core.effex_types import Calculus, Pure, VType
from effex.core.effex_typesys import check_source
from effex.core.effex_xlate import TranslationId, simulate_check, translate_source
from effex.utils.config_loader import get_config_value, load_config
from effex.utils.errors import EffexError
from effex.utils.logging_config import setup_logging
from effex.utils.validation import (
    ValidationError,
    parse_assignment,
    validate_non_negative_int,
    validate_positive_int,
    validate_sizes,
)

logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad invocation detected after argument parsing."""


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", type=str, default=argparse.SUPPRESS,
        help="YAML configuration file (default: config.yaml if present)",
    )
    common.add_argument(
        "--calculus", type=str, choices=["mam", "eff", "mon", "del"], default=argparse.SUPPRESS,
        help="Calculus of the input (default: from the file extension)",
    )
    common.add_argument(
        "--json", action="store_true", default=argparse.SUPPRESS,
        help="Print machine-readable JSON",
    )
    common.add_argument(
        "--seed", type=int, default=argparse.SUPPRESS,
        help="Seed for sampled law checks and denotation samples",
    )
    common.add_argument(
        "--verbose", "-v", action="store_true", default=argparse.SUPPRESS,
        help="Log at DEBUG level",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="effex",
        parents=[common],
        description="Effex - user-defined effects over call-by-push-value",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:

  # Type-check a program (exit 1 on a type error)
  effex check programs/state.eff

  # Run a program and show every reduction step
  effex run programs/state.mam --trace

  # Translate λdel to λmon and write the result
  effex translate programs/state.del --to mon -o state_from_del.mon

  # Check that λmon simulates the λeff run step by step
  effex simulate programs/state.eff --to mon --json

  # Size of a type under a type-variable assignment
  effex denote programs/state.mon --type "U [State] F bit"

  # Monad laws of every monad in a file
  effex laws programs/broken.mon

  # Non-existence argument at desk scale
  effex pigeonhole --k 2 --target "U F bit"
        """,
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("check", parents=[common], help="type-check a source file")
    p.add_argument("file", help="source file, or - for stdin")

    p = sub.add_parser("run", parents=[common], help="run main to a normal form")
    p.add_argument("file", help="source file, or - for stdin")
    p.add_argument("--fuel", type=int, default=None, help="step budget (default: config)")
    p.add_argument("--trace", action="store_true", help="print every reduction step")

    p = sub.add_parser("translate", parents=[common], help="translate to another calculus")
    p.add_argument("file", help="source file, or - for stdin")
    p.add_argument("--to", required=True, choices=["eff", "mon", "del"], help="target calculus")
    p.add_argument("--variant", default=None, choices=["default", "nested", "free-monad"])
    p.add_argument("-o", "--output", default=None, help="write the result here instead of stdout")

    p = sub.add_parser("simulate", parents=[common], help="check step-by-step simulation")
    p.add_argument("file", help="source file, or - for stdin")
    p.add_argument("--to", required=True, choices=["eff", "mon", "del"], help="target calculus")
    p.add_argument("--variant", default=None, choices=["default", "nested", "free-monad"])
    p.add_argument("--fuel", type=int, default=None, help="source step budget")
    p.add_argument("--depth", type=int, default=None, help="search depth per step")
    p.add_argument("--max-states", type=int, default=None, help="search state cap per step")

    p = sub.add_parser("denote", parents=[common], help="finite denotation of a type or of main")
    p.add_argument("file", help="source file, or - for stdin")
    p.add_argument("--type", dest="type_text", default=None, help="type to denote")
    p.add_argument("--effect", default=None, help="ambient effect for a computation type")
    p.add_argument("--assign", default="", help="type-variable sizes, e.g. a=2,b=1")
    p.add_argument("--samples", type=int, default=3, help="elements to sample")

    p = sub.add_parser("laws", parents=[common], help="check the monad laws")
    p.add_argument("file", help="source file, or - for stdin")
    p.add_argument("--sizes", default=None, help="comma-separated set sizes (default: config)")
    p.add_argument("--cases", type=int, default=None, help="cases per law and size")

    p = sub.add_parser("pigeonhole", parents=[common], help="finite denotation vs tick^n")
    p.add_argument("--k", type=int, required=True, help="largest tick count")
    p.add_argument("--target", required=True, help="candidate value type")
    p.add_argument("--assign", default="", help="type-variable sizes, e.g. a=2")
    return parser


GLOBAL_DEFAULTS = {"config": None, "calculus": None, "json": False, "seed": None, "verbose": False}


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    for name, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, value)
    return args


def load_and_merge_config(args: argparse.Namespace) -> Dict[str, Any]:
    """
    Load the configuration and merge it with the command line.

    Priority: CLI args > --config file > config.yaml > defaults
    """
    config = load_config(args.config)
    merged = {
        "fuel": get_config_value("execution", "fuel", default=1_000_000, config=config),
        "seed": get_config_value("execution", "seed", default=2024, config=config),
        "bfs_depth": get_config_value("simulation", "bfs_depth", default=32, config=config),
        "max_states": get_config_value("simulation", "max_states", default=20_000, config=config),
        "law_sizes": get_config_value("semantics", "law_sizes", default=[0, 1, 2], config=config),
        "law_cases": get_config_value("semantics", "law_cases", default=400, config=config),
        "table_limit": get_config_value("semantics", "table_limit", default=4096, config=config),
        "logging": get_config_value("logging", default={}, config=config),
    }
    if args.seed is not None:
        merged["seed"] = args.seed
    if getattr(args, "fuel", None) is not None:
        merged["fuel"] = args.fuel
    if getattr(args, "depth", None) is not None:
        merged["bfs_depth"] = args.depth
    if getattr(args, "max_states", None) is not None:
        merged["max_states"] = args.max_states
    if getattr(args, "sizes", None):
        try:
            merged["law_sizes"] = [int(s) for s in args.sizes.split(",")]
        except ValueError as exc:
            raise ValidationError(f"--sizes expects integers: {exc}") from exc
    if getattr(args, "cases", None) is not None:
        merged["law_cases"] = args.cases

    validate_positive_int(merged["fuel"], "fuel")
    validate_positive_int(merged["bfs_depth"], "depth")
    validate_positive_int(merged["max_states"], "max_states")
    validate_positive_int(merged["law_cases"], "cases")
    merged["law_sizes"] = validate_sizes(merged["law_sizes"], "sizes")
    return merged


# ---------------------------------------------------------------------------
# Input
# ---------------------------------------------------------------------------


def resolve_calculus(args: argparse.Namespace) -> Calculus:
    if args.calculus is not None:
        return Calculus.from_name(args.calculus)
    if args.file == "-":
        raise UsageError("reading stdin needs --calculus")
    calculus = FILE_EXTENSIONS.get(Path(args.file).suffix)
    if calculus is None:
        raise UsageError(f"cannot tell the calculus of {args.file}; pass --calculus")
    return calculus


def read_source(args: argparse.Namespace) -> SourceFile:
    calculus = resolve_calculus(args)
    if args.file == "-":
        text = sys.stdin.read()
    else:
        try:
            text = Path(args.file).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read {args.file}: {exc.strerror}") from exc
        except UnicodeDecodeError as exc:
            raise UsageError(
                f"{args.file} is not UTF-8: byte {exc.object[exc.start]:#04x} at offset {exc.start}"
            ) from exc
    return parse(text, calculus)


def require_main(src: SourceFile):
    if src.main is None:
        raise UsageError("the source file has no main computation")
    return src.main


def emit(args: argparse.Namespace, payload: Dict[str, Any], text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, default=str))
    else:
        print(text)


def _theta(text: str) -> Dict[str, AtomSet]:
    return {name: AtomSet(size) for name, size in parse_assignment(text).items()}


def _card_text(card) -> str:
    return "infinite" if card == INFINITE else str(int(card))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_check(args, cfg) -> int:
    src = read_source(args)
    report = check_source(src)
    lines = []
    for entry in report.entries:
        if entry.ok:
            lines.append(f"{entry.name} : {print_type(entry.type)}")
        else:
            lines.append(f"{entry.name} : type error ({entry.error.reason}) {entry.error.message}")
    if not report.entries:
        lines.append("nothing to check")
    emit(args, report.to_dict(), "\n".join(lines))
    return EXIT_OK if report.ok else EXIT_FAILURE


def cmd_run(args, cfg) -> int:
    src = read_source(args)
    trace = run(require_main(src), cfg["fuel"], record=args.trace)
    status = trace.status
    if isinstance(status, NormalForm):
        summary = show_result(status.value)
    elif isinstance(status, OutOfFuel):
        summary = f"out of fuel after {trace.count} step(s)"
    else:
        summary = f"stuck ({status.reason}) after {trace.count} step(s)"
    lines = []
    if args.trace:
        for i, s in enumerate(trace.steps, start=1):
            lines.append(f"{i:4d}. {s.rule:<14} depth {s.depth}: {print_term(s.term)}")
    lines.append(summary)
    payload = trace.to_dict() if args.trace else {"count": trace.count, "status": status.to_dict()}
    emit(args, payload, "\n".join(lines))
    return EXIT_FAILURE if isinstance(status, Stuck) else EXIT_OK


def _translation(args, src: SourceFile) -> TranslationId:
    try:
        return TranslationId.of(src.calculus, args.to, args.variant)
    except EffexError as exc:
        raise UsageError(str(exc)) from exc


def cmd_translate(args, cfg) -> int:
    src = read_source(args)
    tid = _translation(args, src)
    text = print_source(translate_source(src, tid))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        logger.info(f"wrote {tid} translation to {args.output}")
        emit(args, {"translation": str(tid), "output": args.output}, f"wrote {args.output}")
    else:
        emit(args, {"translation": str(tid), "source": text}, text.rstrip("\n"))
    return EXIT_OK


def cmd_simulate(args, cfg) -> int:
    src = read_source(args)
    tid = _translation(args, src)
    report = simulate_check(
        require_main(src), tid, cfg["fuel"], cfg["bfs_depth"], cfg["max_states"]
    )
    lines = [f"translation {tid}, mode {report.mode}, source {report.source_status}"]
    if report.steps:
        frame = report.to_frame()
        lines.append(frame.to_string(index=False))
    failed = report.failed
    if failed is not None and failed.detail:
        lines.append(f"first unmatched step {failed.index} ({failed.source_rule}):")
        for key, value in failed.detail.items():
            lines.append(f"  {key}: {value}")
    lines.append(f"end-to-end agreement: {report.end_to_end}")
    lines.append("simulation ok" if report.ok else "simulation NOT ok")
    emit(args, report.to_dict(), "\n".join(lines))
    return EXIT_OK if report.ok else EXIT_FAILURE


def cmd_denote(args, cfg) -> int:
    src = read_source(args)
    rng = np.random.default_rng(cfg["seed"])
    validate_non_negative_int(args.samples, "samples")
    if args.type_text is None:
        element = den_program(require_main(src), src.calculus)
        text = show_element(element)
        emit(args, {"program": print_term(src.main), "denotation": text}, text)
        return EXIT_OK
    ty = parse_type(args.type_text, src.calculus, src)
    theta = _theta(args.assign)
    if isinstance(ty, VType):
        s = den_vtype(ty, theta)
    else:
        effect = parse_effect(args.effect, src.calculus, src) if args.effect else Pure()
        s = den_ctype(ty, effect, theta)
    card = s.cardinality
    if card != INFINITE and card <= cfg["table_limit"]:
        elements = enumerate_set(s, cfg["table_limit"])[: args.samples]
    else:
        elements = [s.sample(rng) for _ in range(args.samples)]
    shown = [show_element(e) for e in elements]
    payload = {
        "type": print_type(ty),
        "assignment": {k: len(v) for k, v in theta.items()},
        "cardinality": _card_text(card),
        "samples": shown,
    }
    lines = [f"{print_type(ty)} has {_card_text(card)} element(s)"]
    lines += [f"  {e}" for e in shown]
    emit(args, payload, "\n".join(lines))
    return EXIT_OK


def collect_monads(src: SourceFile) -> List[MonadDef]:
    """Named monads first, then anonymous ones reified in definitions or main."""
    found: List[MonadDef] = list(src.monads.values())

    def visit(node) -> None:
        if isinstance(node, Reify) and node.monad not in found:
            found.append(node.monad)
        for _, child, _, _ in node.children():
            visit(child)

    for _, value in src.definitions:
        visit(value)
    if src.main is not None:
        visit(src.main)
    return found


def cmd_laws(args, cfg) -> int:
    src = read_source(args)
    monads = collect_monads(src)
    reports = [
        check_monad_laws(m, Pure(), cfg["law_sizes"], cfg["law_cases"], cfg["seed"])
        for m in monads
    ]
    lines = []
    for report in reports:
        lines.append(f"{report.monad}: {report.verdict}")
        for r in report.results:
            how = "exhaustive" if r.exhaustive else "sampled"
            mark = "ok" if r.ok else "FAILED"
            lines.append(f"  {r.law:<15} size {r.size}: {r.cases} case(s), {how}, {mark}")
            if r.witness:
                lines.append(f"    witness: {r.witness}")
    if not reports:
        lines.append("no monads found")
    ok = all(r.ok for r in reports)
    emit(args, {"ok": ok, "monads": [r.to_dict() for r in reports]}, "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAILURE


def cmd_pigeonhole(args, cfg) -> int:
    validate_non_negative_int(args.k, "k")
    calculus = Calculus.from_name(args.calculus) if args.calculus else Calculus.MON
    target = parse_type(args.target, calculus)
    report = pigeonhole_demo(args.k, target, _theta(args.assign))
    emit(args, report.to_dict(), report.to_text())
    return EXIT_OK if report.ok else EXIT_FAILURE


COMMANDS = {
    "check": cmd_check,
    "run": cmd_run,
    "translate": cmd_translate,
    "simulate": cmd_simulate,
    "denote": cmd_denote,
    "laws": cmd_laws,
    "pigeonhole": cmd_pigeonhole,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_arguments(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    try:
        cfg = load_and_merge_config(args)
    except (ValidationError, OSError) as exc:
        print(f"effex: {exc}", file=sys.stderr)
        return EXIT_USAGE

    log_cfg = cfg["logging"] or {}
    setup_logging(
        level="DEBUG" if args.verbose else log_cfg.get("level", "WARNING"),
        log_file=log_cfg.get("file"),
        console=log_cfg.get("console", True),
        file_enabled=log_cfg.get("file_enabled", False),
        format_string=log_cfg.get("format"),
    )
    logger.info(f"effex {args.command} started")

    try:
        code = COMMANDS[args.command](args, cfg)
    except (UsageError, ValidationError) as exc:
        logger.error(str(exc))
        if args.json:
            print(json.dumps({"ok": False, "error": {"error": "usage", "message": str(exc)}}))
        else:
            print(f"effex: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EffexError as exc:
        logger.error(f"{args.command} failed: {exc}")
        if args.json:
            print(json.dumps({"ok": False, "error": exc.to_dict()}, default=str))
        else:
            print(f"effex: {exc.to_dict().get('error', 'error')} error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    logger.info(f"effex {args.command} finished with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
