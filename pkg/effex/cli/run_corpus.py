"""
Effex Corpus Runner
===================

Runs check, run and every applicable simulation over a directory of
programs, and optionally over a seeded corpus of generated programs.

Usage:
    effex-corpus programs/
    effex-corpus programs/ --generate 200 --format json

Results:
    <results_dir>/corpus.csv     one row per (program, task)
    <results_dir>/generated.csv  one row per generated program (with --generate)
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from effex.core.effex_gen import ProgramGenerator
from effex.core.effex_opsem import NormalForm, Stuck, run
from effex.core.effex_surface import FILE_EXTENSIONS, SourceFile, parse, show_result
from effex.core.effex_types import Calculus
from effex.core.effex_typesys import check_source, elaborate, first_untypeable
from effex.core.effex_xlate import all_translations, simulate_check
from effex.utils.config_loader import get_config_value, load_config
from effex.utils.errors import EffexError
from effex.utils.logging_config import setup_logging
from effex.utils.validation import ValidationError, validate_non_negative_int

logger = logging.getLogger(__name__)


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="effex-corpus",
        description="Effex - batch check/run/simulate over a program directory",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:

  # Every program in programs/, results in results/corpus.csv
  effex-corpus programs/

  # Add 200 generated programs per calculus, export as JSON
  effex-corpus programs/ --generate 200 --format json
        """,
    )
    parser.add_argument("directory", nargs="?", default="programs", help="program directory")
    parser.add_argument("--config", type=str, default=None, help="YAML configuration file")
    parser.add_argument("--output", type=str, default=None, help="results directory")
    parser.add_argument("--format", choices=["csv", "json"], default=None, help="export format")
    parser.add_argument("--fuel", type=int, default=None, help="step budget per run")
    parser.add_argument("--seed", type=int, default=None, help="generator seed")
    parser.add_argument(
        "--generate", type=int, default=0, metavar="N",
        help="also run N generated programs per calculus",
    )
    parser.add_argument("--no-simulate", action="store_true", help="skip simulation tasks")
    parser.add_argument("--verbose", "-v", action="store_true", help="log at DEBUG level")
    return parser.parse_args(argv)


def load_and_merge_config(args: argparse.Namespace) -> Dict[str, Any]:
    """Priority: CLI args > --config file > config.yaml > defaults"""
    config = load_config(args.config)
    merged = {
        "fuel": get_config_value("execution", "fuel", default=1_000_000, config=config),
        "seed": get_config_value("execution", "seed", default=2024, config=config),
        "bfs_depth": get_config_value("simulation", "bfs_depth", default=32, config=config),
        "max_states": get_config_value("simulation", "max_states", default=20_000, config=config),
        "max_depth": get_config_value("generation", "max_depth", default=4, config=config),
        "results_dir": get_config_value("output", "results_dir", default="results", config=config),
        "export_format": get_config_value("output", "export_format", default="csv", config=config),
        "logging": get_config_value("logging", default={}, config=config),
    }
    for key, value in (
        ("fuel", args.fuel),
        ("seed", args.seed),
        ("results_dir", args.output),
        ("export_format", args.format),
    ):
        if value is not None:
            merged[key] = value
    validate_non_negative_int(args.generate, "generate")
    return merged


# ---------------------------------------------------------------------------
# Tasks
# ---------------------------------------------------------------------------


def _row(program: str, calculus: Calculus, task: str, **fields) -> Dict[str, Any]:
    return {"program": program, "calculus": calculus.value, "task": task, **fields}


def run_program(path: Path, cfg: Dict[str, Any], simulate: bool = True) -> List[Dict[str, Any]]:
    """All rows for one source file."""
    calculus = FILE_EXTENSIONS[path.suffix]
    name = path.name
    try:
        src: SourceFile = parse(path.read_text(encoding="utf-8"), calculus)
    except EffexError as exc:
        return [_row(name, calculus, "parse", ok=False, outcome=str(exc))]
    except UnicodeDecodeError as exc:
        outcome = f"not UTF-8 at offset {exc.start}"
        return [_row(name, calculus, "parse", ok=False, outcome=outcome)]

    report = check_source(src)
    failed = [e for e in report.entries if not e.ok]
    rows = [
        _row(
            name, calculus, "check", ok=report.ok,
            outcome="ok" if report.ok else f"{failed[0].name}: {failed[0].error.reason}",
        )
    ]
    if src.main is None:
        return rows

    start = time.time()
    trace = run(src.main, cfg["fuel"], record=False)
    status = trace.status
    outcome = show_result(status.value) if isinstance(status, NormalForm) else type(status).__name__
    rows.append(
        _row(
            name, calculus, "run", ok=not isinstance(status, Stuck), outcome=outcome,
            steps=trace.count, seconds=round(time.time() - start, 4),
        )
    )
    if not simulate:
        return rows

    for tid in all_translations():
        if tid.source is not calculus:
            continue
        start = time.time()
        try:
            sim = simulate_check(src.main, tid, cfg["fuel"], cfg["bfs_depth"], cfg["max_states"])
        except EffexError as exc:
            rows.append(_row(name, calculus, f"simulate {tid}", ok=False, outcome=str(exc)))
            continue
        rows.append(
            _row(
                name, calculus, f"simulate {tid}", ok=sim.ok,
                outcome="ok" if sim.ok else ("inconclusive" if sim.inconclusive else "failed"),
                steps=len(sim.steps), inconclusive=sim.inconclusive,
                end_to_end=sim.end_to_end, seconds=round(time.time() - start, 4),
            )
        )
    return rows


def run_directory(directory: Path, cfg: Dict[str, Any], simulate: bool = True) -> pd.DataFrame:
    files = sorted(p for p in directory.iterdir() if p.suffix in FILE_EXTENSIONS)
    if not files:
        raise ValidationError(f"no programs in {directory}")
    rows: List[Dict[str, Any]] = []
    for path in files:
        program_rows = run_program(path, cfg, simulate)
        bad = [r["task"] for r in program_rows if not r["ok"]]
        logger.info(f"{path.name}: {len(program_rows)} task(s), {len(bad)} not ok {bad}")
        rows.extend(program_rows)
    return pd.DataFrame(rows)


def run_generated(n: int, cfg: Dict[str, Any]) -> pd.DataFrame:
    """
    Safety, termination and preservation over generated programs.

    Every generated program is well typed, so its elaborated run must reach a
    normal form; ``retyped`` records that every term of the run, the normal
    form included, checks at the program type, and ``untyped_step`` names the
    first one that does not.
    """
    rows: List[Dict[str, Any]] = []
    for calculus in (Calculus.MAM, Calculus.EFF, Calculus.MON, Calculus.DEL):
        gen = ProgramGenerator(calculus, cfg["seed"], cfg["max_depth"])
        for i, (program, ctype) in enumerate(gen.corpus(n)):
            typed = elaborate(program, expected=ctype, calculus=calculus)
            trace = run(typed, cfg["fuel"], record=True)
            status = trace.status
            broken = first_untypeable([typed] + [s.term for s in trace.steps], ctype, calculus)
            if broken is not None:
                logger.warning(
                    f"{calculus.value} #{i}: term {broken[0]} of the run is untypeable: "
                    f"{broken[1]}"
                )
            rows.append(
                {
                    "calculus": calculus.value,
                    "index": i,
                    "status": type(status).__name__,
                    "steps": trace.count,
                    "retyped": isinstance(status, NormalForm) and broken is None,
                    "untyped_step": None if broken is None else broken[0],
                }
            )
        logger.info(f"{calculus.value}: {n} generated program(s) run and retyped")
    return pd.DataFrame(rows)


def export(df: pd.DataFrame, results_dir: Path, stem: str, fmt: str) -> Path:
    results_dir.mkdir(parents=True, exist_ok=True)
    path = results_dir / f"{stem}.{fmt}"
    if fmt == "json":
        df.to_json(path, orient="records", indent=2)
    else:
        df.to_csv(path, index=False)
    logger.info(f"wrote {len(df)} row(s) to {path}")
    return path


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_arguments(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        cfg = load_and_merge_config(args)
    except ValidationError as exc:
        print(f"effex-corpus: {exc}", file=sys.stderr)
        return 2

    log_cfg = cfg["logging"] or {}
    setup_logging(
        level="DEBUG" if args.verbose else log_cfg.get("level", "INFO"),
        log_file=log_cfg.get("file"),
        console=log_cfg.get("console", True),
        file_enabled=log_cfg.get("file_enabled", False),
        format_string=log_cfg.get("format"),
    )

    directory = Path(args.directory)
    if not directory.is_dir():
        print(f"effex-corpus: not a directory: {directory}", file=sys.stderr)
        return 2

    results_dir = Path(cfg["results_dir"])
    start = time.time()
    try:
        corpus = run_directory(directory, cfg, simulate=not args.no_simulate)
    except ValidationError as exc:
        print(f"effex-corpus: {exc}", file=sys.stderr)
        return 2
    export(corpus, results_dir, "corpus", cfg["export_format"])

    print(f"\n{'=' * 72}")
    print(f"Corpus: {directory} ({corpus['program'].nunique()} program(s))")
    print(f"{'=' * 72}")
    print(corpus[["program", "task", "ok", "outcome"]].to_string(index=False))

    ok = True
    if args.generate:
        generated = run_generated(args.generate, cfg)
        export(generated, results_dir, "generated", cfg["export_format"])
        summary = generated.groupby(["calculus", "status"]).size().unstack(fill_value=0)
        print(f"\nGenerated programs ({args.generate} per calculus):")
        print(summary.to_string())
        ok = bool((generated["status"] == "NormalForm").all() and generated["retyped"].all())

    print(f"\nElapsed: {time.time() - start:.1f}s, results in {results_dir}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
