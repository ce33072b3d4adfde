"""Command-line interface.

``accelbmc [flags] FILE`` verifies one program; ``accelbmc bench DIR
[flags]`` runs every ``.imp`` file below DIR that carries an expectation
header and prints a summary table.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from .accel import DEFAULT_MAX_PATHS
from .frontend.parser import read_expectation
from .pipeline import EXIT_CODES, MODES, Report, RunConfig, verify_file

log = logging.getLogger("accelbmc")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=MODES, default="accel-ta",
                   help="verification pipeline (default: accel-ta)")
    p.add_argument("--unwind", type=int, metavar="K",
                   help="per-loop unwinding bound (default: 100 plain, 3 otherwise)")
    p.add_argument("--kmax", type=int, metavar="K",
                   help="search the smallest decisive bound in 1..K instead of --unwind")
    p.add_argument("--width", type=int, metavar="W", help="bit width of all variables")
    p.add_argument("--timeout", type=float, default=30.0, metavar="S",
                   help="wall-clock budget per program in seconds (default: 30)")
    p.add_argument("--max-loop-paths", type=int, default=DEFAULT_MAX_PATHS, metavar="N",
                   help="looping traces enumerated per loop head")
    p.add_argument("--no-trace-automata", action="store_true",
                   help="in accel-ta mode, skip the restriction step")
    p.add_argument("--seed", type=int, default=0, help="SAT solver seed")
    p.add_argument("--external-solver", metavar="CMD",
                   help="DIMACS solver command used instead of the built-in one")
    p.add_argument("--json", action="store_true",
                   help="print one JSON object per program instead of text")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="accelbmc",
                                description="Bounded model checking with under-approximating loop acceleration.")
    _add_common(p)
    p.add_argument("--dump-cfa", metavar="F", help="write the checked CFA as DOT")
    p.add_argument("--dump-ta", metavar="F", help="write the trace automaton as DOT")
    p.add_argument("--dimacs", metavar="F", help="write the error query as DIMACS CNF")
    p.add_argument("file", help="program (.imp)")
    return p


def build_bench_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="accelbmc bench",
                                description="Run a directory of programs with expectation headers.")
    _add_common(p)
    p.add_argument("--modes", metavar="M1,M2",
                   help="comma-separated modes to compare (default: --mode)")
    p.add_argument("--workers", type=int, default=1, help="parallel processes")
    p.add_argument("dir", help="benchmark directory")
    return p


def _config(args, mode: Optional[str] = None) -> RunConfig:
    return RunConfig(mode=mode or args.mode, unwind=args.unwind, kmax=args.kmax,
                     width=args.width, timeout=args.timeout,
                     max_loop_paths=args.max_loop_paths,
                     trace_automata=not args.no_trace_automata, seed=args.seed,
                     external_solver=args.external_solver,
                     dump_cfa=getattr(args, "dump_cfa", None),
                     dump_ta=getattr(args, "dump_ta", None),
                     dimacs=getattr(args, "dimacs", None))


def format_report(rep: Report) -> str:
    lines = [f"{rep.file}: {rep.verdict}"
             + (f" (k={rep.unwind})" if rep.unwind is not None else "")]
    if rep.reason:
        lines.append(f"  reason: {rep.reason}")
    if rep.edges_checked is not None:
        sizes = [rep.edges_original] + ([rep.edges_accelerated] if rep.edges_accelerated is not None else [])
        if rep.mode == "accel-ta":
            sizes.append(rep.edges_checked)
        line = f"  mode {rep.mode}: " + " -> ".join(map(str, sizes)) + " edges"
        if rep.growth_pct is not None:
            line += f" (instrumentation {rep.growth_pct:+.0f}%)"
        if rep.edges_accelerated is not None:
            line += f", {rep.accelerated_loops} accelerated loop(s)"
        if rep.dfa_states is not None:
            line += f", DFA {rep.dfa_states} states"
        lines.append(line)
    if rep.reachable_states is not None:
        lines.append(f"  {rep.reachable_states} reachable states, diameter {rep.diameter} edges "
                     f"({rep.stats.get('diameter_steps')} statement steps)")
    for w in rep.warnings:
        lines.append(f"  warning: {w}")
    for r in rep.accel_report:
        lines.append(f"  loop {r}")
    if rep.live_back_edges:
        lines.append(f"  unwinding assertions violated at edges {rep.live_back_edges}")
    if rep.cex:
        lines.append("  counterexample:")
        for s in rep.cex["steps"]:
            choice = f"  [choice {s['choice']}]" if s["choice"] is not None else ""
            lines.append(f"    {s['from']:>8}  {s['stmt']}{choice}")
        lines.append(f"    final state {rep.cex['final']}")
    lines.append(f"  time {rep.time_total:.2f}s (transform {rep.time_transform:.2f}s, "
                 f"check {rep.time_check:.2f}s)")
    return "\n".join(lines)


def _emit(rep: Report, as_json: bool) -> None:
    if as_json:
        print(json.dumps(rep.to_json(), sort_keys=True))
    else:
        print(format_report(rep))


def run_single(argv) -> int:
    args = build_parser().parse_args(argv)
    _logging(args.verbose)
    rep = verify_file(args.file, _config(args))
    _emit(rep, args.json)
    return rep.exit_code


# ---------------------------------------------------------------------------
# Benchmarks


def collect(root: Path) -> tuple:
    """Files with an expectation header, and those skipped without one."""
    files, skipped = [], []
    for f in sorted(root.rglob("*.imp")):
        try:
            text = f.read_text(encoding="utf-8")
        except OSError:
            skipped.append(f)
            continue
        (files if read_expectation(text) else skipped).append(f)
    return files, skipped


def _job(item):
    path, cfg = item
    return verify_file(path, cfg)


def _category(root: Path, f: Path) -> str:
    rel = f.relative_to(root)
    return rel.parts[0] if len(rel.parts) > 1 else "."


def summary_table(root: Path, modes: list, results: dict) -> str:
    """Per-category correctness and time for each mode, plus program growth."""
    cats = sorted({_category(root, Path(r.file)) for reps in results.values() for r in reps})
    head = ["category", "#progs"]
    for m in modes:
        head += [f"{m} ok", f"{m} s"]
    if any(m in ("accel", "accel-ta") for m in modes):
        head += ["#accel", "growth%"]
    rows = []
    for c in cats + ["total"]:
        row = None
        for m in modes:
            reps = [r for r in results[m] if c == "total" or _category(root, Path(r.file)) == c]
            if row is None:
                row = [c, str(len(reps))]
            row += [str(sum(1 for r in reps if r.correct)), f"{sum(r.time_total for r in reps):.1f}"]
        if len(head) > len(row):
            m = "accel-ta" if "accel-ta" in modes else "accel"  # growth is only measured with TA
            reps = [r for r in results[m] if c == "total" or _category(root, Path(r.file)) == c]
            growth = [r.growth_pct for r in reps if r.growth_pct is not None]
            row += [str(sum(1 for r in reps if r.accelerated_loops)),
                    f"{sum(growth) / len(growth):.0f}" if growth else "-"]
        rows.append(row)
    widths = [max(len(x) for x in col) for col in zip(head, *rows)]
    fmt = lambda r: "  ".join(x.rjust(w) if i else x.ljust(w) for i, (x, w) in enumerate(zip(r, widths)))
    return "\n".join([fmt(head), "  ".join("-" * w for w in widths)] + [fmt(r) for r in rows])


def run_bench(argv) -> int:
    args = build_bench_parser().parse_args(argv)
    _logging(args.verbose)
    root = Path(args.dir)
    if not root.is_dir():
        print(f"accelbmc bench: {root} is not a directory", file=sys.stderr)
        return EXIT_CODES["ERROR"]
    modes = args.modes.split(",") if args.modes else [args.mode]
    bad = [m for m in modes if m not in MODES]
    if bad:
        print(f"accelbmc bench: unknown mode(s) {', '.join(bad)}", file=sys.stderr)
        return EXIT_CODES["ERROR"]
    files, skipped = collect(root)
    for f in skipped:
        log.warning("skipping %s: no expectation header", f)
    results = {}
    mismatches = []
    for m in modes:
        jobs = [(f, _config(args, m)) for f in files]
        if args.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(args.workers) as ex:
                reps = list(ex.map(_job, jobs))
        else:
            reps = [_job(j) for j in jobs]
        results[m] = reps
        for r in reps:
            if args.json:
                _emit(r, True)
            else:
                mark = "MISMATCH" if r.contradicts else ("ok" if r.correct else "--")
                print(f"[{m}] {r.file}: {r.verdict} (expected {(r.expected or '?').upper()}) "
                      f"{mark} {r.time_total:.2f}s" + (f"  {r.reason}" if r.verdict == "ERROR" else ""))
            if r.contradicts or r.verdict == "ERROR":
                mismatches.append(r)
    if not args.json:
        print()
        print(summary_table(root, modes, results) if files else "no benchmarks found")
    for r in mismatches:
        print(f"accelbmc bench: {r.file} [{r.mode}] gave {r.verdict}, expected "
              f"{r.expected.upper() if r.expected else '?'} {r.reason}".rstrip(), file=sys.stderr)
    return 1 if mismatches else 0


def _logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "bench":
        return run_bench(argv[1:])
    return run_single(argv)


if __name__ == "__main__":
    sys.exit(main())
