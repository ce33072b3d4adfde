"""End-to-end verification of one program in a chosen mode.

Shared by the command line and the test-suite: parse, lower, optionally
accelerate and restrict, then run bounded model checking (or the
explicit-state oracle) and collect a flat, JSON-serialisable report.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Optional

from .accel import DEFAULT_MAX_PATHS, accelerate_cfa
from .bmc import (SAFE, TIMEOUT, UNKNOWN, UNSAFE, BoundExhausted,
                  SolverOptions, check_safety, find_proof_bound)
from .frontend import ParseError, SourceProgram, dump_dot, lower, parse
from .frontend.parser import read_expectation
from .frontend.lang import Cfa
from .oracle import StateSpace, analyse
from .trace_automata import dump_dfa_dot, restrict

MODES = ("plain", "accel", "accel-ta", "oracle")
ERROR = "ERROR"

EXIT_CODES = {SAFE: 0, UNSAFE: 1, UNKNOWN: 2, ERROR: 3, TIMEOUT: 4}


def default_unwind(mode: str) -> int:
    return 100 if mode == "plain" else 3


@dataclass
class RunConfig:
    mode: str = "accel-ta"
    unwind: Optional[int] = None  # None: per-mode default
    kmax: Optional[int] = None  # search the smallest decisive bound up to kmax
    width: Optional[int] = None
    timeout: float = 30.0
    max_loop_paths: int = DEFAULT_MAX_PATHS
    trace_automata: bool = True  # only meaningful in accel-ta mode
    seed: int = 0
    external_solver: Optional[str] = None
    dump_cfa: Optional[str] = None
    dump_ta: Optional[str] = None
    dimacs: Optional[str] = None

    def effective_mode(self) -> str:
        if self.mode == "accel-ta" and not self.trace_automata:
            return "accel"
        return self.mode


@dataclass
class Report:
    file: str
    mode: str
    verdict: str
    expected: Optional[str] = None
    unwind: Optional[int] = None
    width: Optional[int] = None
    edges_original: Optional[int] = None
    edges_accelerated: Optional[int] = None
    edges_checked: Optional[int] = None
    growth_pct: Optional[float] = None
    accelerated_loops: int = 0
    dfa_states: Optional[int] = None
    time_transform: float = 0.0
    time_check: float = 0.0
    time_total: float = 0.0
    cex: Optional[dict] = None
    live_back_edges: list = field(default_factory=list)
    reachable_states: Optional[int] = None
    diameter: Optional[int] = None
    accel_report: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    reason: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    @property
    def correct(self) -> Optional[bool]:
        if self.expected is None:
            return None
        return self.verdict == self.expected.upper()

    @property
    def contradicts(self) -> bool:
        """A decisive verdict that disagrees with the file's expectation."""
        if self.expected is None or self.verdict not in (SAFE, UNSAFE):
            return False
        return self.verdict != self.expected.upper()

    def to_json(self) -> dict:
        d = asdict(self)
        d["correct"] = self.correct
        d["exit_code"] = self.exit_code
        return d


@dataclass
class Prepared:
    """The CFA that will be checked, with the artefacts that produced it."""
    original: Cfa
    cfa: Cfa
    accelerated: object = None
    instrumented: object = None


def prepare(cfa: Cfa, mode: str, max_loop_paths: int = DEFAULT_MAX_PATHS) -> Prepared:
    if mode in ("plain", "oracle"):
        return Prepared(cfa, cfa)
    acc = accelerate_cfa(cfa, max_loop_paths)
    if mode == "accel":
        return Prepared(cfa, acc.cfa, acc)
    ins = restrict(acc)
    return Prepared(cfa, ins.cfa, acc, ins)


def verify_file(path, cfg: RunConfig) -> Report:
    t0 = time.monotonic()
    mode = cfg.effective_mode()
    rep = Report(str(path), mode, ERROR)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        rep.expected = read_expectation(text)
        prog = parse(SourceProgram(text, str(path)), cfg.width)
    except (OSError, UnicodeDecodeError, ParseError) as exc:
        rep.reason = str(exc)
        return rep
    rep.width = prog.width
    try:
        cfa = lower(prog)
    except Exception as exc:  # lowering errors are reported, not raised
        rep.reason = f"lowering failed: {exc}"
        return rep
    return verify_cfa(cfa, cfg, rep, t0)


def verify_cfa(cfa: Cfa, cfg: RunConfig, rep: Optional[Report] = None,
               t0: Optional[float] = None) -> Report:
    t0 = time.monotonic() if t0 is None else t0
    mode = cfg.effective_mode()
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    rep = rep or Report("<cfa>", mode, ERROR, width=cfa.width)
    rep.warnings = list(cfa.warnings)
    rep.edges_original = len(cfa.edges)

    if mode == "oracle":
        try:
            res = analyse(cfa, StateSpace.of(cfa))
        except Exception as exc:
            rep.reason = str(exc)
            return rep
        rep.verdict = UNSAFE if res.error_reachable else SAFE
        rep.reachable_states, rep.diameter = res.reachable, res.diameter
        rep.stats = {"diameter_steps": res.diameter_steps}
        rep.time_total = time.monotonic() - t0
        return rep

    t1 = time.monotonic()
    try:
        prep = prepare(cfa, mode, cfg.max_loop_paths)
    except Exception as exc:
        rep.reason = f"transformation failed: {exc}"
        return rep
    rep.time_transform = time.monotonic() - t1
    checked = prep.cfa
    rep.edges_checked = len(checked.edges)
    if prep.accelerated is not None:
        rep.edges_accelerated = len(prep.accelerated.cfa.edges)
        rep.accelerated_loops = len(prep.accelerated.loops)
        rep.accel_report = [f"{t} -> {o}" for t, o in prep.accelerated.report]
        rep.warnings += [w for w in prep.accelerated.warnings if w not in rep.warnings]
    if prep.instrumented is not None:
        rep.dfa_states = prep.instrumented.dfa.num_states
        # instrumentation overhead relative to the accelerated program
        rep.growth_pct = 100.0 * (len(checked.edges) - rep.edges_accelerated) / max(1, rep.edges_accelerated)
        rep.warnings += prep.instrumented.notes
    if cfg.dump_cfa:
        with open(cfg.dump_cfa, "w") as fh:
            fh.write(dump_dot(checked))
    if cfg.dump_ta and prep.instrumented is not None:
        with open(cfg.dump_ta, "w") as fh:
            fh.write(dump_dfa_dot(prep.instrumented.dfa))

    opts = SolverOptions(seed=cfg.seed, deadline=t0 + cfg.timeout,
                         external=cfg.external_solver, dimacs_path=cfg.dimacs)
    t2 = time.monotonic()
    if cfg.kmax is not None:
        try:
            k, v = find_proof_bound(checked, cfg.kmax, opts)
        except BoundExhausted as exc:
            rep.verdict, rep.unwind, rep.reason = UNKNOWN, cfg.kmax, str(exc)
            rep.time_check = time.monotonic() - t2
            rep.time_total = time.monotonic() - t0
            return rep
    else:
        k = cfg.unwind if cfg.unwind is not None else default_unwind(mode)
        v = check_safety(checked, k, opts)
    rep.time_check = time.monotonic() - t2
    rep.verdict, rep.unwind, rep.stats = v.kind, k, dict(v.stats)
    rep.reason = v.reason or rep.reason
    rep.live_back_edges = list(v.live_back_edges)
    if v.cex is not None:
        rep.cex = v.cex.to_json(checked)
    rep.time_total = time.monotonic() - t0
    return rep


__all__ = ["ERROR", "EXIT_CODES", "MODES", "Prepared", "Report", "RunConfig",
           "default_unwind", "prepare", "verify_cfa", "verify_file"]
