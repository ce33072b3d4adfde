"""DIMACS CNF export/import and the external-solver escape hatch."""
from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from typing import Optional

from .cdcl import ResourceOut, SatResult


def export_dimacs(cnf) -> str:
    lines = [f"p cnf {cnf.num_vars} {len(cnf.clauses)}"]
    for c in cnf.clauses:
        lines.append(" ".join(str(l) for l in c) + " 0")
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> tuple:
    """Return ``(num_vars, clauses)``.  Clauses may span lines."""
    num_vars = None
    clauses, cur = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: {line!r}")
            num_vars = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(lit)
    if cur:
        clauses.append(cur)
    if num_vars is None:
        raise ValueError("missing problem line")
    return num_vars, clauses


def parse_solver_output(text: str, num_vars: int) -> SatResult:
    status = None
    model: dict = {}
    for line in text.splitlines():
        if line.startswith("s "):
            word = line[2:].strip().upper()
            if word == "SATISFIABLE":
                status = True
            elif word == "UNSATISFIABLE":
                status = False
            else:
                raise ResourceOut(f"external solver reported {word}")
        elif line.startswith("v "):
            for tok in line[2:].split():
                lit = int(tok)
                if lit:
                    model[abs(lit)] = lit > 0
    if status is None:
        raise RuntimeError("external solver produced no status line")
    if not status:
        return SatResult(False)
    full = {v: model.get(v, False) for v in range(1, num_vars + 1)}
    return SatResult(True, full)


def solve_external(cnf, command: str, timeout: Optional[float] = None) -> SatResult:
    """Run ``command <file.cnf>`` following SAT-competition output rules."""
    fd, path = tempfile.mkstemp(suffix=".cnf")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(export_dimacs(cnf))
        try:
            proc = subprocess.run(shlex.split(command) + [path], capture_output=True,
                                  text=True, timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            raise ResourceOut("external solver timed out") from exc
        result = parse_solver_output(proc.stdout, cnf.num_vars)
        if result.satisfiable:
            for c in cnf.clauses:
                if not any(result.model[abs(l)] == (l > 0) for l in c):
                    raise RuntimeError("external solver model violates a clause")
        return result
    finally:
        os.unlink(path)
