"""Bit-blasting and propositional satisfiability."""
from __future__ import annotations

from typing import Optional

from .bitblast import BlastError, Blaster, Cnf, bitblast
from .cdcl import DEFAULT_CONFLICT_BUDGET, ResourceOut, SatResult, Solver, solve
from .dimacs import export_dimacs, parse_dimacs, solve_external


def check_formula(formula, width: int, defs=None, bdefs=None, seed: int = 0,
                  deadline: Optional[float] = None) -> Optional[dict]:
    """Decoded model of ``formula`` or ``None`` if unsatisfiable."""
    cnf = bitblast(formula, width, defs, bdefs)
    res = solve(cnf, seed=seed, deadline=deadline)
    if not res.satisfiable:
        return None
    return cnf.decode(res.model)


__all__ = [
    "BlastError", "Blaster", "Cnf", "DEFAULT_CONFLICT_BUDGET", "ResourceOut",
    "SatResult", "Solver", "bitblast", "check_formula", "export_dimacs",
    "parse_dimacs", "solve", "solve_external",
]
