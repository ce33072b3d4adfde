"""Statement semantics: weakest liberal preconditions, symbolic transition
relations of statements and traces, and the concrete one-step interpreter.

Transition relations are formulas over ``Vars`` and primed copies ``x'``.
Intermediate states introduced by composition and values chosen by havoc
stay as free symbols; every query on a relation is a satisfiability query,
so free symbols are read existentially.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .frontend.lang import (And, Assign, Assume, BExpr, Cmp, Const, Havoc,
                            Not, Or, Overflow, Skip, Stmt, Var, conj, disj,
                            eval_bexpr, eval_expr, free_vars, nnf, subst)

_fresh = itertools.count()


def fresh_name(base: str, tag: str = "@") -> str:
    return f"{base}{tag}{next(_fresh)}"


def primed(name: str) -> str:
    return name + "'"


def expand_flags(b, width: int):
    """Replace overflow flags by their comparison form."""
    if isinstance(b, Overflow):
        return b.desugar(width)
    if isinstance(b, And):
        return And(tuple(expand_flags(a, width) for a in b.args))
    if isinstance(b, Or):
        return Or(tuple(expand_flags(a, width) for a in b.args))
    if isinstance(b, Not):
        return Not(expand_flags(b.arg, width))
    return b


def wlp(st: Stmt, post: BExpr, width: int = 32) -> BExpr:
    """Weakest liberal precondition.

    ``x := *`` substitutes a fresh symbol named ``x@k`` for ``x``; the symbol
    stands for a universally quantified value (see :func:`universal_symbols`).
    """
    post = expand_flags(post, width)
    if isinstance(st, Assign):
        return subst(post, {st.var: st.expr})
    if isinstance(st, Havoc):
        return subst(post, {st.var: Var(fresh_name(st.var))})
    if isinstance(st, Assume):
        return disj(Not(st.cond), post)
    if isinstance(st, Skip):
        return post
    raise TypeError(f"unknown statement {st!r}")


def universal_symbols(b: BExpr) -> set:
    return {n for n in free_vars(b) if "@" in n}


@dataclass(frozen=True)
class Relation:
    formula: BExpr
    vars: tuple
    width: int

    def internal_symbols(self) -> set:
        own = set(self.vars) | {primed(v) for v in self.vars}
        return free_vars(self.formula) - own

    def __str__(self):
        return str(self.formula)


def identity(vars: Sequence[str], width: int) -> Relation:
    return Relation(conj(*(Cmp("==", Var(primed(v)), Var(v)) for v in vars)),
                    tuple(vars), width)


def trans_rel(st: Stmt, vars: Sequence[str], width: int) -> Relation:
    """Transition relation as ``not wlp(st, OR_x x' != x)``."""
    changed = disj(*(Cmp("!=", Var(primed(v)), Var(v)) for v in vars))
    return Relation(nnf(Not(wlp(st, changed, width))), tuple(vars), width)


def _rename_internals(rel: Relation) -> BExpr:
    mapping = {n: Var(fresh_name(n.split("@")[0].split("~")[0], "@"))
               for n in rel.internal_symbols()}
    return subst(rel.formula, mapping) if mapping else rel.formula


def compose(r1: Relation, r2: Relation) -> Relation:
    """Relational composition: first ``r1``, then ``r2``."""
    if tuple(r1.vars) != tuple(r2.vars):
        raise ValueError("relations over different variable sets")
    mids = {v: Var(fresh_name(v, "~")) for v in r1.vars}
    f1 = subst(r1.formula, {primed(v): mids[v] for v in r1.vars})
    f2 = subst(_rename_internals(r2), mids)
    return Relation(conj(f1, f2), r1.vars, r1.width)


def trace_rel(trace: Iterable[Stmt], vars: Sequence[str], width: int) -> Relation:
    rel = identity(vars, width)
    first = True
    for st in trace:
        r = trans_rel(st, vars, width)
        rel = r if first else compose(rel, r)
        first = False
    return rel


def power(st_rel: Relation, n: int) -> Relation:
    rel = identity(st_rel.vars, st_rel.width)
    for k in range(n):
        rel = st_rel if k == 0 else compose(rel, st_rel)
    return rel


# ---------------------------------------------------------------------------
# Relation queries (through the SAT core)


def is_satisfiable(formula: BExpr, width: int, fixed: Mapping[str, int] | None = None) -> bool:
    from .satcore import check_formula
    parts = [formula]
    for name, value in (fixed or {}).items():
        parts.append(Cmp("==", Var(name), Const(value)))
    return check_formula(conj(*parts), width) is not None


def feasible(rel: Relation, init: Mapping[str, int] | None = None) -> bool:
    """Is there a state pair in ``rel`` (optionally from a fixed start)?"""
    return is_satisfiable(rel.formula, rel.width, init)


def contains(rel: Relation, pre: Mapping[str, int], post: Mapping[str, int]) -> bool:
    fixed = dict(pre)
    fixed.update({primed(k): v for k, v in post.items()})
    return is_satisfiable(rel.formula, rel.width, fixed)


# ---------------------------------------------------------------------------
# Concrete interpreter


def step(st: Stmt, state: Mapping[str, int], width: int) -> list:
    """All successor states of ``state`` under ``st`` (havoc fans out)."""
    if isinstance(st, Assign):
        nxt = dict(state)
        nxt[st.var] = eval_expr(st.expr, state, width)
        return [nxt]
    if isinstance(st, Havoc):
        out = []
        for val in range(1 << width):
            nxt = dict(state)
            nxt[st.var] = val
            out.append(nxt)
        return out
    if isinstance(st, Assume):
        return [dict(state)] if eval_bexpr(st.cond, state, width) else []
    if isinstance(st, Skip):
        return [dict(state)]
    raise TypeError(f"unknown statement {st!r}")


def step_choice(st: Stmt, state: Mapping[str, int], width: int, choice: int | None = None):
    """Deterministic step: havoc takes ``choice``.  Returns None if blocked."""
    if isinstance(st, Havoc):
        if choice is None:
            raise ValueError("havoc needs a value")
        nxt = dict(state)
        nxt[st.var] = choice & ((1 << width) - 1)
        return nxt
    succ = step(st, state, width)
    return succ[0] if succ else None


def holds_wlp(b: BExpr, state: Mapping[str, int], width: int) -> bool:
    """Evaluate a wlp result, reading ``x@k`` symbols universally."""
    univ = sorted(universal_symbols(b))
    for values in itertools.product(range(1 << width), repeat=len(univ)):
        env = dict(state)
        env.update(zip(univ, values))
        if not eval_bexpr(b, env, width):
            return False
    return True


__all__ = [
    "Relation", "compose", "contains", "expand_flags", "feasible", "fresh_name",
    "holds_wlp", "identity", "is_satisfiable", "power", "primed", "step",
    "step_choice", "trace_rel", "trans_rel", "universal_symbols", "wlp",
]
