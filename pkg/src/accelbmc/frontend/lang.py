"""Core data types: expressions, statements, edges and control flow automata.

All arithmetic is unsigned and modular in a single program-wide bit width.
Expressions are immutable and hashable so they can be shared freely between
CFAs, formulas and caches.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union


class EvalError(Exception):
    """Raised when an expression cannot be evaluated concretely."""


# ---------------------------------------------------------------------------
# Bit-vector expressions


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Add:
    a: "Expr"
    b: "Expr"

    def __str__(self):
        return f"{self.a}+{_paren(self.b)}"


@dataclass(frozen=True)
class Sub:
    a: "Expr"
    b: "Expr"

    def __str__(self):
        return f"{self.a}-{_paren(self.b)}"


@dataclass(frozen=True)
class Mul:
    a: "Expr"
    b: "Expr"

    def __str__(self):
        return f"{_paren(self.a)}*{_paren(self.b)}"


@dataclass(frozen=True)
class Nondet:
    def __str__(self):
        return "*"


@dataclass(frozen=True)
class Ite:
    cond: "BExpr"
    a: "Expr"
    b: "Expr"

    def __str__(self):
        return f"({self.cond} ? {self.a} : {self.b})"


Expr = Union[Var, Const, Add, Sub, Mul, Nondet, Ite]


def _paren(e) -> str:
    if isinstance(e, (Add, Sub, Ite)):
        return f"({e})"
    return str(e)


# ---------------------------------------------------------------------------
# Boolean expressions

CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
NEGATED_CMP = {"==": "!=", "!=": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}
SWAPPED_CMP = {"==": "==", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}


@dataclass(frozen=True)
class BConst:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Cmp:
    op: str
    a: Expr
    b: Expr

    def __str__(self):
        return f"{self.a}{self.op}{self.b}"


@dataclass(frozen=True)
class And:
    args: tuple

    def __str__(self):
        if not self.args:
            return "true"
        return " && ".join(_bparen(a) for a in self.args)


@dataclass(frozen=True)
class Or:
    args: tuple

    def __str__(self):
        if not self.args:
            return "false"
        return " || ".join(_bparen(a) for a in self.args)


@dataclass(frozen=True)
class Not:
    arg: "BExpr"

    def __str__(self):
        if isinstance(self.arg, (Cmp, And, Or)):
            return f"!({self.arg})"
        return f"!{self.arg}"


@dataclass(frozen=True)
class BVar:
    """Free propositional symbol (path selectors, reach literals)."""

    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Overflow:
    """Post-hoc wraparound flag of one loop iteration.

    ``terms`` holds ``(var, sign, step)`` triples: ``var`` was updated by
    ``var := var + step`` (sign +1) or ``var := var - step`` (sign -1) and
    ``step`` does not change inside the iteration.  The flag is evaluated on
    the state *after* the updates.
    """

    terms: tuple

    def __str__(self):
        return "overflow(" + ",".join(t[0] for t in self.terms) + ")"

    def desugar(self, width: int) -> "BExpr":
        mask = (1 << width) - 1
        parts = []
        for name, sign, step in self.terms:
            if sign > 0:
                # x' = x + c wrapped  iff  x' < c
                parts.append(Cmp("<", Var(name), step))
            else:
                # x' = x - c wrapped  iff  x' > mask - c
                parts.append(Cmp(">", Var(name), Sub(Const(mask), step)))
        return Or(tuple(parts))


@dataclass(frozen=True)
class NoWrap:
    """True iff the exact (unbounded integer) value of ``expr`` lies in
    ``[0, 2^width)``.  Leaves are read as unsigned values."""

    expr: Expr

    def __str__(self):
        return f"fits({self.expr})"


BExpr = Union[BConst, Cmp, And, Or, Not, BVar, Overflow, NoWrap]

TRUE = BConst(True)
FALSE = BConst(False)


def _bparen(b) -> str:
    if isinstance(b, (And, Or)):
        return f"({b})"
    return str(b)


def conj(*args) -> BExpr:
    flat = []
    for a in args:
        if isinstance(a, And):
            flat.extend(a.args)
        elif a == TRUE:
            continue
        elif a == FALSE:
            return FALSE
        else:
            flat.append(a)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*args) -> BExpr:
    flat = []
    for a in args:
        if isinstance(a, Or):
            flat.extend(a.args)
        elif a == FALSE:
            continue
        elif a == TRUE:
            return TRUE
        else:
            flat.append(a)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def negate(b: BExpr) -> BExpr:
    """Negation pushed through connectives (negation normal form)."""
    if isinstance(b, BConst):
        return BConst(not b.value)
    if isinstance(b, Cmp):
        return Cmp(NEGATED_CMP[b.op], b.a, b.b)
    if isinstance(b, And):
        return disj(*(negate(a) for a in b.args))
    if isinstance(b, Or):
        return conj(*(negate(a) for a in b.args))
    if isinstance(b, Not):
        return b.arg
    return Not(b)


def nnf(b: BExpr) -> BExpr:
    if isinstance(b, Not):
        return negate(nnf(b.arg))
    if isinstance(b, And):
        return conj(*(nnf(a) for a in b.args))
    if isinstance(b, Or):
        return disj(*(nnf(a) for a in b.args))
    return b


# ---------------------------------------------------------------------------
# Generic traversals


def free_vars(e) -> set:
    out: set = set()
    _collect(e, out)
    return out


def _collect(e, out):
    if isinstance(e, Var):
        out.add(e.name)
    elif isinstance(e, (Add, Sub, Mul)):
        _collect(e.a, out)
        _collect(e.b, out)
    elif isinstance(e, Ite):
        _collect(e.cond, out)
        _collect(e.a, out)
        _collect(e.b, out)
    elif isinstance(e, Cmp):
        _collect(e.a, out)
        _collect(e.b, out)
    elif isinstance(e, (And, Or)):
        for a in e.args:
            _collect(a, out)
    elif isinstance(e, Not):
        _collect(e.arg, out)
    elif isinstance(e, Overflow):
        for name, _, step in e.terms:
            out.add(name)
            _collect(step, out)
    elif isinstance(e, NoWrap):
        _collect(e.expr, out)


def bool_vars(e) -> set:
    out: set = set()

    def walk(x):
        if isinstance(x, BVar):
            out.add(x.name)
        elif isinstance(x, (And, Or)):
            for a in x.args:
                walk(a)
        elif isinstance(x, Not):
            walk(x.arg)
        elif isinstance(x, Ite):
            walk(x.cond)
            walk(x.a)
            walk(x.b)
        elif isinstance(x, Cmp):
            walk(x.a)
            walk(x.b)
        elif isinstance(x, (Add, Sub, Mul)):
            walk(x.a)
            walk(x.b)

    walk(e)
    return out


def subst(e, mapping: Mapping[str, Expr]):
    """Simultaneous substitution of variables (bit-vector and boolean)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, (Const, Nondet, BConst)):
        return e
    if isinstance(e, BVar):
        r = mapping.get(e.name)
        return r if r is not None else e
    if isinstance(e, Add):
        return Add(subst(e.a, mapping), subst(e.b, mapping))
    if isinstance(e, Sub):
        return Sub(subst(e.a, mapping), subst(e.b, mapping))
    if isinstance(e, Mul):
        return Mul(subst(e.a, mapping), subst(e.b, mapping))
    if isinstance(e, Ite):
        return Ite(subst(e.cond, mapping), subst(e.a, mapping), subst(e.b, mapping))
    if isinstance(e, Cmp):
        return Cmp(e.op, subst(e.a, mapping), subst(e.b, mapping))
    if isinstance(e, And):
        return And(tuple(subst(a, mapping) for a in e.args))
    if isinstance(e, Or):
        return Or(tuple(subst(a, mapping) for a in e.args))
    if isinstance(e, Not):
        return Not(subst(e.arg, mapping))
    if isinstance(e, Overflow):
        # The flag talks about concrete variables; substituting a variable by
        # a non-variable expression requires desugaring first.
        terms = []
        for name, sign, step in e.terms:
            tgt = mapping.get(name, Var(name))
            if not isinstance(tgt, Var):
                raise TypeError("desugar Overflow before substituting non-variables")
            terms.append((tgt.name, sign, subst(step, mapping)))
        return Overflow(tuple(terms))
    if isinstance(e, NoWrap):
        return NoWrap(subst(e.expr, mapping))
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# Concrete evaluation


def eval_expr(e: Expr, env: Mapping[str, int], width: int) -> int:
    mask = (1 << width) - 1
    if isinstance(e, Var):
        try:
            return env[e.name] & mask
        except KeyError:
            raise EvalError(f"unbound variable {e.name}") from None
    if isinstance(e, Const):
        return e.value & mask
    if isinstance(e, Add):
        return (eval_expr(e.a, env, width) + eval_expr(e.b, env, width)) & mask
    if isinstance(e, Sub):
        return (eval_expr(e.a, env, width) - eval_expr(e.b, env, width)) & mask
    if isinstance(e, Mul):
        return (eval_expr(e.a, env, width) * eval_expr(e.b, env, width)) & mask
    if isinstance(e, Ite):
        if eval_bexpr(e.cond, env, width):
            return eval_expr(e.a, env, width)
        return eval_expr(e.b, env, width)
    if isinstance(e, Nondet):
        raise EvalError("nondet(*) has no concrete value")
    raise TypeError(f"not an expression: {e!r}")


def eval_exact(e: Expr, env: Mapping[str, int], width: int) -> int:
    """Value of ``e`` over unbounded integers (leaves read as unsigned)."""
    mask = (1 << width) - 1
    if isinstance(e, Var):
        return env[e.name] & mask
    if isinstance(e, Const):
        return e.value & mask
    if isinstance(e, Add):
        return eval_exact(e.a, env, width) + eval_exact(e.b, env, width)
    if isinstance(e, Sub):
        return eval_exact(e.a, env, width) - eval_exact(e.b, env, width)
    if isinstance(e, Mul):
        return eval_exact(e.a, env, width) * eval_exact(e.b, env, width)
    if isinstance(e, Ite):
        if eval_bexpr(e.cond, env, width):
            return eval_exact(e.a, env, width)
        return eval_exact(e.b, env, width)
    raise EvalError(f"cannot evaluate {e} exactly")


def _compare(op: str, x: int, y: int) -> bool:
    if op == "==":
        return x == y
    if op == "!=":
        return x != y
    if op == "<":
        return x < y
    if op == "<=":
        return x <= y
    if op == ">":
        return x > y
    if op == ">=":
        return x >= y
    raise ValueError(op)


def eval_bexpr(b: BExpr, env: Mapping, width: int) -> bool:
    if isinstance(b, BConst):
        return b.value
    if isinstance(b, Cmp):
        return _compare(b.op, eval_expr(b.a, env, width), eval_expr(b.b, env, width))
    if isinstance(b, And):
        return all(eval_bexpr(a, env, width) for a in b.args)
    if isinstance(b, Or):
        return any(eval_bexpr(a, env, width) for a in b.args)
    if isinstance(b, Not):
        return not eval_bexpr(b.arg, env, width)
    if isinstance(b, BVar):
        try:
            return bool(env[b.name])
        except KeyError:
            raise EvalError(f"unbound proposition {b.name}") from None
    if isinstance(b, Overflow):
        return eval_bexpr(b.desugar(width), env, width)
    if isinstance(b, NoWrap):
        return 0 <= eval_exact(b.expr, env, width) < (1 << width)
    raise TypeError(f"not a boolean expression: {b!r}")


# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr

    def __str__(self):
        return f"{self.var}:={self.expr}"


@dataclass(frozen=True)
class Havoc:
    var: str

    def __str__(self):
        return f"{self.var}:=*"


@dataclass(frozen=True)
class Assume:
    cond: BExpr

    def __str__(self):
        return f"[{self.cond}]"


@dataclass(frozen=True)
class Skip:
    def __str__(self):
        return "skip"


Stmt = Union[Assign, Havoc, Assume, Skip]


def stmt_vars(st: Stmt) -> set:
    if isinstance(st, Assign):
        return {st.var} | free_vars(st.expr)
    if isinstance(st, Havoc):
        return {st.var}
    if isinstance(st, Assume):
        return free_vars(st.cond)
    return set()


# ---------------------------------------------------------------------------
# Control flow automata


@dataclass(frozen=True)
class Edge:
    """A statement occurrence.

    ``occ`` is unique within a CFA.  ``symbol`` is the trace-automaton
    alphabet letter emitted when the edge is traversed (``None`` for edges
    that are part of a larger atomic symbol or pure bookkeeping).  ``tag``
    marks edges introduced by later pipeline stages, for rendering only.
    """

    src: int
    stmt: Stmt
    dst: int
    occ: int
    symbol: Optional[tuple] = None
    tag: str = ""


@dataclass(frozen=True)
class Cfa:
    num_vertices: int
    edges: tuple
    init: int
    errors: frozenset
    vars: tuple
    width: int
    warnings: tuple = ()
    names: tuple = ()  # optional vertex display names, index-aligned

    @property
    def vertices(self) -> range:
        return range(self.num_vertices)

    def out_edges(self, v: int) -> list:
        return [e for e in self.edges if e.src == v]

    def successors_index(self) -> dict:
        idx: dict = {v: [] for v in self.vertices}
        for e in self.edges:
            idx[e.src].append(e)
        return idx

    def edge_by_occ(self, occ: int) -> Edge:
        for e in self.edges:
            if e.occ == occ:
                return e
        raise KeyError(occ)

    def next_occ(self) -> int:
        return max((e.occ for e in self.edges), default=-1) + 1

    def vertex_name(self, v: int) -> str:
        if self.names and v < len(self.names) and self.names[v]:
            return self.names[v]
        return f"v{v}"


def symbol_of(e: Edge):
    return e.symbol


def make_edges(specs: Iterable, start_occ: int = 0, tag: str = "") -> list:
    """Build edges from ``(src, stmt, dst)`` triples with fresh occurrences."""
    out = []
    for k, (src, st, dst) in enumerate(specs):
        occ = start_occ + k
        out.append(Edge(src, st, dst, occ, ("occ", occ), tag))
    return out


@dataclass
class CfaBuilder:
    """Mutable helper used by the lowering and the transformations."""

    width: int
    vars: list = field(default_factory=list)
    num_vertices: int = 0
    edges: list = field(default_factory=list)
    errors: set = field(default_factory=set)
    init: int = 0
    next_occ: int = 0
    names: dict = field(default_factory=dict)

    @classmethod
    def from_cfa(cls, cfa: Cfa) -> "CfaBuilder":
        b = cls(cfa.width, list(cfa.vars), cfa.num_vertices, list(cfa.edges),
                set(cfa.errors), cfa.init, cfa.next_occ())
        b.names = {v: n for v, n in enumerate(cfa.names) if n}
        return b

    def vertex(self, name: str = "") -> int:
        v = self.num_vertices
        self.num_vertices += 1
        if name:
            self.names[v] = name
        return v

    def add(self, src: int, stmt: Stmt, dst: int, *, symbol="auto", tag: str = "") -> Edge:
        occ = self.next_occ
        self.next_occ += 1
        if symbol == "auto":
            symbol = ("occ", occ)
        e = Edge(src, stmt, dst, occ, symbol, tag)
        self.edges.append(e)
        return e

    def add_var(self, name: str):
        if name not in self.vars:
            self.vars.append(name)

    def build(self, warnings=()) -> Cfa:
        names = tuple(self.names.get(v, "") for v in range(self.num_vertices))
        if not any(names):
            names = ()
        return Cfa(self.num_vertices, tuple(self.edges), self.init,
                   frozenset(self.errors), tuple(self.vars), self.width,
                   tuple(warnings), names)
