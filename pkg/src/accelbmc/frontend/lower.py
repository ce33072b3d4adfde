"""Lowering of the structured AST to a control flow automaton."""
from __future__ import annotations

from typing import Optional

from .lang import (Assign, Assume, BConst, Cfa, CfaBuilder, Havoc, Skip, Not,
                   TRUE)
from .parser import Program, SAssert, SAssign, SAssume, SIf, SSkip, SWhile


def lower(prog: Program) -> Cfa:
    """Lower ``prog`` to a CFA.

    Declarations become assignments (or havocs when no initializer is given)
    at the entry; every other variable starts at zero.  ``assert(B)`` becomes
    ``[!B]`` into a fresh error vertex plus ``[B]`` continuing.  A ``while``
    loop's body ends with the back edge into its head; ``while (true)`` has
    no guard edge at all.
    """
    b = CfaBuilder(prog.width)
    for d in prog.decls:
        b.add_var(d.name)
    b.init = b.vertex()
    stmts = [SAssign(d.name, None if d.nondet else d.init, d.line) for d in prog.decls]
    stmts.extend(prog.body)
    _block(b, stmts, b.init, None)
    warnings = []
    reach = _graph_reachable(b)
    for e in sorted(b.errors):
        if e not in reach:
            warnings.append(f"error vertex v{e} is syntactically unreachable")
    return b.build(warnings)


def _graph_reachable(b: CfaBuilder) -> set:
    seen = {b.init}
    work = [b.init]
    succ: dict = {}
    for e in b.edges:
        succ.setdefault(e.src, []).append(e.dst)
    while work:
        v = work.pop()
        for w in succ.get(v, ()):
            if w not in seen:
                seen.add(w)
                work.append(w)
    return seen


def _block(b: CfaBuilder, stmts: list, src: int, dst: Optional[int]) -> int:
    """Lower ``stmts`` starting at ``src``.  If ``dst`` is given, the block
    ends there; otherwise the final vertex is allocated and returned."""
    if not stmts:
        if dst is None or dst == src:
            return src
        b.add(src, Skip(), dst)
        return dst
    cur = src
    for k, s in enumerate(stmts):
        last = k == len(stmts) - 1
        cur = _stmt(b, s, cur, dst if last else None)
    return cur


def _stmt(b: CfaBuilder, s, src: int, dst: Optional[int]) -> int:
    def target() -> int:
        return b.vertex() if dst is None else dst

    if isinstance(s, SAssign):
        t = target()
        b.add(src, Havoc(s.var) if s.expr is None else Assign(s.var, s.expr), t)
        return t
    if isinstance(s, SSkip):
        t = target()
        b.add(src, Skip(), t)
        return t
    if isinstance(s, SAssume):
        t = target()
        b.add(src, Assume(s.cond), t)
        return t
    if isinstance(s, SAssert):
        err = b.vertex()
        b.errors.add(err)
        b.add(src, Assume(Not(s.cond)), err)
        t = target()
        b.add(src, Assume(s.cond), t)
        return t
    if isinstance(s, SIf):
        t = target()
        pos = TRUE if s.cond is None else s.cond
        neg = TRUE if s.cond is None else Not(s.cond)
        for guard, branch in ((pos, s.then), (neg, s.orelse)):
            if branch:
                mid = b.vertex()
                b.add(src, Assume(guard), mid)
                _block(b, branch, mid, t)
            else:
                b.add(src, Assume(guard), t)
        return t
    if isinstance(s, SWhile):
        head = src
        if s.cond is None or s.cond == BConst(True):
            if s.cond is None:
                # nondeterministic loop: may exit at every iteration
                t = target()
                _loop_body(b, s.body, head, TRUE)
                b.add(head, Assume(TRUE), t)
                return t
            _block(b, s.body, head, head) if s.body else b.add(head, Skip(), head)
            # nothing follows an infinite loop; return a fresh dead vertex
            return target()
        _loop_body(b, s.body, head, s.cond)
        t = target()
        b.add(head, Assume(Not(s.cond)), t)
        return t
    raise TypeError(f"unknown statement {s!r}")


def _loop_body(b: CfaBuilder, body: list, head: int, cond) -> None:
    if not body:
        b.add(head, Assume(cond), head)
        return
    mid = b.vertex()
    b.add(head, Assume(cond), mid)
    _block(b, body, mid, head)


def compile_source(src, width=None) -> Cfa:
    from .parser import parse
    return lower(parse(src, width))
