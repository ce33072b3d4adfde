"""Under-approximating loop acceleration.

A looping trace whose assignments are affine in an iteration count gets an
*accelerator*: a non-branching path that picks a count ``i``, checks the
body's guards at the first and last iteration, bounds ``i`` so that no
affine update wraps, and applies the closed forms.  Before an accelerator is
attached, the trace's final edge is forked into ``[overflow]`` and
``[!overflow]`` so that the non-wrapping iterations form a trace of their
own, which the accelerator then subsumes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .bmc import back_edges, natural_loops
from .frontend.lang import (Add, And, Assign, Assume, BConst, Cfa, CfaBuilder,
                            Cmp, Const, Edge, Havoc, Mul, NoWrap, Not,
                            Overflow, Skip, Sub, Var, conj, free_vars, nnf,
                            subst)

DEFAULT_MAX_PATHS = 8


# ---------------------------------------------------------------------------
# Looping traces


@dataclass(frozen=True)
class LoopingTrace:
    head: int
    edges: tuple

    @property
    def stmts(self) -> tuple:
        return tuple(e.stmt for e in self.edges)

    def __str__(self):
        return "; ".join(str(s) for s in self.stmts)


def enumerate_looping_traces(cfa: Cfa, max_paths: int = DEFAULT_MAX_PATHS) -> tuple:
    """Simple head-to-head paths inside each natural loop.

    Returns ``(traces, warnings)``.  Paths are produced depth-first in edge
    order; at most ``max_paths`` per head are kept.
    """
    loops = natural_loops(cfa, back_edges(cfa))
    succ = cfa.successors_index()
    traces, warnings = [], []
    for head in sorted(loops):
        body = loops[head]
        found: list = []
        truncated = False
        stack = [(head, iter(succ[head]), [])]
        on_path = {head}
        while stack:
            v, it, path = stack[-1]
            for e in it:
                if e.dst not in body:
                    continue
                if e.dst == head:
                    if len(found) >= max_paths:
                        truncated = True
                        break
                    found.append(LoopingTrace(head, tuple(path + [e])))
                    continue
                if e.dst in on_path:
                    continue
                on_path.add(e.dst)
                stack.append((e.dst, iter(succ[e.dst]), path + [e]))
                break
            else:
                stack.pop()
                on_path.discard(v)
                continue
            if truncated:
                break
        if truncated:
            warnings.append(f"loop at {cfa.vertex_name(head)}: looping traces "
                            f"truncated at {max_paths}")
        traces.extend(found)
    return traces, warnings


# ---------------------------------------------------------------------------
# Closed forms


@dataclass(frozen=True)
class Affine:
    """``x' = x + sign * step * i``; ``step`` is a constant or invariant variable."""
    step: Union[Const, Var]
    sign: int

    def __str__(self):
        return f"Affine({'+' if self.sign > 0 else '-'}{self.step})"


@dataclass(frozen=True)
class Frozen:
    def __str__(self):
        return "Frozen"


@dataclass(frozen=True)
class ResetTo:
    """``x' = value`` after at least one iteration; ``value`` is loop-invariant."""
    value: object

    def __str__(self):
        return f"ResetTo({self.value})"


@dataclass(frozen=True)
class ClosedForm:
    entries: tuple  # ((var, Affine|Frozen|ResetTo), ...) in variable order

    def __getitem__(self, var):
        return dict(self.entries)[var]

    def affine(self) -> dict:
        return {v: k for v, k in self.entries if isinstance(k, Affine)}

    def resets(self) -> dict:
        return {v: k for v, k in self.entries if isinstance(k, ResetTo)}

    def __str__(self):
        return "{" + ", ".join(f"{v}: {k}" for v, k in self.entries) + "}"


@dataclass(frozen=True)
class Unsupported:
    reason: str
    stmt: object = None

    def __str__(self):
        return f"unsupported: {self.reason}" + (f" ({self.stmt})" if self.stmt is not None else "")


def assigned_vars(trace: LoopingTrace) -> set:
    return {s.var for s in trace.stmts if isinstance(s, (Assign, Havoc))}


def _is_invariant(e, assigned: set) -> bool:
    return not (free_vars(e) & assigned)


def solve_recurrence(trace: LoopingTrace, vars) -> Union[ClosedForm, Unsupported]:
    assigned = assigned_vars(trace)
    kinds: dict = {}
    for st in trace.stmts:
        if isinstance(st, Havoc):
            return Unsupported("nondeterministic assignment", st)
        if not isinstance(st, Assign):
            continue
        x, e = st.var, st.expr
        if x in kinds:
            return Unsupported("variable assigned twice", st)
        kind = _classify(x, e, assigned)
        if kind is None:
            return Unsupported("update is not x := x +/- c or a reset", st)
        kinds[x] = kind
    return ClosedForm(tuple((v, kinds.get(v, Frozen())) for v in vars))


def _classify(x: str, e, assigned: set):
    def step_ok(s):
        return isinstance(s, (Const, Var)) and _is_invariant(s, assigned)

    if e == Var(x):
        return Frozen()
    if isinstance(e, Add):
        for a, b in ((e.a, e.b), (e.b, e.a)):
            if a == Var(x) and step_ok(b):
                return Frozen() if b == Const(0) else Affine(b, +1)
    if isinstance(e, Sub) and e.a == Var(x) and step_ok(e.b):
        return Frozen() if e.b == Const(0) else Affine(e.b, -1)
    if _is_invariant(e, assigned):
        return ResetTo(e)
    return None


# ---------------------------------------------------------------------------
# Accelerator synthesis


class NonMonotoneGuard(Exception):
    def __init__(self, guard, reason: str):
        super().__init__(f"guard {guard} is not monotone: {reason}")
        self.guard = guard
        self.reason = reason


@dataclass
class Accelerator:
    head: int
    body: LoopingTrace
    counter: str
    closed_form: ClosedForm
    stmts: tuple
    beta_note: str

    def __str__(self):
        return "; ".join(str(s) for s in self.stmts)


def _guard_atoms(cond) -> list:
    c = nnf(cond)
    if isinstance(c, BConst):
        return [] if c.value else [c]
    atoms = list(c.args) if isinstance(c, And) else [c]
    return atoms


def _shift(x: str, kind: Affine, count):
    """``x +/- step * count`` as an expression; ``count`` is an Expr or None for 1."""
    amount = kind.step if count is None else (
        count if kind.step == Const(1) else Mul(kind.step, count))
    return Add(Var(x), amount) if kind.sign > 0 else Sub(Var(x), amount)


def _check_guard(atom, affine: dict, resets: dict, assigned: set) -> None:
    if not isinstance(atom, Cmp):
        if isinstance(atom, BConst):
            return
        raise NonMonotoneGuard(atom, "not a comparison")
    used = free_vars(atom)
    if used & set(resets):
        raise NonMonotoneGuard(atom, "mentions a reset variable")
    for side in (atom.a, atom.b):
        if isinstance(side, Var) and side.name in affine:
            continue
        if not _is_invariant(side, assigned):
            raise NonMonotoneGuard(atom, "operand is neither an affine variable nor invariant")
    if atom.op == "!=" and used & set(affine):
        raise NonMonotoneGuard(atom, "disequality over an updated variable")


def fresh_var(base: str, taken) -> str:
    taken = set(taken)
    if base not in taken:
        return base
    k = 1
    while f"{base}_{k}" in taken:
        k += 1
    return f"{base}_{k}"


def synth_accelerator(trace: LoopingTrace, cf: ClosedForm, counter: str = "i",
                      skip_edges=frozenset()) -> Accelerator:
    """Build the accelerator path for ``trace``.

    ``skip_edges`` lists edge occurrences whose guards are implied by the
    iteration bound (the ``[!overflow]`` fork edge) and are left out.
    """
    affine = cf.affine()
    resets = cf.resets()
    assigned = assigned_vars(trace)
    i = Var(counter)
    stmts: list = [Havoc(counter), Assume(Cmp(">", i, Const(0)))]

    done: set = set()  # variables assigned before the current position
    for e in trace.edges:
        st = e.stmt
        if isinstance(st, Assign):
            done.add(st.var)
            continue
        if not isinstance(st, Assume) or e.occ in skip_edges:
            continue
        if isinstance(st.cond, Overflow) or (isinstance(st.cond, Not)
                                             and isinstance(st.cond.arg, Overflow)):
            continue
        atoms = _guard_atoms(st.cond)
        for a in atoms:
            _check_guard(a, affine, resets, assigned)
        cond = conj(*atoms)
        if cond == BConst(True):
            continue
        first = {x: _shift(x, k, None) for x, k in affine.items() if x in done}
        last = {x: _shift(x, k, i if x in done else Sub(i, Const(1)))
                for x, k in affine.items()}
        at_first, at_last = subst(cond, first), subst(cond, last)
        stmts.append(Assume(at_first))
        if at_last != at_first:
            stmts.append(Assume(at_last))

    for x, k in affine.items():
        stmts.append(Assume(NoWrap(_shift(x, k, i))))
    for x, k in affine.items():
        stmts.append(Assign(x, _shift(x, k, i)))
    for x, k in resets.items():
        stmts.append(Assign(x, k.value))

    if affine:
        note = ("beta = min over " + ", ".join(sorted(affine))
                + " of the number of steps before the update wraps")
    else:
        note = "beta unbounded: no variable changes across iterations after the first"
    return Accelerator(trace.head, trace, counter, cf, tuple(stmts), note)


# ---------------------------------------------------------------------------
# Overflow fork and the accelerated CFA


def overflow_flag(cf: ClosedForm) -> Optional[Overflow]:
    terms = tuple((x, k.sign, k.step) for x, k in cf.affine().items())
    return Overflow(terms) if terms else None


@dataclass
class AcceleratedLoop:
    """One accelerated looping trace and everything the later stages need."""
    index: int
    accelerator: Accelerator
    symbol: tuple  # the accelerator's alphabet letter
    path_occs: tuple  # edge occurrences of the attached path
    pattern: tuple  # alphabet word of the (split) looping trace
    split_vertex: Optional[int] = None
    fork_occs: tuple = ()  # ([overflow] edge, [!overflow] edge)
    subsumes_trace: bool = True  # the trace is included in the accelerator
    restricted: bool = True  # its patterns take part in the restriction

    @property
    def blocks(self) -> bool:
        return self.subsumes_trace and self.restricted


@dataclass
class AcceleratedCfa:
    base: Cfa
    cfa: Cfa
    loops: list = field(default_factory=list)
    report: list = field(default_factory=list)  # (trace text, outcome text)
    warnings: list = field(default_factory=list)

    @property
    def fork_edges(self) -> list:
        return [occ for lp in self.loops for occ in lp.fork_occs]


def overflow_split(cfa: Cfa, trace: LoopingTrace, flag: Optional[Overflow],
                   retarget: Optional[int] = None) -> tuple:
    """Fork the trace's final edge through a new vertex ``u``.

    Returns ``(cfa, u, (overflow_occ, no_overflow_occ))``; without a flag the
    CFA is returned unchanged with ``u = None``.  ``retarget`` names the edge
    redirected into ``u`` when it is not the trace's final edge: for traces
    sharing a final edge the forks are chained, each new fork hanging off the
    previous fork's no-overflow edge.
    """
    if flag is None:
        return cfa, None, ()
    b = CfaBuilder.from_cfa(cfa)
    last = trace.edges[-1].occ if retarget is None else retarget
    u = b.vertex("u" if "u" not in b.names.values() else "")
    b.edges = [Edge(e.src, e.stmt, u, e.occ, e.symbol, e.tag) if e.occ == last else e
               for e in b.edges]
    e_ovf = b.add(u, Assume(flag), trace.head, tag="fork")
    e_ok = b.add(u, Assume(Not(flag)), trace.head, tag="fork")
    return b.build(cfa.warnings), u, (e_ovf.occ, e_ok.occ)


def _passes_other_head(trace: LoopingTrace, heads: set) -> bool:
    return any(e.dst in heads and e.dst != trace.head for e in trace.edges)


def accelerate_cfa(cfa: Cfa, max_paths: int = DEFAULT_MAX_PATHS) -> AcceleratedCfa:
    traces, warnings = enumerate_looping_traces(cfa, max_paths)
    heads = {t.head for t in traces} | set(natural_loops(cfa, back_edges(cfa)))
    # no-overflow fork edges already chained after each shared final edge
    chains: dict = {}

    result = AcceleratedCfa(cfa, cfa, warnings=list(warnings))
    cur = cfa
    taken_names = set(cfa.vars)
    for t in traces:
        label = f"{cfa.vertex_name(t.head)}: {t}"
        if _passes_other_head(t, heads):
            result.report.append((label, "skipped: passes through a nested loop"))
            continue
        cf = solve_recurrence(t, cfa.vars)
        if isinstance(cf, Unsupported):
            result.report.append((label, str(cf)))
            continue
        counter = fresh_var("i", taken_names)
        try:
            acc = synth_accelerator(t, cf, counter)
        except NonMonotoneGuard as exc:
            result.report.append((label, f"not accelerated: {exc}"))
            continue
        taken_names.add(counter)

        flag = overflow_flag(cf)
        chain = chains.setdefault(t.edges[-1].occ, [])
        cur, u, forks = overflow_split(cur, t, flag, chain[-1] if chain else None)
        k = len(result.loops)
        symbol = ("acc", k)
        b = CfaBuilder.from_cfa(cur)
        b.add_var(counter)
        src = t.head
        occs = []
        for n, st in enumerate(acc.stmts):
            last = n == len(acc.stmts) - 1
            dst = t.head if last else b.vertex()
            e = b.add(src, st, dst, symbol=symbol if last else None, tag="accel")
            occs.append(e.occ)
            src = dst
        cur = b.build(cur.warnings)
        pattern = tuple(e.symbol for e in t.edges)
        if forks:
            chain.append(forks[1])
        pattern += tuple(cur.edge_by_occ(occ).symbol for occ in chain)
        result.loops.append(AcceleratedLoop(k, acc, symbol, tuple(occs), pattern, u, forks))
        result.report.append((label, f"accelerated: {cf}; {acc}"))
    result.cfa = cur
    return result


__all__ = [
    "Accelerator", "AcceleratedCfa", "AcceleratedLoop", "Affine", "ClosedForm",
    "DEFAULT_MAX_PATHS", "Frozen", "LoopingTrace", "NonMonotoneGuard",
    "ResetTo", "Unsupported", "accelerate_cfa", "enumerate_looping_traces",
    "overflow_flag", "overflow_split", "solve_recurrence", "synth_accelerator",
]
