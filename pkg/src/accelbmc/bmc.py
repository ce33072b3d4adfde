"""Bounded model checking of CFAs.

The CFA is unwound into a DAG whose nodes pair a vertex with one traversal
counter per loop head.  Taking a back edge increments its head's counter;
leaving a loop resets it.  A back edge that would push a counter beyond ``k``
becomes an *unwinding marker* instead of an edge.  The DAG is encoded into a
single constraint system with a reach literal per node; the error query asks
for a reachable error-vertex copy, the unwinding query for a reachable
marker whose back edge could still be taken.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .frontend.lang import (Add, And, Assign, Assume, BConst, BVar, Cfa, Cmp,
                            Const, Edge, Havoc, Ite, Mul, Not, Or, Skip, Sub,
                            Var, _compare, conj, disj, free_vars, subst)
from .satcore import Blaster, Cnf, ResourceOut, SatResult, export_dimacs, solve
from .satcore.bitblast import _bit_value
from .semantics import expand_flags, step_choice

SAFE, UNSAFE, UNKNOWN, TIMEOUT = "SAFE", "UNSAFE", "UNKNOWN", "TIMEOUT"


# ---------------------------------------------------------------------------
# Loop structure


def back_edges(cfa: Cfa) -> list:
    """Back edges of a depth-first search from the initial vertex.

    Successors are explored in edge order, so the result is deterministic.
    Every cycle reachable from the initial vertex contains one of them.
    """
    succ = cfa.successors_index()
    state = {cfa.init: 1}  # 1 on stack, 2 finished
    stack = [(cfa.init, iter(succ[cfa.init]))]
    out = []
    while stack:
        v, it = stack[-1]
        for e in it:
            s = state.get(e.dst)
            if s is None:
                state[e.dst] = 1
                stack.append((e.dst, iter(succ[e.dst])))
                break
            if s == 1:
                out.append(e)
        else:
            state[v] = 2
            stack.pop()
    return out


def natural_loops(cfa: Cfa, backs: list) -> dict:
    """Map each loop head to the union of the natural loops of its back edges."""
    pred: dict = {v: [] for v in cfa.vertices}
    for e in cfa.edges:
        pred[e.dst].append(e.src)
    loops: dict = {}
    for e in backs:
        body = loops.setdefault(e.dst, {e.dst})
        work = [e.src]
        while work:
            v = work.pop()
            if v in body:
                continue
            body.add(v)
            work.extend(pred[v])
    return {h: frozenset(b) for h, b in loops.items()}


# ---------------------------------------------------------------------------
# Unwinding


@dataclass(frozen=True)
class DagNode:
    vertex: int
    counters: tuple


@dataclass(frozen=True)
class DagEdge:
    src: int
    dst: int
    edge: Edge


@dataclass(frozen=True)
class UnwindMarker:
    """A back edge taken once more than the bound allows."""
    src: int
    edge: Edge


@dataclass
class UnwoundDag:
    cfa: Cfa
    k: int
    nodes: list  # topologically ordered; nodes[0] is the entry
    edges: list
    markers: list
    heads: tuple
    back_occs: frozenset

    def incoming(self) -> list:
        inc: list = [[] for _ in self.nodes]
        for d, de in enumerate(self.edges):
            inc[de.dst].append(d)
        return inc

    def outgoing(self) -> list:
        out: list = [[] for _ in self.nodes]
        for d, de in enumerate(self.edges):
            out[de.src].append(d)
        return out

    def error_nodes(self) -> list:
        return [n for n, node in enumerate(self.nodes) if node.vertex in self.cfa.errors]


def unwind(cfa: Cfa, k: int) -> UnwoundDag:
    if k < 0:
        raise ValueError("unwinding bound must be non-negative")
    backs = back_edges(cfa)
    loops = natural_loops(cfa, backs)
    heads = tuple(sorted(loops))
    hpos = {h: i for i, h in enumerate(heads)}
    back_occs = frozenset(e.occ for e in backs)
    succ = cfa.successors_index()

    root = DagNode(cfa.init, (0,) * len(heads))
    ids = {root: 0}
    order = [root]
    raw_edges, raw_markers = [], []
    work = [root]
    while work:
        node = work.pop()
        n = ids[node]
        for e in succ[node.vertex]:
            counters = list(node.counters)
            if e.occ in back_occs:
                p = hpos[e.dst]
                if counters[p] >= k:
                    raw_markers.append((n, e))
                    continue
                counters[p] += 1
            for h, p in hpos.items():
                if e.dst not in loops[h]:
                    counters[p] = 0
            nxt = DagNode(e.dst, tuple(counters))
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
                work.append(nxt)
            raw_edges.append((n, ids[nxt], e))

    # topological renumbering (reverse post-order from the entry)
    out: dict = {}
    for s, d, _ in raw_edges:
        out.setdefault(s, []).append(d)
    seen, post = set(), []
    stack = [(0, iter(out.get(0, ())))]
    seen.add(0)
    while stack:
        n, it = stack[-1]
        for d in it:
            if d not in seen:
                seen.add(d)
                stack.append((d, iter(out.get(d, ()))))
                break
        else:
            post.append(n)
            stack.pop()
    topo = list(reversed(post))
    renum = {old: new for new, old in enumerate(topo)}
    nodes = [order[old] for old in topo]
    edges = sorted((DagEdge(renum[s], renum[d], e) for s, d, e in raw_edges),
                   key=lambda de: (de.src, de.edge.occ, de.dst))
    markers = sorted((UnwindMarker(renum[s], e) for s, e in raw_markers),
                     key=lambda m: (m.src, m.edge.occ))
    return UnwoundDag(cfa, k, nodes, edges, markers, heads, back_occs)


# ---------------------------------------------------------------------------
# Encoding


def _linear(e, mask: int) -> Optional[dict]:
    if isinstance(e, Var):
        return {e.name: 1}
    if isinstance(e, Const):
        return {"": e.value & mask}
    if isinstance(e, (Add, Sub)):
        a, b = _linear(e.a, mask), _linear(e.b, mask)
        if a is None or b is None:
            return None
        sign = 1 if isinstance(e, Add) else -1
        out = dict(a)
        for n, c in b.items():
            out[n] = (out.get(n, 0) + sign * c) & mask
        return out
    if isinstance(e, Mul):
        a, b = _linear(e.a, mask), _linear(e.b, mask)
        if a is None or b is None:
            return None
        for x, y in ((a, b), (b, a)):
            if set(x) <= {""}:
                c = x.get("", 0)
                return {n: (c * v) & mask for n, v in y.items()}
        return None
    return None


def _rebuild(lin: dict, mask: int):
    expr = None
    for name in sorted(n for n in lin if n):
        c = lin[name] & mask
        if c == 0:
            continue
        if expr is None:
            expr = Var(name) if c == 1 else Mul(Const(c), Var(name))
        elif c == 1:
            expr = Add(expr, Var(name))
        elif c == mask:
            expr = Sub(expr, Var(name))
        else:
            expr = Add(expr, Mul(Const(c), Var(name)))
    k = lin.get("", 0) & mask
    if expr is None:
        return Const(k)
    if k == 0:
        return expr
    if k > mask // 2:
        return Sub(expr, Const(mask + 1 - k))
    return Add(expr, Const(k))


LIFT_BUDGET = 256
LIFT_DEPTH = 32  # nested case splits before falling back to a plain comparison
_MIRROR = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "==": "==", "!=": "!="}


def _canonical_cmp(op: str, a, b, mask: int):
    """Comparison with linear equalities rewritten to ``sum == constant``.

    Both sides of ``==``/``!=`` are moved into one linear form whose sign is
    fixed, so equal conditions reached along different paths become the same
    expression (and hence the same gate).
    """
    if isinstance(a, Const) and not isinstance(b, Const):
        op, a, b = _MIRROR[op], b, a
    # unsigned comparisons against the ends of the range are (dis)equalities
    if isinstance(b, Const):
        c = b.value & mask
        if op in (">", "<=") and c == 0:
            op = "!=" if op == ">" else "=="
        elif op in ("<", ">=") and c == 1:
            op, b = ("==" if op == "<" else "!="), Const(0)
        elif op in (">", "<=") and c == mask - 1:
            op, b = ("==" if op == ">" else "!="), Const(mask)
    la, lb = _linear(a, mask), _linear(b, mask)
    if la is None or lb is None:
        return Cmp(op, a, b)
    if set(la) <= {""} and set(lb) <= {""}:
        return BConst(_compare(op, la.get("", 0), lb.get("", 0)))
    if op not in ("==", "!="):
        return Cmp(op, a, b)
    diff = dict(la)
    for n, c in lb.items():
        diff[n] = (diff.get(n, 0) - c) & mask
    const = diff.pop("", 0)
    terms = {n: c for n, c in diff.items() if c}
    if not terms:
        return BConst((const == 0) == (op == "=="))
    lead = terms[min(terms)]
    if lead > mask // 2:
        terms = {n: (-c) & mask for n, c in terms.items()}
        const = (-const) & mask
    return Cmp(op, _rebuild(terms, mask), Const((-const) & mask))


def _merged_names(e, cases: dict) -> list:
    return sorted(n for n in free_vars(e) if n in cases)


def _lift(b, cases: dict, mask: int, budget: int = LIFT_BUDGET):
    """Push comparisons over merged values into the merge's case split."""
    if isinstance(b, Cmp):
        return _lift_cmp(b.op, b.a, b.b, cases, mask, [budget]) or \
            _canonical_cmp(b.op, b.a, b.b, mask)
    if isinstance(b, And):
        return conj(*(_lift(a, cases, mask, budget) for a in b.args))
    if isinstance(b, Or):
        return disj(*(_lift(a, cases, mask, budget) for a in b.args))
    if isinstance(b, Not):
        inner = _lift(b.arg, cases, mask, budget)
        return BConst(not inner.value) if isinstance(inner, BConst) else Not(inner)
    return b


def _lift_cmp(op, a, b, cases, mask, budget, depth=0):
    if depth > LIFT_DEPTH or _linear(a, mask) is None or _linear(b, mask) is None:
        return None
    names = _merged_names(a, cases) + _merged_names(b, cases)
    if not names:
        budget[0] -= 1
        if budget[0] < 0:
            return None
        return _canonical_cmp(op, a, b, mask)
    v = names[0]

    def branch(opt):
        sa = _rebuild(_linear(subst(a, {v: opt}), mask), mask)
        sb = _rebuild(_linear(subst(b, {v: opt}), mask), mask)
        return _lift_cmp(op, sa, sb, cases, mask, budget, depth + 1)

    options = cases[v]
    res = branch(options[-1][1])
    if res is None:
        return None
    for cond, opt in reversed(options[:-1]):
        here = branch(opt)
        if here is None:
            return None
        if here != res:
            res = disj(conj(cond, here), conj(_negated(cond), res))
    return res


def _negated(b):
    return b.arg if isinstance(b, Not) else Not(b)


@dataclass
class SsaFormula:
    """Constraint system for an unwound DAG.

    Node ``n`` is reached iff ``reach[n]`` holds; ``values[n]`` gives every
    program variable at that node as an expression over SSA names, whose
    definitions live in ``defs``/``bdefs``.  Free names are the nondet
    choices ``x!d`` of havoc edges and the branch selectors ``s#d``.
    """
    dag: UnwoundDag
    width: int
    defs: dict
    bdefs: dict
    reach: list
    values: list
    taken: list
    havocs: dict  # dag edge index -> (variable, free symbol name)
    order: list = field(default_factory=list)  # definitions in creation order
    error_lits: list = field(default_factory=list)  # (node, literal)
    violation_lits: list = field(default_factory=list)  # (marker, literal)


def encode(dag: UnwoundDag) -> SsaFormula:
    cfa = dag.cfa
    w = cfa.width
    mask = (1 << w) - 1
    defs: dict = {}
    bdefs: dict = {}
    inc = dag.incoming()
    outdeg = [len(o) for o in dag.outgoing()]
    reach: list = [None] * len(dag.nodes)
    values: list = [None] * len(dag.nodes)
    taken: list = [None] * len(dag.edges)
    after: list = [None] * len(dag.edges)
    havocs: dict = {}
    order: list = []

    def define(name, e, boolean=False):
        (bdefs if boolean else defs)[name] = e
        order.append((boolean, name))

    def norm(e, name_hint: str):
        lin = _linear(e, mask)
        if lin is not None:
            return _rebuild(lin, mask)
        define(name_hint, e)
        return Var(name_hint)

    cases: dict = {}  # merged name -> [(selector literal, option), ..., (None, last)]

    def guard_of(stmt, env):
        if isinstance(stmt, Assume):
            return _lift(subst(expand_flags(stmt.cond, w), env), cases, mask)
        return BConst(True)

    by_src: list = [[] for _ in dag.nodes]
    for d, de in enumerate(dag.edges):
        by_src[de.src].append(d)

    for n in range(len(dag.nodes)):
        if n == 0:
            reach[n] = BConst(True)
            values[n] = {v: Const(0) for v in cfa.vars}
        else:
            ins = inc[n]
            if not ins:
                reach[n] = BConst(False)
                values[n] = {v: Const(0) for v in cfa.vars}
            else:
                reach[n] = BVar(f"r#{n}")
                define(f"r#{n}", disj(*(taken[d] for d in ins)), True)
                env = {}
                for v in cfa.vars:
                    options = [after[d][v] for d in ins]
                    if all(o == options[0] for o in options):
                        env[v] = options[0]
                        continue
                    expr = options[-1]
                    for d, o in zip(reversed(ins[:-1]), reversed(options[:-1])):
                        expr = Ite(taken[d], o, expr)
                    name = f"{v}#{n}"
                    define(name, expr)
                    cases[name] = [(taken[d], o) for d, o in zip(ins[:-1], options[:-1])]
                    cases[name].append((None, options[-1]))
                    env[v] = Var(name)
                values[n] = env
        env = values[n]
        for d in by_src[n]:
            stmt = dag.edges[d].edge.stmt
            parts = [reach[n], guard_of(stmt, env)]
            if outdeg[n] > 1:
                parts.append(BVar(f"s#{d}"))
            name = f"t#{d}"
            define(name, conj(*parts), True)
            taken[d] = BVar(name)
            nxt = dict(env)
            if isinstance(stmt, Assign):
                nxt[stmt.var] = norm(subst(stmt.expr, env), f"{stmt.var}={d}")
            elif isinstance(stmt, Havoc):
                sym = f"{stmt.var}!{d}"
                havocs[d] = (stmt.var, sym)
                nxt[stmt.var] = Var(sym)
            elif not isinstance(stmt, (Assume, Skip)):
                raise TypeError(f"unknown statement {stmt!r}")
            after[d] = nxt

    ssa = SsaFormula(dag, w, defs, bdefs, reach, values, taken, havocs, order)
    ssa.error_lits = [(n, reach[n]) for n in dag.error_nodes()]
    for m in dag.markers:
        ssa.violation_lits.append(
            (m, conj(reach[m.src], guard_of(m.edge.stmt, values[m.src]))))
    return ssa


# ---------------------------------------------------------------------------
# Counterexamples


class ReplayError(Exception):
    """A counterexample does not follow the CFA's structure."""


@dataclass
class Counterexample:
    """A concrete error trace.

    ``edges`` are edge occurrences from the initial vertex; ``choices[i]`` is
    the value picked by the i-th edge when it is a havoc (else ``None``);
    ``states[i]`` is the state before the i-th edge (the last entry is the
    final state).
    """
    edges: tuple
    choices: tuple
    states: tuple = ()

    def to_json(self, cfa: Cfa) -> dict:
        steps = []
        for occ, ch, st in zip(self.edges, self.choices, self.states):
            e = cfa.edge_by_occ(occ)
            steps.append({"edge": occ, "from": cfa.vertex_name(e.src),
                          "stmt": str(e.stmt), "choice": ch, "state": st})
        return {"steps": steps, "final": self.states[-1] if self.states else None}


def replay(cfa: Cfa, cex: Counterexample) -> bool:
    """True iff following ``cex`` concretely ends in an error vertex."""
    return run_trace(cfa, cex)[0]


def run_trace(cfa: Cfa, cex: Counterexample) -> tuple:
    """Interpret ``cex``; return ``(reaches_error, states)``.

    Raises :class:`ReplayError` when the edges do not form a path from the
    initial vertex.  A blocked assumption ends the replay unsuccessfully.
    """
    if len(cex.choices) != len(cex.edges):
        raise ReplayError("choices and edges differ in length")
    state = {v: 0 for v in cfa.vars}
    cur = cfa.init
    states = [dict(state)]
    for occ, ch in zip(cex.edges, cex.choices):
        try:
            e = cfa.edge_by_occ(occ)
        except KeyError as exc:
            raise ReplayError(f"no edge with occurrence {occ}") from exc
        if e.src != cur:
            raise ReplayError(f"edge {occ} leaves {cfa.vertex_name(e.src)}, "
                              f"trace is at {cfa.vertex_name(cur)}")
        if isinstance(e.stmt, Havoc) and ch is None:
            raise ReplayError(f"edge {occ} is a havoc without a chosen value")
        nxt = step_choice(e.stmt, state, cfa.width, ch)
        if nxt is None:
            return False, tuple(states)
        state = nxt
        cur = e.dst
        states.append(dict(state))
    return cur in cfa.errors, tuple(states)


# ---------------------------------------------------------------------------
# Checking


@dataclass
class SolverOptions:
    seed: int = 0
    deadline: Optional[float] = None  # time.monotonic() value
    conflict_budget: int = 10_000_000
    external: Optional[str] = None
    dimacs_path: Optional[str] = None

    def run(self, cnf: Cnf) -> SatResult:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ResourceOut("deadline exceeded")
        if self.external:
            from .satcore import solve_external
            remaining = None if self.deadline is None else max(0.1, self.deadline - time.monotonic())
            return solve_external(cnf, self.external, remaining)
        return solve(cnf, seed=self.seed, conflict_budget=self.conflict_budget,
                     deadline=self.deadline)


@dataclass
class Verdict:
    kind: str  # SAFE | UNSAFE | UNKNOWN | TIMEOUT
    k: Optional[int] = None
    cex: Optional[Counterexample] = None
    live_back_edges: tuple = ()
    reason: str = ""
    stats: dict = field(default_factory=dict)

    def __str__(self):
        return self.kind


class BoundExhausted(Exception):
    def __init__(self, kmax: int):
        super().__init__(f"no decisive verdict up to k={kmax}")
        self.kmax = kmax


class _Query:
    """Bit-level view of an SSA formula shared by both queries."""

    def __init__(self, ssa: SsaFormula):
        self.ssa = ssa
        bl = Blaster(ssa.width, ssa.defs, ssa.bdefs)
        self.bl = bl
        # blasting definitions in creation order keeps the recursion shallow
        for boolean, name in ssa.order:
            if boolean:
                bl.bool_bit(name)
            else:
                bl.var_bits(name)
        self.err = bl.bexpr(disj(*(lit for _, lit in ssa.error_lits)))
        self.viol = [bl.bexpr(lit) for _, lit in ssa.violation_lits]
        self.viol_any = bl.or_all(self.viol)
        # everything needed to read a trace off a model
        self.taken = [bl.bexpr(t) for t in ssa.taken]
        self.reach = [bl.bexpr(r) for r in ssa.reach]
        self.havoc_bits = {d: bl.var_bits(sym) for d, (_, sym) in ssa.havocs.items()}

    def cnf(self, goal) -> Cnf:
        """Clauses for ``goal`` restricted to its cone of influence."""
        clauses = self.bl.cone([goal])
        num = self.bl.num_vars
        if goal is False:
            num += 1
            clauses += [[num], [-num]]
        elif goal is not True:
            clauses.append([goal])
        return Cnf(num, clauses)

    def value(self, bits, model) -> int:
        v = 0
        for i, b in enumerate(bits):
            if _bit_value(b, model):
                v |= 1 << i
        return v

    def extract(self, model) -> Counterexample:
        dag = self.ssa.dag
        inc = dag.incoming()
        target = next(n for n, _ in self.ssa.error_lits
                      if _bit_value(self.reach[n], model))
        path = []
        n = target
        while n != 0:
            d = next(d for d in inc[n] if _bit_value(self.taken[d], model))
            path.append(d)
            n = dag.edges[d].src
        path.reverse()
        edges = tuple(dag.edges[d].edge.occ for d in path)
        choices = tuple(self.value(self.havoc_bits[d], model) if d in self.havoc_bits else None
                        for d in path)
        return Counterexample(edges, choices)


def _error_cex(cfa: Cfa, k: int, opts: SolverOptions) -> Optional[Counterexample]:
    q = _Query(encode(unwind(cfa, k)))
    res = opts.run(q.cnf(q.err))
    return q.extract(res.model) if res.satisfiable else None


def _deepening(k: int) -> list:
    """Bounds tried for the error query: 0..3, then doubling, ending at k."""
    ks = [j for j in range(min(k, 3) + 1)]
    j = 3
    while j < k:
        j = min(2 * j + 1, k)
        ks.append(j)
    return ks


def check_safety(cfa: Cfa, k: int, opts: Optional[SolverOptions] = None,
                 shortest: bool = True) -> Verdict:
    """Error query, then unwinding query, at per-loop bound ``k``.

    With ``shortest`` the error query is first posed at smaller bounds
    (iterative deepening, then bisection inside the last gap), so a reported
    counterexample uses the fewest loop traversals; since reachability is
    monotone in the bound this never changes the verdict.
    """
    opts = opts or SolverOptions()
    t0 = time.monotonic()
    stats: dict = {}
    try:
        dag = unwind(cfa, k)
        q = _Query(encode(dag))
        stats.update({"dag_nodes": len(dag.nodes), "dag_edges": len(dag.edges),
                      "markers": len(dag.markers)})
        err_cnf = q.cnf(q.err)
        stats["cnf_vars"], stats["cnf_clauses"] = err_cnf.num_vars, len(err_cnf.clauses)
        if opts.dimacs_path:
            with open(opts.dimacs_path, "w") as fh:
                fh.write(export_dimacs(err_cnf))

        cex, found_k, prev = None, None, -1
        for kk in (_deepening(k) if shortest else [k]):
            if kk == k:
                res = opts.run(err_cnf)
                cex = q.extract(res.model) if res.satisfiable else None
            else:
                cex = _error_cex(cfa, kk, opts)
            if cex is not None:
                found_k = kk
                break
            prev = kk
        if cex is not None:
            lo, hi = prev, found_k  # unreachable at lo (or lo < 0), reachable at hi
            while hi - lo > 1:
                mid = (lo + hi) // 2
                c = _error_cex(cfa, mid, opts)
                if c is None:
                    lo = mid
                else:
                    hi, cex = mid, c
            ok, states = run_trace(cfa, cex)
            if not ok:
                raise AssertionError("counterexample does not replay")
            cex.states = states
            stats["cex_bound"] = hi
            stats["time"] = time.monotonic() - t0
            return Verdict(UNSAFE, k, cex, stats=stats)
        if not q.viol:
            stats["time"] = time.monotonic() - t0
            return Verdict(SAFE, k, stats=stats)
        res = opts.run(q.cnf(q.viol_any))
        stats["time"] = time.monotonic() - t0
        if res.satisfiable:
            live = sorted({m.edge.occ for (m, _), bit in zip(q.ssa.violation_lits, q.viol)
                           if _bit_value(bit, res.model)})
            return Verdict(UNKNOWN, k, live_back_edges=tuple(live), stats=stats)
        return Verdict(SAFE, k, stats=stats)
    except ResourceOut as exc:
        stats["time"] = time.monotonic() - t0
        return Verdict(TIMEOUT, k, reason=str(exc), stats=stats)


def find_proof_bound(cfa: Cfa, kmax: int, opts: Optional[SolverOptions] = None,
                     kmin: int = 1) -> tuple:
    """Smallest ``k`` in ``kmin..kmax`` with a decisive verdict."""
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    for k in range(kmin, kmax + 1):
        v = check_safety(cfa, k, opts)
        if v.kind in (SAFE, UNSAFE):
            return k, v
        if v.kind == TIMEOUT:
            return k, v
    raise BoundExhausted(kmax)

