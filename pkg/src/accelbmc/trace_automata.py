"""Restriction automata: forbid redundant traces of an accelerated CFA.

For every accelerated looping trace ``pi`` with accelerator ``acc`` the
traces containing ``pi`` or ``acc . acc`` as a contiguous sub-word are
redundant.  An NFA recognising them is determinised by the subset
construction and simulated inside the CFA through a fresh variable ``g``
holding the automaton state; transitions into the accepting state get no
edge at all, so redundant traces become infeasible.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .accel import AcceleratedCfa, fresh_var
from .frontend.lang import (And, Assign, Assume, Cfa, CfaBuilder, Cmp, Const,
                            Edge, Var)

MAX_DFA_STATES = 1 << 16


class AutomatonTooLarge(Exception):
    pass


def symbol_name(sym) -> str:
    kind, n = sym
    return f"acc{n}" if kind == "acc" else f"e{n}"


# ---------------------------------------------------------------------------
# Automata


@dataclass
class Nfa:
    """Finite automaton; ``trans`` maps ``(state, symbol)`` to a set of states.

    The symbol ``None`` denotes an epsilon move.
    """
    num_states: int
    alphabet: tuple
    trans: dict
    start: int
    accepting: frozenset
    patterns: tuple = ()

    def closure(self, states) -> frozenset:
        out = set(states)
        work = list(states)
        while work:
            q = work.pop()
            for r in self.trans.get((q, None), ()):
                if r not in out:
                    out.add(r)
                    work.append(r)
        return frozenset(out)

    def move(self, states, sym) -> frozenset:
        nxt = set()
        for q in states:
            nxt.update(self.trans.get((q, sym), ()))
        return self.closure(nxt)

    def accepts(self, word) -> bool:
        cur = self.closure({self.start})
        for s in word:
            cur = self.move(cur, s)
        return bool(cur & self.accepting)

    def accepting_is_sink(self) -> bool:
        """Every move from an accepting state stays accepting."""
        for q in self.accepting:
            for s in self.alphabet:
                targets = self.move({q}, s)
                if not targets or not targets <= self.accepting:
                    return False
        return True


def build_restriction_nfa(acc: AcceleratedCfa) -> Nfa:
    """NFA for ``Sigma* (pi_1 | a_1 a_1 | ... ) Sigma*``."""
    alphabet = tuple(sorted({e.symbol for e in acc.cfa.edges if e.symbol is not None}))
    trans: dict = {}

    def add(q, s, r):
        trans.setdefault((q, s), set()).add(r)

    start = 0
    n = 1
    patterns = []
    for lp in acc.loops:
        if not lp.blocks:
            continue
        for word in (lp.pattern, (lp.symbol, lp.symbol)):
            patterns.append(word)
    accept = None
    if patterns:
        chain_states = []
        for word in patterns:
            chain_states.append(list(range(n, n + len(word) - 1)))
            n += len(word) - 1
        accept = n
        n += 1
        for word, mids in zip(patterns, chain_states):
            states = [start] + mids + [accept]
            for k, s in enumerate(word):
                add(states[k], s, states[k + 1])
        for s in alphabet:
            add(accept, s, accept)
    for s in alphabet:
        add(start, s, start)
    return Nfa(n, alphabet, trans, start,
               frozenset() if accept is None else frozenset({accept}), tuple(patterns))


@dataclass
class Dfa:
    """Total deterministic automaton over ``alphabet``.

    ``subsets[q]`` is the NFA state set represented by ``q`` (the merged
    accepting sink keeps the first such subset found).
    """
    num_states: int
    alphabet: tuple
    delta: dict  # (state, symbol) -> state
    start: int
    accepting: frozenset
    subsets: tuple = ()

    def step(self, q: int, sym) -> int:
        return self.delta[(q, sym)]

    def accepts(self, word) -> bool:
        q = self.start
        for s in word:
            q = self.delta[(q, s)]
        return q in self.accepting

    def sink(self) -> Optional[int]:
        return next(iter(self.accepting)) if len(self.accepting) == 1 else None


def determinize(nfa: Nfa, limit: int = MAX_DFA_STATES) -> Dfa:
    """Subset construction, breadth-first in alphabet order.

    When the NFA's accepting states are absorbing, all accepting subsets are
    merged into one sink numbered last; the result is not minimised.
    """
    merge = bool(nfa.accepting) and nfa.accepting_is_sink()
    start = nfa.closure({nfa.start})
    ids = {start: 0}
    order = [start]
    queue = deque([start])
    raw: dict = {}
    sink_key = "accept"
    while queue:
        cur = queue.popleft()
        for s in nfa.alphabet:
            nxt = nfa.move(cur, s)
            if merge and nxt & nfa.accepting:
                raw[(ids[cur], s)] = sink_key
                continue
            if nxt not in ids:
                if len(ids) >= limit:
                    raise AutomatonTooLarge(f"more than {limit} DFA states")
                ids[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            raw[(ids[cur], s)] = ids[nxt]
    num = len(order)
    delta: dict = {}
    if merge and sink_key in raw.values():
        sink = num
        num += 1
        for s in nfa.alphabet:
            delta[(sink, s)] = sink
        accepting = frozenset({sink})
        subsets = tuple(order) + (nfa.accepting,)
    else:
        sink = None
        accepting = frozenset(ids[S] for S in order if S & nfa.accepting)
        subsets = tuple(order)
    for key, val in raw.items():
        delta[key] = sink if val == sink_key else val
    return Dfa(num, nfa.alphabet, delta, 0, accepting, subsets)


def dump_dfa_dot(dfa: Dfa, name: str = "trace_automaton") -> str:
    lines = [f"digraph {name} {{", "  rankdir=TB;"]
    for q in range(dfa.num_states):
        shape = "doublecircle" if q in dfa.accepting else "circle"
        label = "" if q in dfa.accepting else str(q)
        lines.append(f'  q{q} [label="{label}", shape={shape}];')
    for q in range(dfa.num_states):
        if q in dfa.accepting:
            continue
        by_target: dict = {}
        for s in dfa.alphabet:
            r = dfa.delta[(q, s)]
            if r == q:
                continue
            by_target.setdefault(r, []).append(symbol_name(s))
        for r, syms in sorted(by_target.items()):
            lines.append(f'  q{q} -> q{r} [label="{",".join(syms)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Inlining


@dataclass
class InstrumentedCfa:
    base: AcceleratedCfa
    cfa: Cfa
    g: str
    dfa: Dfa
    transitions: int = 0  # simulated (edge, DFA transition) groups emitted
    dropped: int = 0  # transitions into the accepting state
    notes: list = field(default_factory=list)


def _units(acc: AcceleratedCfa) -> list:
    """P-hat edges grouped into atomic alphabet units.

    Returns ``(src, dst, edges, symbol)`` with accelerator paths as a
    single unit; other edges form singleton units.
    """
    cfa = acc.cfa
    by_occ = {e.occ: e for e in cfa.edges}
    in_path = {}
    for lp in acc.loops:
        for occ in lp.path_occs:
            in_path[occ] = lp
    units, done = [], set()
    for e in cfa.edges:
        if e.occ in done:
            continue
        lp = in_path.get(e.occ)
        if lp is None:
            units.append((e.src, e.dst, (e,), e.symbol))
            done.add(e.occ)
            continue
        path = tuple(by_occ[o] for o in lp.path_occs)
        done.update(lp.path_occs)
        units.append((path[0].src, path[-1].dst, path, lp.symbol))
    return units


def possible_states(acc: AcceleratedCfa, dfa: Dfa) -> dict:
    """DFA states that can hold at each vertex on non-rejected paths."""
    units = _units(acc)
    out: dict = {}
    for u in units:
        out.setdefault(u[0], []).append(u)
    init = (acc.cfa.init, dfa.start)
    seen = {init}
    work = [init]
    while work:
        v, q = work.pop()
        for src, dst, _, sym in out.get(v, ()):
            r = q if sym is None else dfa.delta[(q, sym)]
            if r in dfa.accepting:
                continue
            if (dst, r) not in seen:
                seen.add((dst, r))
                work.append((dst, r))
    poss: dict = {}
    for v, q in seen:
        poss.setdefault(v, set()).add(q)
    return poss


def _runs(states) -> list:
    runs = []
    for q in sorted(states):
        if runs and runs[-1][1] == q - 1:
            runs[-1][1] = q
        else:
            runs.append([q, q])
    return [tuple(r) for r in runs]


def _range_guard(g: str, lo: int, hi: int):
    if lo == hi:
        return Cmp("==", Var(g), Const(lo))
    if lo == 0:
        return Cmp("<=", Var(g), Const(hi))
    return And((Cmp(">=", Var(g), Const(lo)), Cmp("<=", Var(g), Const(hi))))


def inline(acc: AcceleratedCfa, dfa: Dfa, g: Optional[str] = None) -> InstrumentedCfa:
    """Simulate ``dfa`` in the CFA through variable ``g`` (initially 0)."""
    base = acc.cfa
    if dfa.num_states > (1 << base.width):
        raise AutomatonTooLarge(f"{dfa.num_states} automaton states do not fit "
                                f"in a {base.width}-bit variable")
    g = g or fresh_var("g", base.vars)
    pattern_syms = {s for word in _patterns_of(acc) for s in word}
    poss = possible_states(acc, dfa)

    b = CfaBuilder(base.width, list(base.vars), base.num_vertices, [], set(base.errors),
                   base.init, base.next_occ())
    b.names = {v: n for v, n in enumerate(base.names) if n}
    b.add_var(g)
    result = InstrumentedCfa(acc, base, g, dfa)

    def copy(e: Edge, src=None, dst=None, symbol="keep") -> Edge:
        sym = e.symbol if symbol == "keep" else symbol
        return b.add(e.src if src is None else src, e.stmt, e.dst if dst is None else dst,
                     symbol=sym, tag=e.tag)

    def emit_body(src, dst, edges, fresh: bool):
        """Copy a unit's edges from ``src`` to ``dst``; intermediate vertices
        are reused on the first copy."""
        if len(edges) == 1:
            copy(edges[0], src, dst)
            return
        cur = src
        for k, e in enumerate(edges):
            last = k == len(edges) - 1
            nxt = dst if last else (b.vertex() if fresh else e.dst)
            copy(e, cur, nxt)
            cur = nxt

    for src, dst, edges, sym in _units(acc):
        states = sorted(poss.get(src, ()))
        if sym is None or not states:
            # bookkeeping edges and unreachable units are copied verbatim
            emit_body(src, dst, edges, fresh=False)
            continue
        moves = {q: dfa.delta[(q, sym)] for q in states}
        if all(q == r for q, r in moves.items()):
            emit_body(src, dst, edges, fresh=False)
            continue
        if sym not in pattern_syms:
            # every state falls back to the start state on this symbol
            mid = b.vertex()
            emit_body(src, mid, edges, fresh=False)
            b.add(mid, Assign(g, Const(dfa.start)), dst, symbol=None, tag="ta")
            result.transitions += 1
            continue
        groups: dict = {}
        for q, r in moves.items():
            if r in dfa.accepting:
                result.dropped += 1
                continue
            groups.setdefault(r, []).append(q)
        first = True
        for target in sorted(groups):
            sources = groups[target]
            for lo, hi in _runs(sources):
                a = b.vertex()
                b.add(src, Assume(_range_guard(g, lo, hi)), a, symbol=None, tag="ta")
                if sources == [target]:
                    emit_body(a, dst, edges, fresh=not first)
                else:
                    c = b.vertex()
                    emit_body(a, c, edges, fresh=not first)
                    b.add(c, Assign(g, Const(target)), dst, symbol=None, tag="ta")
                first = False
                result.transitions += 1
    result.cfa = b.build(base.warnings)
    return result


def _patterns_of(acc: AcceleratedCfa) -> list:
    words = []
    for lp in acc.loops:
        if lp.blocks:
            words.append(lp.pattern)
            words.append((lp.symbol, lp.symbol))
    return words


def _fits(acc: AcceleratedCfa, limit: int) -> Optional[Dfa]:
    try:
        dfa = determinize(build_restriction_nfa(acc), limit)
    except AutomatonTooLarge:
        return None
    return dfa if dfa.num_states <= (1 << acc.cfa.width) else None


def restrict(acc: AcceleratedCfa, limit: int = MAX_DFA_STATES) -> InstrumentedCfa:
    """Build, determinise and inline the restriction automaton.

    When the automaton for all accelerated loops does not fit (in ``limit``
    states, or in the values of a program-width variable), loops are added
    greedily in order and those whose patterns would overflow it are left
    unrestricted; their accelerators stay, so reachability is unaffected.
    """
    for lp in acc.loops:
        lp.restricted = True
    dfa = _fits(acc, limit)
    notes = []
    if dfa is None:
        for lp in acc.loops:
            lp.restricted = False
        dfa = _fits(acc, limit)
        for lp in acc.loops:
            lp.restricted = True
            cand = _fits(acc, limit)
            if cand is None:
                lp.restricted = False
                notes.append(f"accelerator {lp.index} left unrestricted: automaton too large")
            else:
                dfa = cand
    result = inline(acc, dfa)
    result.notes[:0] = notes
    return result


__all__ = [
    "AutomatonTooLarge", "Dfa", "InstrumentedCfa", "MAX_DFA_STATES", "Nfa",
    "build_restriction_nfa", "determinize", "dump_dfa_dot", "inline",
    "possible_states", "restrict", "symbol_name",
]
