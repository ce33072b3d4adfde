"""Exhaustive explicit-state engine for desk-scale instances.

Used as ground truth by the test-suite and by ``--mode oracle``: concrete
reachable sets, the exact reachability diameter, and enumerated transition
relations of statement sequences.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .frontend.lang import Cfa, Havoc
from .semantics import step

MAX_WIDTH = 6
DEFAULT_STATE_CAP = 1 << 18


class StateSpaceTooLarge(Exception):
    pass


@dataclass(frozen=True)
class StateSpace:
    width: int
    vars: tuple
    cap: int = DEFAULT_STATE_CAP

    def __post_init__(self):
        if self.width > MAX_WIDTH:
            raise StateSpaceTooLarge(f"oracle supports widths up to {MAX_WIDTH}, got {self.width}")

    @classmethod
    def of(cls, cfa: Cfa, cap: int = DEFAULT_STATE_CAP) -> "StateSpace":
        return cls(cfa.width, tuple(cfa.vars), cap)

    def zero(self) -> tuple:
        return (0,) * len(self.vars)

    def as_env(self, state: tuple) -> dict:
        return dict(zip(self.vars, state))

    def as_tuple(self, env) -> tuple:
        return tuple(env[v] for v in self.vars)


def _expand(space: StateSpace, stmt, state: tuple) -> list:
    env = space.as_env(state)
    return [space.as_tuple(s) for s in step(stmt, env, space.width)]


def _check_cap(space: StateSpace, count: int) -> None:
    if count > space.cap:
        raise StateSpaceTooLarge(f"more than {space.cap} concrete states")


def enumerate_reachable(cfa: Cfa, space: Optional[StateSpace] = None) -> set:
    """All reachable ``(vertex, state)`` pairs from the all-zero state."""
    return set(_bfs(cfa, space or StateSpace.of(cfa))[0])


MEASURES = ("edges", "steps")


def _cost(e, measure: str) -> int:
    """Length contributed by one edge.

    ``edges`` counts every edge.  ``steps`` counts statements of the source
    program, with each accelerator application as one step: edges without an
    alphabet symbol (inside an accelerator path, or automaton bookkeeping)
    and the overflow fork's assumptions (whose union is skip) are free.
    """
    if measure == "edges":
        return 1
    return 0 if e.symbol is None or e.tag == "fork" else 1


def _bfs(cfa: Cfa, space: StateSpace, measure: str = "edges") -> tuple:
    """Shortest distances to every reachable pair (a 0-1 BFS)."""
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}")
    succ = cfa.successors_index()
    start = (cfa.init, space.zero())
    depth = {start: 0}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        v, state = node
        d = depth[node]
        for e in succ[v]:
            cost = _cost(e, measure)
            for nxt in _expand(space, e.stmt, state):
                key = (e.dst, nxt)
                old = depth.get(key)
                if old is None or d + cost < old:
                    depth[key] = d + cost
                    if cost:
                        queue.append(key)
                    else:
                        queue.appendleft(key)
        _check_cap(space, len(depth))
    return depth, space


def exact_diameter(cfa: Cfa, space: Optional[StateSpace] = None, measure: str = "edges",
                   keep_vars: Optional[Sequence[str]] = None,
                   vertices: Optional[Iterable[int]] = None) -> int:
    """Longest of the shortest traces to any reachable pair (see :func:`_cost`).

    With ``keep_vars``/``vertices`` the pairs are first projected (as in
    :func:`project`) and each projected pair counts at its cheapest
    preimage; this compares a transformed program with the original on the
    original's states only.
    """
    space = space or StateSpace.of(cfa)
    depth, _ = _bfs(cfa, space, measure)
    if keep_vars is None and vertices is None:
        return max(depth.values())
    pos = [space.vars.index(v) for v in (space.vars if keep_vars is None else keep_vars)]
    allowed = None if vertices is None else set(vertices)
    best: dict = {}
    for (v, s), d in depth.items():
        if allowed is not None and v not in allowed:
            continue
        key = (v, tuple(s[p] for p in pos))
        if key not in best or d < best[key]:
            best[key] = d
    return max(best.values())


def error_reachable(cfa: Cfa, space: Optional[StateSpace] = None) -> bool:
    return any(v in cfa.errors for v, _ in enumerate_reachable(cfa, space))


def project(reach: Iterable, cfa_vars: Sequence[str], keep_vars: Sequence[str],
            vertices: Optional[Iterable[int]] = None) -> set:
    """Restrict reachable pairs to ``vertices`` and the variables ``keep_vars``."""
    pos = [list(cfa_vars).index(v) for v in keep_vars]
    allowed = None if vertices is None else set(vertices)
    return {(v, tuple(s[p] for p in pos)) for v, s in reach
            if allowed is None or v in allowed}


def enum_relation(trace: Sequence, space: StateSpace,
                  start_vars: Optional[Sequence[str]] = None) -> set:
    """All ``(pre, post)`` state pairs related by the statement sequence.

    Pre-states range over every valuation of ``start_vars`` (default: all
    variables); the remaining variables start at zero.
    """
    start_vars = list(space.vars if start_vars is None else start_vars)
    free_pos = [space.vars.index(v) for v in start_vars]
    size = 1 << (space.width * len(free_pos))
    havocs = sum(1 for st in trace if isinstance(st, Havoc))
    _check_cap(space, size)
    out = set()
    for values in itertools.product(range(1 << space.width), repeat=len(free_pos)):
        pre = list(space.zero())
        for p, val in zip(free_pos, values):
            pre[p] = val
        pre = tuple(pre)
        frontier = {pre}
        for st in trace:
            nxt = set()
            for s in frontier:
                nxt.update(_expand(space, st, s))
            frontier = nxt
            if havocs and len(frontier) > space.cap:
                raise StateSpaceTooLarge("relation fan-out exceeds cap")
        out.update((pre, post) for post in frontier)
    return out


def compose_pairs(r1: set, r2: set) -> set:
    by_pre: dict = {}
    for a, b in r2:
        by_pre.setdefault(a, set()).add(b)
    return {(a, c) for a, b in r1 for c in by_pre.get(b, ())}


def project_pairs(rel: set, vars: Sequence[str], keep: Sequence[str]) -> set:
    pos = [list(vars).index(v) for v in keep]
    return {(tuple(a[p] for p in pos), tuple(b[p] for p in pos)) for a, b in rel}


@dataclass
class OracleReport:
    reachable: int
    diameter: int  # in edges
    error_reachable: bool
    diameter_steps: int  # see _cost


def analyse(cfa: Cfa, space: Optional[StateSpace] = None) -> OracleReport:
    space = space or StateSpace.of(cfa)
    depth, _ = _bfs(cfa, space)
    return OracleReport(len(depth), max(depth.values()),
                        any(v in cfa.errors for v, _ in depth),
                        exact_diameter(cfa, space, "steps"))
