"""Conflict-driven clause learning SAT solver.

Two watched literals, first-UIP learning with recursive-free clause
minimisation, VSIDS-style activities with phase saving, geometric restarts
and LBD-based reduction of the learnt clause database.  Literals are DIMACS
integers at the interface and ``2*var + sign`` indices internally.
"""
from __future__ import annotations

import heapq
import random
import time
from dataclasses import dataclass, field
from typing import Optional


class ResourceOut(Exception):
    """Conflict budget or deadline exhausted."""


@dataclass
class SatResult:
    satisfiable: bool
    model: Optional[dict] = None  # var -> bool, total over 1..num_vars
    stats: dict = field(default_factory=dict)

    def __bool__(self):
        return self.satisfiable


DEFAULT_CONFLICT_BUDGET = 10_000_000


class Solver:
    def __init__(self, num_vars: int, clauses, seed: int = 0,
                 conflict_budget: int = DEFAULT_CONFLICT_BUDGET,
                 deadline: Optional[float] = None):
        self.n = num_vars
        self.original = [list(c) for c in clauses]
        self.budget = conflict_budget
        self.deadline = deadline
        self.rng = random.Random(seed)

        n2 = 2 * (num_vars + 1)
        self.val = [0] * n2  # per literal index: 1 true, -1 false, 0 unassigned
        self.level = [0] * (num_vars + 1)
        self.reason: list = [None] * (num_vars + 1)
        self.watches: list = [[] for _ in range(n2)]
        self.clauses: list = []
        self.learnt_flag: list = []
        self.lbd: list = []
        self.trail: list = []
        self.trail_lim: list = []
        self.qhead = 0
        self.activity = [self.rng.random() * 1e-5 for _ in range(num_vars + 1)]
        self.var_inc = 1.0
        self.polarity = [True] * (num_vars + 1)  # True means "assign false"
        self.heap: list = [(-self.activity[v], v) for v in range(1, num_vars + 1)]
        heapq.heapify(self.heap)
        self.seen = [0] * (num_vars + 1)
        self.conflicts = 0
        self.decisions = 0
        self.propagations = 0
        self.learnt_count = 0
        self.ok = True
        self._load(self.original)

    # -- setup ----------------------------------------------------------------

    @staticmethod
    def _ilit(lit: int) -> int:
        return 2 * lit if lit > 0 else 2 * (-lit) + 1

    def _load(self, clauses):
        for c in clauses:
            lits = sorted({self._ilit(l) for l in c})
            if any((l ^ 1) in lits for l in lits):
                continue  # tautology
            if not lits:
                self.ok = False
                return
            if len(lits) == 1:
                l = lits[0]
                if self.val[l] == -1:
                    self.ok = False
                    return
                if self.val[l] == 0:
                    self._enqueue(l, None)
                continue
            self._attach(lits, learnt=False)
        if self.ok and self._propagate() is not None:
            self.ok = False

    def _attach(self, lits: list, learnt: bool, lbd: int = 0) -> int:
        ci = len(self.clauses)
        self.clauses.append(lits)
        self.learnt_flag.append(learnt)
        self.lbd.append(lbd)
        self.watches[lits[0]].append(ci)
        self.watches[lits[1]].append(ci)
        return ci

    # -- core -----------------------------------------------------------------

    def _enqueue(self, lit: int, reason) -> None:
        v = lit >> 1
        self.val[lit] = 1
        self.val[lit ^ 1] = -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self):
        val = self.val
        clauses = self.clauses
        watches = self.watches
        trail = self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            self.propagations += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                ci = ws[i]
                i += 1
                c = clauses[ci]
                if c is None:
                    continue  # deleted clause, drop the watch
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                if val[first] == 1:
                    ws[j] = ci
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != -1:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk].append(ci)
                        break
                else:
                    ws[j] = ci
                    j += 1
                    if val[first] == -1:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        return ci
                    self._enqueue(first, ci)
            del ws[j:]
        return None

    def _bump(self, v: int) -> None:
        act = self.activity
        act[v] += self.var_inc
        if act[v] > 1e100:
            for u in range(1, self.n + 1):
                act[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-act[u], u) for u in range(1, self.n + 1) if self.val[2 * u] == 0]
            heapq.heapify(self.heap)
        elif self.val[2 * v] == 0:
            heapq.heappush(self.heap, (-act[v], v))

    def _analyze(self, confl: int) -> tuple:
        seen = self.seen
        level = self.level
        cur = len(self.trail_lim)
        learnt = [0]
        path = 0
        p = None
        idx = len(self.trail) - 1
        while True:
            c = self.clauses[confl]
            if self.learnt_flag[confl]:
                self._update_lbd(confl)
            start = 0 if p is None else 1
            for q in c[start:]:
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    self._bump(v)
                    if level[v] >= cur:
                        path += 1
                    else:
                        learnt.append(q)
            while not seen[self.trail[idx] >> 1]:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            v = p >> 1
            confl = self.reason[v]
            seen[v] = 0
            path -= 1
            if path == 0:
                break
        learnt[0] = p ^ 1

        # drop literals implied by the rest of the clause (local minimisation)
        keep = [learnt[0]]
        for q in learnt[1:]:
            r = self.reason[q >> 1]
            if r is None:
                keep.append(q)
                continue
            for x in self.clauses[r][1:]:
                if not seen[x >> 1] and level[x >> 1] > 0:
                    keep.append(q)
                    break
        for q in learnt:
            seen[q >> 1] = 0
        learnt = keep

        if len(learnt) == 1:
            back = 0
        else:
            best = 1
            for k in range(2, len(learnt)):
                if level[learnt[k] >> 1] > level[learnt[best] >> 1]:
                    best = k
            learnt[1], learnt[best] = learnt[best], learnt[1]
            back = level[learnt[1] >> 1]
        lbd = len({level[q >> 1] for q in learnt})
        return learnt, back, lbd

    def _update_lbd(self, ci: int) -> None:
        lbd = len({self.level[q >> 1] for q in self.clauses[ci]})
        if lbd < self.lbd[ci]:
            self.lbd[ci] = lbd

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        stop = self.trail_lim[lvl]
        val = self.val
        for k in range(len(self.trail) - 1, stop - 1, -1):
            lit = self.trail[k]
            v = lit >> 1
            val[lit] = 0
            val[lit ^ 1] = 0
            self.reason[v] = None
            self.polarity[v] = bool(lit & 1)
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[stop:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _pick(self) -> int:
        heap = self.heap
        val = self.val
        while heap:
            _, v = heapq.heappop(heap)
            if val[2 * v] == 0:
                return 2 * v + (1 if self.polarity[v] else 0)
        return -1

    def _reduce_db(self) -> None:
        locked = {self.reason[l >> 1] for l in self.trail}
        cands = [ci for ci, c in enumerate(self.clauses)
                 if c is not None and self.learnt_flag[ci] and self.lbd[ci] > 2
                 and ci not in locked]
        cands.sort(key=lambda ci: (-self.lbd[ci], -ci))
        for ci in cands[: len(cands) // 2]:
            self.clauses[ci] = None

    def _check_resources(self) -> None:
        if self.conflicts > self.budget:
            raise ResourceOut(f"conflict budget {self.budget} exceeded")
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ResourceOut("deadline exceeded")

    def solve(self) -> SatResult:
        if not self.ok:
            return SatResult(False, None, self._stats())
        restart_limit = 100.0
        conflicts_since_restart = 0
        max_learnts = max(len(self.clauses) // 3, 2000)
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                conflicts_since_restart += 1
                if not self.trail_lim:
                    return SatResult(False, None, self._stats())
                if self.conflicts & 63 == 0:
                    self._check_resources()
                learnt, back, lbd = self._analyze(confl)
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    ci = self._attach(learnt, learnt=True, lbd=lbd)
                    self.learnt_count += 1
                    self._enqueue(learnt[0], ci)
                self.var_inc /= 0.95
                continue
            if conflicts_since_restart >= restart_limit:
                conflicts_since_restart = 0
                restart_limit *= 1.5
                self._cancel_until(0)
            if self.learnt_count - 0 > max_learnts:
                self._reduce_db()
                self.learnt_count = sum(1 for ci, c in enumerate(self.clauses)
                                        if c is not None and self.learnt_flag[ci])
                max_learnts = int(max_learnts * 1.1)
            lit = self._pick()
            if lit < 0:
                return self._model()
            self.decisions += 1
            if self.deadline is not None and self.decisions & 1023 == 0:
                self._check_resources()
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)

    def _model(self) -> SatResult:
        model = {v: self.val[2 * v] == 1 for v in range(1, self.n + 1)}
        for c in self.original:
            assert any(model[abs(l)] == (l > 0) for l in c), f"model violates {c}"
        return SatResult(True, model, self._stats())

    def _stats(self) -> dict:
        return {"conflicts": self.conflicts, "decisions": self.decisions,
                "propagations": self.propagations, "learnt": self.learnt_count}


def solve(cnf, seed: int = 0, conflict_budget: int = DEFAULT_CONFLICT_BUDGET,
          deadline: Optional[float] = None) -> SatResult:
    """Decide a :class:`~accelbmc.satcore.bitblast.Cnf` (or ``(n, clauses)``)."""
    if isinstance(cnf, tuple):
        n, clauses = cnf
    else:
        n, clauses = cnf.num_vars, cnf.clauses
    return Solver(n, clauses, seed, conflict_budget, deadline).solve()
