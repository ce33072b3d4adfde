"""Bit-blasting of bit-vector formulas to CNF.

Bits are either DIMACS literals (non-zero ints) or the Python constants
``True``/``False``.  Gates are constant-folded and structurally hashed, so
formulas over mostly-concrete values collapse before reaching the solver.
Adders are ripple-carry, comparisons inspect the borrow of a subtraction and
multiplication is shift-add (by constants this is just a sum of shifts).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..frontend.lang import (Add, And, BConst, BVar, Cmp, Const, Ite, Mul,
                             Nondet, Not, NoWrap, Or, Overflow, Sub, Var)


class BlastError(Exception):
    pass


@dataclass
class Cnf:
    num_vars: int
    clauses: list
    annotations: dict = field(default_factory=dict)  # name -> list of bits
    bool_annotations: dict = field(default_factory=dict)  # name -> bit
    widths: dict = field(default_factory=dict)

    def decode(self, model: Mapping[int, bool]) -> dict:
        """Map a solver model back to bit-vector and boolean values."""
        out = {}
        for name, bits in self.annotations.items():
            val = 0
            for k, b in enumerate(bits):
                if _bit_value(b, model):
                    val |= 1 << k
            out[name] = val
        for name, b in self.bool_annotations.items():
            out[name] = _bit_value(b, model)
        return out


def _bit_value(b, model) -> bool:
    if b is True or b is False:
        return b
    v = model.get(abs(b), False)
    return v if b > 0 else not v


class Blaster:
    """Translates expressions into gates over a growing clause set."""

    def __init__(self, width: int, defs: Optional[Mapping] = None,
                 bdefs: Optional[Mapping] = None):
        self.width = width
        self.defs = dict(defs or {})
        self.bdefs = dict(bdefs or {})
        self.num_vars = 0
        self.clauses: list = []
        self._and: dict = {}
        self._xor: dict = {}
        self._ite: dict = {}
        self.vars: dict = {}  # bit-vector name -> bits
        self.bools: dict = {}  # proposition name -> bit
        self._memo: dict = {}
        self._bmemo: dict = {}
        self._wide: dict = {}
        self.gate_inputs: dict = {}  # gate variable -> input literals
        self.gate_span: dict = {}  # gate variable -> (first clause, end)
        self.asserted: list = []  # indices of top-level clauses

    # -- gates -----------------------------------------------------------

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def and2(self, a, b):
        if a is False or b is False:
            return False
        if a is True:
            return b
        if b is True:
            return a
        if a == b:
            return a
        if a == -b:
            return False
        key = (a, b) if a < b else (b, a)
        r = self._and.get(key)
        if r is None:
            r = self.new_var()
            start = len(self.clauses)
            self.clauses.append([-r, a])
            self.clauses.append([-r, b])
            self.clauses.append([r, -a, -b])
            self._and[key] = r
            self._record(r, (a, b), start)
        return r

    @staticmethod
    def neg(a):
        if a is True:
            return False
        if a is False:
            return True
        return -a

    def or2(self, a, b):
        return self.neg(self.and2(self.neg(a), self.neg(b)))

    def xor2(self, a, b):
        if a is False:
            return b
        if b is False:
            return a
        if a is True:
            return self.neg(b)
        if b is True:
            return self.neg(a)
        if a == b:
            return False
        if a == -b:
            return True
        sign = 1
        if a < 0:
            a, sign = -a, -sign
        if b < 0:
            b, sign = -b, -sign
        key = (a, b) if a < b else (b, a)
        r = self._xor.get(key)
        if r is None:
            r = self.new_var()
            start = len(self.clauses)
            self.clauses.append([-r, a, b])
            self.clauses.append([-r, -a, -b])
            self.clauses.append([r, -a, b])
            self.clauses.append([r, a, -b])
            self._xor[key] = r
            self._record(r, (a, b), start)
        return r if sign > 0 else -r

    def ite(self, c, a, b):
        if c is True:
            return a
        if c is False:
            return b
        if a == b:
            return a
        if a is True and b is False:
            return c
        if a is False and b is True:
            return -c
        if a is True or b is True or a is False or b is False:
            return self.or2(self.and2(c, a), self.and2(-c, b))
        key = (c, a, b)
        r = self._ite.get(key)
        if r is None:
            r = self.new_var()
            start = len(self.clauses)
            self.clauses.append([-r, -c, a])
            self.clauses.append([-r, c, b])
            self.clauses.append([r, -c, -a])
            self.clauses.append([r, c, -b])
            self.clauses.append([-r, a, b])
            self.clauses.append([r, -a, -b])
            self._ite[key] = r
            self._record(r, (c, a, b), start)
        return r

    def _record(self, r: int, inputs: tuple, start: int) -> None:
        self.gate_inputs[r] = inputs
        self.gate_span[r] = (start, len(self.clauses))

    def cone(self, roots) -> list:
        """Clauses defining the gates that ``roots`` depend on, plus every
        asserted clause."""
        seen = set()
        work = [abs(r) for r in roots if r is not True and r is not False]
        for ci in self.asserted:
            work.extend(abs(l) for l in self.clauses[ci])
        spans = []
        while work:
            v = work.pop()
            if v in seen:
                continue
            seen.add(v)
            span = self.gate_span.get(v)
            if span is None:
                continue
            spans.append(span)
            work.extend(abs(x) for x in self.gate_inputs[v] if x is not True and x is not False)
        spans.sort()
        out = [list(self.clauses[ci]) for ci in self.asserted]
        for start, end in spans:
            out.extend(list(c) for c in self.clauses[start:end])
        return out

    def and_all(self, bits):
        acc = True
        for b in bits:
            acc = self.and2(acc, b)
            if acc is False:
                return False
        return acc

    def or_all(self, bits):
        acc = False
        for b in bits:
            acc = self.or2(acc, b)
            if acc is True:
                return True
        return acc

    # -- words ---------------------------------------------------------------

    @staticmethod
    def const_bits(value: int, width: int) -> list:
        return [bool((value >> k) & 1) for k in range(width)]

    def add_bits(self, a: list, b: list, carry=False) -> tuple:
        out = []
        for x, y in zip(a, b):
            t = self.xor2(x, y)
            out.append(self.xor2(t, carry))
            carry = self.or2(self.and2(x, y), self.and2(carry, t))
        return out, carry

    def sub_bits(self, a: list, b: list) -> tuple:
        """``a - b`` and the carry-out (carry is True iff ``a >= b``)."""
        return self.add_bits(a, [self.neg(y) for y in b], True)

    def mul_bits(self, a: list, b: list) -> list:
        width = len(a)
        acc = [False] * width
        for k, bk in enumerate(b):
            if bk is False:
                continue
            partial = [False] * k + [self.and2(bk, x) for x in a[: width - k]]
            acc, _ = self.add_bits(acc, partial)
        return acc

    def eq_bits(self, a: list, b: list):
        return self.and_all(self.neg(self.xor2(x, y)) for x, y in zip(a, b))

    def ult_bits(self, a: list, b: list):
        _, carry = self.sub_bits(a, b)
        return self.neg(carry)

    def ite_bits(self, c, a: list, b: list) -> list:
        return [self.ite(c, x, y) for x, y in zip(a, b)]

    # -- expressions -----------------------------------------------------------

    def var_bits(self, name: str) -> list:
        bits = self.vars.get(name)
        if bits is None:
            if name in self.defs:
                bits = self.expr(self.defs[name])
            else:
                bits = [self.new_var() for _ in range(self.width)]
            self.vars[name] = bits
        return bits

    def bool_bit(self, name: str):
        bit = self.bools.get(name)
        if bit is None:
            if name in self.bdefs:
                bit = self.bexpr(self.bdefs[name])
            else:
                bit = self.new_var()
            self.bools[name] = bit
        return bit

    def expr(self, e) -> list:
        r = self._memo.get(e)
        if r is not None:
            return r
        w = self.width
        if isinstance(e, Var):
            r = self.var_bits(e.name)
        elif isinstance(e, Const):
            r = self.const_bits(e.value & ((1 << w) - 1), w)
        elif isinstance(e, Add):
            r, _ = self.add_bits(self.expr(e.a), self.expr(e.b))
        elif isinstance(e, Sub):
            r, _ = self.sub_bits(self.expr(e.a), self.expr(e.b))
        elif isinstance(e, Mul):
            a, b = self.expr(e.a), self.expr(e.b)
            if isinstance(e.a, Const):
                a, b = b, a
            r = self.mul_bits(a, b)
        elif isinstance(e, Ite):
            r = self.ite_bits(self.bexpr(e.cond), self.expr(e.a), self.expr(e.b))
        elif isinstance(e, Nondet):
            raise BlastError("nondet must be lowered to havoc before encoding")
        else:
            raise BlastError(f"unsupported operator {e!r}")
        self._memo[e] = r
        return r

    def bexpr(self, b):
        r = self._bmemo.get(b)
        if r is not None:
            return r
        if isinstance(b, BConst):
            r = b.value
        elif isinstance(b, BVar):
            r = self.bool_bit(b.name)
        elif isinstance(b, Cmp):
            r = self.compare(b.op, self.expr(b.a), self.expr(b.b))
        elif isinstance(b, And):
            r = self.and_all(self.bexpr(a) for a in b.args)
        elif isinstance(b, Or):
            r = self.or_all(self.bexpr(a) for a in b.args)
        elif isinstance(b, Not):
            r = self.neg(self.bexpr(b.arg))
        elif isinstance(b, Overflow):
            r = self.bexpr(b.desugar(self.width))
        elif isinstance(b, NoWrap):
            r = self.no_wrap(b.expr)
        else:
            raise BlastError(f"unsupported operator {b!r}")
        self._bmemo[b] = r
        return r

    def compare(self, op: str, a: list, b: list):
        if op == "==":
            return self.eq_bits(a, b)
        if op == "!=":
            return self.neg(self.eq_bits(a, b))
        if op == "<":
            return self.ult_bits(a, b)
        if op == ">=":
            return self.neg(self.ult_bits(a, b))
        if op == ">":
            return self.ult_bits(b, a)
        if op == "<=":
            return self.neg(self.ult_bits(b, a))
        raise BlastError(f"unknown comparison {op}")

    # -- exact arithmetic for range checks ------------------------------------

    def _interval(self, e) -> tuple:
        mask = (1 << self.width) - 1
        if isinstance(e, Var):
            return 0, mask
        if isinstance(e, Const):
            v = e.value & mask
            return v, v
        if isinstance(e, Ite):
            la, ha = self._interval(e.a)
            lb, hb = self._interval(e.b)
            return min(la, lb), max(ha, hb)
        la, ha = self._interval(e.a)
        lb, hb = self._interval(e.b)
        if isinstance(e, Add):
            return la + lb, ha + hb
        if isinstance(e, Sub):
            return la - hb, ha - lb
        if isinstance(e, Mul):
            corners = (la * lb, la * hb, ha * lb, ha * hb)
            return min(corners), max(corners)
        raise BlastError(f"unsupported operator {e!r} in range check")

    def _exact(self, e, wide: int) -> list:
        key = (e, wide)
        r = self._wide.get(key)
        if r is not None:
            return r
        w = self.width
        if isinstance(e, Var):
            r = self.var_bits(e.name) + [False] * (wide - w)
        elif isinstance(e, Const):
            r = self.const_bits(e.value & ((1 << w) - 1), wide)
        elif isinstance(e, Add):
            r, _ = self.add_bits(self._exact(e.a, wide), self._exact(e.b, wide))
        elif isinstance(e, Sub):
            r, _ = self.sub_bits(self._exact(e.a, wide), self._exact(e.b, wide))
        elif isinstance(e, Mul):
            a, b = self._exact(e.a, wide), self._exact(e.b, wide)
            if isinstance(e.a, Const):
                a, b = b, a
            r = self.mul_bits(a, b)
        elif isinstance(e, Ite):
            r = self.ite_bits(self.bexpr(e.cond), self._exact(e.a, wide),
                              self._exact(e.b, wide))
        else:
            raise BlastError(f"unsupported operator {e!r} in range check")
        self._wide[key] = r
        return r

    def no_wrap(self, e):
        lo, hi = self._interval(e)
        wide = max(hi.bit_length(), (-lo).bit_length(), self.width) + 2
        bits = self._exact(e, wide)
        # value in [0, 2^w) iff every bit from w upwards (sign included) is 0
        return self.neg(self.or_all(bits[self.width:]))

    # -- output ------------------------------------------------------------------

    def assert_bit(self, bit):
        if bit is True:
            return
        if bit is False:
            v = self.new_var()
            self.asserted += [len(self.clauses), len(self.clauses) + 1]
            self.clauses.append([v])
            self.clauses.append([-v])
            return
        self.asserted.append(len(self.clauses))
        self.clauses.append([bit])

    def to_cnf(self, names=(), bool_names=()) -> Cnf:
        ann = {n: list(self.var_bits(n)) for n in names}
        bann = {n: self.bool_bit(n) for n in bool_names}
        return Cnf(self.num_vars, [list(c) for c in self.clauses], ann, bann,
                   {n: self.width for n in names})


def bitblast(formula, width: int, defs=None, bdefs=None, names=None, bool_names=()) -> Cnf:
    """CNF equisatisfiable with ``formula``.

    ``defs``/``bdefs`` map names to defining expressions (SSA style) and are
    inlined on demand.  ``names`` (default: all free bit-vector variables of
    the formula) are annotated for model decoding.
    """
    from ..frontend.lang import free_vars, bool_vars
    bl = Blaster(width, defs, bdefs)
    bl.assert_bit(bl.bexpr(formula))
    if names is None:
        names = sorted(free_vars(formula) - set(bl.defs))
    if not bool_names:
        bool_names = sorted(bool_vars(formula) - set(bl.bdefs))
    return bl.to_cnf(names, bool_names)
