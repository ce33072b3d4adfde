import random
import sys
import time
from pathlib import Path

import pytest

from accelbmc.frontend.lang import Add, And, Cmp, Const, Mul, NoWrap, Sub, Var, eval_bexpr
from accelbmc.satcore import (Blaster, ResourceOut, bitblast, check_formula, export_dimacs,
                              parse_dimacs, solve, solve_external)
from accelbmc.satcore.dimacs import parse_solver_output

from oracles import (bv_satisfiable, random_3cnf, random_bv_formula, satisfies,
                     truth_table_sat)

TOOLS = Path(__file__).resolve().parent / "tools"


def pigeonhole(holes):
    """``holes + 1`` pigeons into ``holes`` holes: unsatisfiable."""
    var = lambda p, h: p * holes + h + 1
    clauses = [[var(p, h) for h in range(holes)] for p in range(holes + 1)]
    for h in range(holes):
        for p in range(holes + 1):
            for q in range(p + 1, holes + 1):
                clauses.append([-var(p, h), -var(q, h)])
    return (holes + 1) * holes, clauses


class TestCdcl:
    def test_random_3cnf_against_truth_tables(self):
        rng = random.Random(7)
        for _ in range(60):
            n, clauses = random_3cnf(rng, 14)
            res = solve((n, clauses), seed=rng.randrange(100))
            assert res.satisfiable == truth_table_sat(n, clauses)
            if res.satisfiable:
                assert satisfies(res.model, clauses)

    def test_empty_and_trivial(self):
        assert solve((0, [])).satisfiable
        assert not solve((1, [[1], [-1]])).satisfiable
        assert not solve((1, [[]])).satisfiable
        res = solve((3, [[1, 2], [-1], [-2, 3]]))
        assert res.model[2] and res.model[3] and not res.model[1]

    def test_duplicate_and_tautological_literals(self):
        assert solve((2, [[1, 1, -1], [2, 2]])).satisfiable
        assert not solve((2, [[1, 1], [-1, -1]])).satisfiable

    def test_pigeonhole_unsat(self):
        assert not solve(pigeonhole(5)).satisfiable

    def test_conflict_budget(self):
        with pytest.raises(ResourceOut):
            solve(pigeonhole(8), conflict_budget=10)

    def test_deadline(self):
        with pytest.raises(ResourceOut):
            solve(pigeonhole(9), deadline=time.monotonic() - 1)

    def test_deterministic_under_seed(self):
        rng = random.Random(3)
        for _ in range(10):
            n, clauses = random_3cnf(rng, 20)
            a = solve((n, clauses), seed=5)
            b = solve((n, clauses), seed=5)
            assert a.satisfiable == b.satisfiable
            assert a.model == b.model
            assert a.stats == b.stats


class TestBitblast:
    def test_random_formulas_against_evaluation(self):
        rng = random.Random(11)
        for _ in range(60):
            f = random_bv_formula(rng)
            model = check_formula(f, 4)
            assert (model is not None) == bv_satisfiable(f, 4)
            if model is not None:
                env = {n: model.get(n, 0) for n in ("x", "y", "z")}
                assert eval_bexpr(f, env, 4)

    @pytest.mark.parametrize("op", ["==", "!=", "<", "<=", ">", ">="])
    def test_comparisons_exhaustive(self, op):
        # every pair of width-3 values: the blasted comparison equals Python's
        for a in range(8):
            for b in range(8):
                f = And((Cmp("==", Var("x"), Const(a)), Cmp("==", Var("y"), Const(b)),
                         Cmp(op, Var("x"), Var("y"))))
                assert (check_formula(f, 3) is not None) == eval_bexpr(
                    Cmp(op, Const(a), Const(b)), {}, 3)

    @pytest.mark.parametrize("make", [Add, Sub, Mul])
    def test_arithmetic_exhaustive(self, make):
        for a in range(16):
            for b in range(16):
                f = And((Cmp("==", Var("x"), Const(a)), Cmp("==", Var("y"), Const(b)),
                         Cmp("==", Var("z"), make(Var("x"), Var("y")))))
                m = check_formula(f, 4)
                from accelbmc.frontend.lang import eval_expr
                assert m["z"] == eval_expr(make(Const(a), Const(b)), {}, 4)

    def test_nowrap_exact(self):
        e = Sub(Add(Var("x"), Mul(Const(3), Var("y"))), Const(5))
        for x in range(16):
            for y in range(16):
                f = And((Cmp("==", Var("x"), Const(x)), Cmp("==", Var("y"), Const(y)), NoWrap(e)))
                assert (check_formula(f, 4) is not None) == (0 <= x + 3 * y - 5 < 16)

    def test_definitions_are_inlined(self):
        defs = {"t": Add(Var("x"), Const(1))}
        cnf = bitblast(Cmp("==", Var("t"), Const(0)), 4, defs, names=["x"])
        res = solve(cnf)
        assert res.satisfiable
        assert cnf.decode(res.model)["x"] == 15

    def test_cone_keeps_only_relevant_gates(self):
        bl = Blaster(4)
        a = bl.bexpr(Cmp("==", Var("x"), Const(3)))
        bl.bexpr(Cmp("<", Mul(Var("y"), Var("y")), Const(7)))  # unrelated gates
        bl.assert_bit(a)
        assert len(bl.cone([a])) < len(bl.clauses)


class TestDimacs:
    def test_round_trip(self):
        n, clauses = random_3cnf(random.Random(1), 10)
        cnf = bitblast(Cmp("==", Var("x"), Const(1)), 2)
        text = export_dimacs(cnf)
        assert parse_dimacs(text) == (cnf.num_vars, cnf.clauses)
        assert parse_dimacs(f"c comment\np cnf {n} {len(clauses)}\n" +
                            "\n".join(" ".join(map(str, c)) + " 0" for c in clauses)) == (n, clauses)

    def test_clause_spanning_lines(self):
        assert parse_dimacs("p cnf 3 1\n1 2\n3 0\n") == (3, [[1, 2, 3]])

    @pytest.mark.parametrize("text", ["1 2 0\n", "p dnf 2 1\n1 0\n"])
    def test_bad_input(self, text):
        with pytest.raises(ValueError):
            parse_dimacs(text)

    def test_solver_output(self):
        res = parse_solver_output("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 3)
        assert res.model == {1: True, 2: False, 3: True}
        assert not parse_solver_output("s UNSATISFIABLE\n", 3).satisfiable
        with pytest.raises(ResourceOut):
            parse_solver_output("s UNKNOWN\n", 3)

    def test_external_solver_agrees(self):
        cmd = f"{sys.executable} {TOOLS / 'dimacs_solver.py'}"
        rng = random.Random(5)
        for _ in range(5):
            n, clauses = random_3cnf(rng, 12)
            from accelbmc.satcore import Cnf
            ext = solve_external(Cnf(n, clauses), cmd, timeout=60)
            assert ext.satisfiable == truth_table_sat(n, clauses)
            if ext.satisfiable:
                assert satisfies(ext.model, clauses)
