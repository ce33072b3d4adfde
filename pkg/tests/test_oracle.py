import itertools

import pytest

from accelbmc.frontend.lang import Add, Assign, Assume, Cmp, Const, Havoc, Var
from accelbmc.oracle import (StateSpace, StateSpaceTooLarge, analyse, compose_pairs,
                             enum_relation, enumerate_reachable, error_reachable,
                             exact_diameter, project, project_pairs)

from conftest import compile_src


def values_of(cfa, var):
    i = cfa.vars.index(var)
    return {s[i] for _, s in enumerate_reachable(cfa)}


def naive_reachable(cfa):
    """Fixpoint iteration over (vertex, state) pairs without a queue."""
    space = StateSpace.of(cfa)
    from accelbmc.oracle import _expand
    reach = {(cfa.init, space.zero())}
    while True:
        new = {(e.dst, n) for v, s in reach for e in cfa.edges if e.src == v
               for n in _expand(space, e.stmt, s)}
        if new <= reach:
            return reach
        reach |= new


class TestEnumeration:
    def test_counter_values(self):
        cfa = compile_src("unsigned x := 0; while (x < 5) { x := x + 1; }")
        assert values_of(cfa, "x") == set(range(6))

    def test_havoc_fans_out(self):
        cfa = compile_src("unsigned x := *; unsigned y := x + x;")
        assert values_of(cfa, "x") == set(range(16))
        assert values_of(cfa, "y") == {0} | {(2 * v) % 16 for v in range(16)}

    def test_wraparound(self):
        cfa = compile_src("unsigned x := 0; while (true) { x := x + 3; }")
        assert values_of(cfa, "x") == set(range(16))  # 3 is a unit mod 16

    def test_matches_naive_fixpoint(self, random_w4):
        for _, cfa in random_w4[:10]:
            assert enumerate_reachable(cfa) == naive_reachable(cfa)

    def test_cap(self):
        cfa = compile_src("unsigned x := *, y := *, z := *;")
        with pytest.raises(StateSpaceTooLarge):
            enumerate_reachable(cfa, StateSpace.of(cfa, cap=100))

    def test_wide_programs_rejected(self):
        cfa = compile_src("unsigned x;", width=32)
        with pytest.raises(StateSpaceTooLarge):
            enumerate_reachable(cfa)

    def test_error_reachability(self):
        assert error_reachable(compile_src("unsigned x := *; assert(x != 9);"))
        assert not error_reachable(compile_src("unsigned x := *; assert(x <= 15);"))


class TestDiameter:
    def test_straight_line(self):
        cfa = compile_src("unsigned x := 0; x := 1; x := 2; x := 3;")
        assert exact_diameter(cfa) == len(cfa.edges)

    def test_counter(self):
        # every increment is its own trace step; the exit needs the last one
        cfa = compile_src("unsigned x := 0; while (x < 5) { x := x + 1; }")
        rep = analyse(cfa)
        assert rep.reachable == len(enumerate_reachable(cfa))
        assert rep.diameter >= 2 * 5
        assert rep.diameter_steps <= rep.diameter

    def test_steps_equal_edges_on_plain_programs(self, corpus_w4):
        for name in ("paper/fig1_safe.imp", "crafted_safe/count_up.imp"):
            if name in corpus_w4:
                cfa = corpus_w4[name]
                assert exact_diameter(cfa, measure="steps") == exact_diameter(cfa)

    def test_projection_never_increases(self, random_w4):
        for _, cfa in random_w4[:10]:
            full = exact_diameter(cfa)
            assert exact_diameter(cfa, keep_vars=cfa.vars[:1]) <= full

    def test_unknown_measure(self):
        with pytest.raises(ValueError):
            exact_diameter(compile_src("unsigned x;"), measure="bytes")


class TestRelations:
    SPACE = StateSpace(3, ("x", "y"))

    def brute(self, trace):
        from accelbmc.semantics import step
        out = set()
        for x, y in itertools.product(range(8), repeat=2):
            frontier = [{"x": x, "y": y}]
            for st in trace:
                frontier = [n for f in frontier for n in step(st, f, 3)]
            out |= {((x, y), (f["x"], f["y"])) for f in frontier}
        return out

    @pytest.mark.parametrize("trace", [
        [Assign("x", Add(Var("x"), Const(1)))],
        [Havoc("y"), Assume(Cmp("<", Var("y"), Var("x")))],
        [Assume(Cmp("==", Var("x"), Const(2))), Assign("y", Var("x"))],
    ])
    def test_enum_relation(self, trace):
        assert enum_relation(trace, self.SPACE) == self.brute(trace)

    def test_start_vars(self):
        rel = enum_relation([Assign("y", Var("x"))], self.SPACE, start_vars=["x"])
        assert {pre[1] for pre, _ in rel} == {0}
        assert len(rel) == 8

    def test_compose_and_project(self):
        inc = enum_relation([Assign("x", Add(Var("x"), Const(1)))], self.SPACE)
        two = enum_relation([Assign("x", Add(Var("x"), Const(2)))], self.SPACE)
        assert compose_pairs(inc, inc) == two
        assert project_pairs(two, ("x", "y"), ("x",)) == {((a,), ((a + 2) % 8,)) for a in range(8)}

    def test_project_reach(self):
        reach = {(0, (1, 2)), (1, (1, 3)), (1, (1, 4))}
        assert project(reach, ("x", "y"), ("x",)) == {(0, (1,)), (1, (1,))}
        assert project(reach, ("x", "y"), ("y",), vertices=[1]) == {(1, (3,)), (1, (4,))}
