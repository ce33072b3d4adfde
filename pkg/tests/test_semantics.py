import itertools

from hypothesis import given, settings
from hypothesis import strategies as st

from accelbmc.frontend.lang import (Add, Assign, Assume, Cmp, Const, Havoc, Overflow, Sub, Var,
                                    eval_bexpr)
from accelbmc.semantics import (compose, contains, feasible, holds_wlp, identity, power,
                                primed, step, trace_rel, trans_rel, wlp)

from strategies import conds, stmts

W = 2
VARS = ("x", "y")
STATES = [dict(zip(VARS, v)) for v in itertools.product(range(1 << W), repeat=len(VARS))]


def rel_pairs(rel):
    """Enumerate ``rel`` by brute force over all symbols, projecting the
    internal ones away."""
    internal = sorted(rel.internal_symbols())
    out = set()
    for pre in STATES:
        for post in STATES:
            env = dict(pre)
            env.update({primed(k): v for k, v in post.items()})
            for vals in itertools.product(range(1 << W), repeat=len(internal)):
                env.update(zip(internal, vals))
                if eval_bexpr(rel.formula, env, W):
                    out.add((tuple(pre.values()), tuple(post.values())))
                    break
    return out


def concrete_pairs(trace):
    out = set()
    for pre in STATES:
        frontier = [pre]
        for s in trace:
            frontier = [n for f in frontier for n in step(s, f, W)]
        out.update((tuple(pre.values()), tuple(f[v] for v in VARS)) for f in frontier)
    return out


def compose_sets(a, b):
    return {(p, r) for p, q in a for q2, r in b if q == q2}


class TestTransitionRelation:
    @settings(max_examples=150, deadline=None)
    @given(stmts())
    def test_matches_interpreter(self, s):
        assert rel_pairs(trans_rel(s, VARS, W)) == concrete_pairs([s])

    @settings(max_examples=30, deadline=None)
    @given(st.lists(stmts(), min_size=1, max_size=3))
    def test_trace_relation_matches_interpreter(self, trace):
        assert rel_pairs(trace_rel(trace, VARS, W)) == concrete_pairs(trace)

    def test_identity(self):
        assert rel_pairs(identity(VARS, W)) == {(tuple(s.values()),) * 2 for s in STATES}

    def test_power(self):
        inc = trans_rel(Assign("x", Sub(Var("x"), Const(1))), VARS, W)
        pairs = rel_pairs(power(inc, 3))
        assert pairs == concrete_pairs([Assign("x", Sub(Var("x"), Const(1)))] * 3)

    def test_overflow_flags_detect_wraparound(self):
        mask = (1 << W) - 1
        inc = [Assign("x", Add(Var("x"), Const(1))), Assume(Overflow((("x", 1, Const(1)),)))]
        assert rel_pairs(trace_rel(inc, VARS, W)) == {
            (p, q) for p, q in concrete_pairs(inc[:1]) if p[0] == mask}
        dec = [Assign("y", Sub(Var("y"), Var("x"))), Assume(Overflow((("y", -1, Var("x")),)))]
        assert rel_pairs(trace_rel(dec, VARS, W)) == {
            (p, q) for p, q in concrete_pairs(dec[:1]) if p[1] < p[0]}


class TestWlp:
    @settings(max_examples=150, deadline=None)
    @given(stmts(), conds(nowrap=False))
    def test_coherent_with_successors(self, s, post):
        pre = wlp(s, post, W)
        for state in STATES:
            expected = all(eval_bexpr(post, n, W) for n in step(s, state, W))
            assert holds_wlp(pre, state, W) == expected


class TestComposition:
    # brute-force enumeration is exponential in the intermediate symbols
    @settings(max_examples=12, deadline=None)
    @given(stmts(), stmts(), stmts())
    def test_associative(self, a, b, c):
        ra, rb, rc = (trans_rel(s, VARS, W) for s in (a, b, c))
        left = rel_pairs(compose(compose(ra, rb), rc))
        right = rel_pairs(compose(ra, compose(rb, rc)))
        assert left == right
        assert left == compose_sets(compose_sets(rel_pairs(ra), rel_pairs(rb)), rel_pairs(rc))


class TestFeasibility:
    @settings(max_examples=60, deadline=None)
    @given(st.lists(stmts(), min_size=1, max_size=3))
    def test_feasible_iff_some_concrete_run(self, trace):
        assert feasible(trace_rel(trace, VARS, W)) == bool(concrete_pairs(trace))

    def test_feasible_from_fixed_state(self):
        trace = [Havoc("x"), Assume(Cmp("==", Var("x"), Var("y")))]
        rel = trace_rel(trace, VARS, W)
        assert feasible(rel, {"y": 3})
        assert not feasible(trace_rel([Assume(Cmp(">", Var("x"), Var("y")))], VARS, W),
                            {"x": 0, "y": 0})

    def test_contains(self):
        rel = trace_rel([Assign("x", Sub(Var("x"), Const(1)))], VARS, W)
        assert contains(rel, {"x": 0, "y": 1}, {"x": 3, "y": 1})
        assert not contains(rel, {"x": 0, "y": 1}, {"x": 2, "y": 1})
