import itertools
import random

import pytest

from accelbmc.accel import accelerate_cfa
from accelbmc.frontend import dump_dot, parse_file, lower
from accelbmc.oracle import enumerate_reachable, project
from accelbmc.trace_automata import (AutomatonTooLarge, Nfa, build_restriction_nfa,
                                     determinize, dump_dfa_dot, inline, possible_states,
                                     restrict, symbol_name)

from conftest import GOLDEN, compile_src


def words(alphabet, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def random_nfa(rng, num_symbols):
    alphabet = tuple(range(num_symbols))
    n = rng.randint(1, 5)
    trans = {}
    for q in range(n):
        for s in alphabet + (None,):
            if rng.random() < (0.15 if s is None else 0.4):
                trans[(q, s)] = {rng.randrange(n) for _ in range(rng.randint(1, 2))}
    accepting = frozenset(q for q in range(n) if rng.random() < 0.3)
    return Nfa(n, alphabet, trans, 0, accepting)


def contains_pattern(word, patterns) -> bool:
    """Independent check: some pattern occurs contiguously in ``word``."""
    return any(tuple(word[i:i + len(p)]) == tuple(p)
               for p in patterns for i in range(len(word) - len(p) + 1))


def pattern_nfa(patterns, alphabet):
    """Build the restriction NFA shape for given patterns without a CFA."""
    trans, n, accept = {}, 1, None
    chain = []
    for p in patterns:
        chain.append(list(range(n, n + len(p) - 1)))
        n += len(p) - 1
    accept = n
    n += 1
    for p, mids in zip(patterns, chain):
        states = [0] + mids + [accept]
        for k, s in enumerate(p):
            trans.setdefault((states[k], s), set()).add(states[k + 1])
    for s in alphabet:
        trans.setdefault((0, s), set()).add(0)
        trans.setdefault((accept, s), set()).add(accept)
    return Nfa(n, tuple(alphabet), trans, 0, frozenset({accept}), tuple(patterns))


def projected_reach(base, cfa):
    return project(enumerate_reachable(cfa), cfa.vars, base.vars, range(base.num_vertices))


SELF_LOOP = "unsigned x := 0; while (x < 12) { x := x + 1; }"


class TestDeterminisation:
    @pytest.mark.parametrize("seed", range(25))
    def test_random_nfas_short_alphabet(self, seed):
        rng = random.Random(seed)
        nfa = random_nfa(rng, 3)
        dfa = determinize(nfa)
        for w in words(nfa.alphabet, 7):
            assert dfa.accepts(w) == nfa.accepts(w), w

    @pytest.mark.parametrize("seed", range(10))
    def test_random_nfas_wide_alphabet(self, seed):
        rng = random.Random(1000 + seed)
        nfa = random_nfa(rng, 5)
        dfa = determinize(nfa)
        for w in words(nfa.alphabet, 5):
            assert dfa.accepts(w) == nfa.accepts(w), w

    def test_total(self):
        dfa = determinize(random_nfa(random.Random(3), 4))
        for q in range(dfa.num_states):
            for s in dfa.alphabet:
                assert 0 <= dfa.step(q, s) < dfa.num_states

    def test_limit(self):
        # (a|b)* a (a|b)^5: the classic exponential blow-up
        k = 5
        trans = {(0, "a"): {0, 1}, (0, "b"): {0}}
        for q in range(1, k + 1):
            trans[(q, "a")] = {q + 1}
            trans[(q, "b")] = {q + 1}
        nfa = Nfa(k + 2, ("a", "b"), trans, 0, frozenset({k + 1}))
        assert determinize(nfa).num_states == 2 ** (k + 1)
        with pytest.raises(AutomatonTooLarge):
            determinize(nfa, limit=2 ** k)


class TestPatternAutomata:
    @pytest.mark.parametrize("seed", range(20))
    def test_matches_substring_check(self, seed):
        rng = random.Random(seed)
        alphabet = tuple(range(rng.randint(2, 4)))
        patterns = [tuple(rng.choice(alphabet) for _ in range(rng.randint(1, 4)))
                    for _ in range(rng.randint(1, 3))]
        nfa = pattern_nfa(patterns, alphabet)
        dfa = determinize(nfa)
        for w in words(alphabet, 6):
            assert dfa.accepts(w) == contains_pattern(w, patterns), (patterns, w)

    @pytest.mark.parametrize("seed", range(20))
    def test_size_linear_in_patterns(self, seed):
        # substring automata never need more states than pattern prefixes + sink
        rng = random.Random(seed)
        alphabet = tuple(range(3))
        patterns = [tuple(rng.choice(alphabet) for _ in range(rng.randint(1, 6)))
                    for _ in range(rng.randint(1, 4))]
        dfa = determinize(pattern_nfa(patterns, alphabet))
        assert dfa.num_states <= 1 + sum(len(p) - 1 for p in patterns) + 1
        assert dfa.sink() is not None

    def test_restriction_nfa_of_program(self):
        acc = accelerate_cfa(compile_src(SELF_LOOP))
        nfa = build_restriction_nfa(acc)
        (lp,) = acc.loops
        assert set(nfa.patterns) == {lp.pattern, (lp.symbol, lp.symbol)}
        dfa = determinize(nfa)
        for w in words(nfa.alphabet, 4):
            assert dfa.accepts(w) == contains_pattern(w, nfa.patterns)

    def test_no_loops_accepts_nothing(self):
        acc = accelerate_cfa(compile_src("unsigned x := 1; assert(x == 1);"))
        dfa = determinize(build_restriction_nfa(acc))
        assert dfa.num_states == 1 and not dfa.accepting


class TestInstrumentation:
    def test_accepting_state_never_held(self):
        acc = accelerate_cfa(compile_src(SELF_LOOP))
        dfa = determinize(build_restriction_nfa(acc))
        for states in possible_states(acc, dfa).values():
            assert not set(states) & dfa.accepting

    def test_transitions_into_sink_dropped(self):
        ta = restrict(accelerate_cfa(compile_src(SELF_LOOP)))
        assert ta.dropped >= 2  # acc.acc and the split looping trace
        assert ta.g in ta.cfa.vars

    def test_too_small_width(self):
        acc = accelerate_cfa(compile_src(SELF_LOOP, width=1))
        dfa = determinize(build_restriction_nfa(acc))
        with pytest.raises(AutomatonTooLarge):
            inline(acc, dfa)

    def test_greedy_restriction(self):
        src = ("unsigned x := 0, y := 0; while (x < 9) { x := x + 1; } "
               "while (y < 9) { y := y + 2; } while (x > 0) { x := x - 1; }")
        acc = accelerate_cfa(compile_src(src))
        full = determinize(build_restriction_nfa(acc)).num_states
        ta = restrict(acc, limit=full // 2)
        assert ta.notes and all("left unrestricted" in n for n in ta.notes)
        assert not all(lp.restricted for lp in acc.loops)
        assert any(lp.restricted for lp in acc.loops)
        assert ta.dfa.num_states < full

    @pytest.mark.parametrize("src", [
        SELF_LOOP,
        "unsigned x := *, y := 0; while (x > 0) { x := x - 1; y := y + 1; } assert(y != 5);",
        ("unsigned x := 0, y := 0; while (x < 12) { if (*) { x := x + 1; } "
         "else { x := x + 2; } y := y + 1; }"),
    ])
    def test_reachability_preserved(self, src):
        cfa = compile_src(src)
        acc = accelerate_cfa(cfa)
        ta = restrict(acc)
        expected = projected_reach(cfa, cfa)
        assert projected_reach(cfa, acc.cfa) == expected
        assert projected_reach(cfa, ta.cfa) == expected

    def test_reachability_on_random_programs(self, random_w4):
        for src, cfa in random_w4[:12]:
            ta = restrict(accelerate_cfa(cfa))
            assert projected_reach(cfa, ta.cfa) == projected_reach(cfa, cfa), src


@pytest.fixture(scope="module")
def fig7():
    cfa = lower(parse_file(GOLDEN / "fig7_selfloop.imp"))
    acc = accelerate_cfa(cfa)
    return acc, restrict(acc)


class TestGoldens:
    def test_accelerated(self, fig7):
        acc, _ = fig7
        assert dump_dot(acc.cfa) == (GOLDEN / "fig7_accelerated.dot").read_text()

    def test_dfa(self, fig7):
        _, ta = fig7
        assert dump_dfa_dot(ta.dfa) == (GOLDEN / "fig7_dfa.dot").read_text()
        assert ta.dfa.num_states == 4 and ta.dfa.sink() == 3

    def test_instrumented(self, fig7):
        _, ta = fig7
        text = dump_dot(ta.cfa)
        assert text == (GOLDEN / "fig7_instrumented.dot").read_text()
        assert "g:=0" in text and "[g<=1]" in text

    def test_symbol_names(self):
        assert symbol_name(("acc", 2)) == "acc2"
        assert symbol_name(("occ", 7)) == "e7"
