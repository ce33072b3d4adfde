import itertools

import pytest

from accelbmc.bmc import back_edges
from accelbmc.frontend import (Assign, Assume, Havoc, ParseError, Skip, dump_dot,
                               eval_bexpr, parse)
from accelbmc.frontend.lang import Const, eval_expr
from accelbmc.frontend.parser import read_expectation

from conftest import compile_src, corpus_files, compile_file


class TestParser:
    def test_declarations_and_widths(self):
        prog = parse("unsigned x := 3, y; unsigned z := *; x := x + y;", 8)
        assert prog.var_names == ["x", "y", "z"]
        assert prog.width == 8
        assert [d.nondet for d in prog.decls] == [False, True, True]

    def test_default_width_is_32(self):
        assert parse("unsigned x; skip;").width == 32

    @pytest.mark.parametrize("width", [0, 65])
    def test_width_out_of_range(self, width):
        with pytest.raises(ParseError):
            parse("unsigned x; skip;", width)

    @pytest.mark.parametrize("src, fragment", [
        ("unsigned x; y := 1;", "undeclared"),
        ("unsigned x; unsigned x;", "duplicate"),
        ("unsigned x; x := 1; unsigned y;", "declarations must precede"),
        ("unsigned x; while (x < 1) { x := x + 1;", "unclosed"),
        ("unsigned x; x := 1 + *;", "nondet"),
        ("", "empty"),
        ("unsigned x := x;", "undeclared"),
    ])
    def test_errors_carry_position(self, src, fragment):
        with pytest.raises(ParseError) as exc:
            parse(src)
        assert fragment in str(exc.value)
        assert ":" in str(exc.value)

    def test_expectation_header(self):
        assert read_expectation("// EXPECT: safe\nunsigned x;") == "safe"
        assert read_expectation("//EXPECT: UNSAFE\n") == "unsafe"
        assert read_expectation("unsigned x;") is None

    def test_hex_literals_and_precedence(self):
        prog = parse("unsigned x := 0x10 + 2 * 3;", 16)
        env = {}
        assert eval_expr(prog.decls[0].init, env, 16) == 22

    def test_comparison_operators(self):
        prog = parse("unsigned x, y; assume(x < y && !(x == y) || x >= y); assume(x = y);", 4)
        assert len(prog.body) == 2


class TestLowering:
    SRC = """
    unsigned n := *;
    unsigned x := n, y := 0;
    while (x > 0) {
      x := x - 1;
      if (*) { y := y + 1; } else { skip; }
      assert(y <= n);
    }
    while (y > 0) { y := y - 1; }
    assert(x == 0);
    """

    def test_deterministic(self):
        a, b = compile_src(self.SRC), compile_src(self.SRC)
        assert a == b
        assert [e.occ for e in a.edges] == [e.occ for e in b.edges]

    def test_one_error_vertex_per_assert_and_one_back_edge_per_loop(self):
        cfa = compile_src(self.SRC)
        assert len(cfa.errors) == 2
        assert len(back_edges(cfa)) == 2

    def test_error_vertices_are_sinks(self):
        cfa = compile_src(self.SRC)
        assert not [e for e in cfa.edges if e.src in cfa.errors]

    @pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.name)
    def test_corpus_counts(self, path):
        text = "\n".join(l for l in path.read_text().splitlines()
                         if not l.lstrip().startswith("//"))
        cfa = compile_file(path)
        assert len(cfa.errors) == text.count("assert(")
        assert len(back_edges(cfa)) == text.count("while (")

    def test_assert_guards_partition_states(self):
        # the guard into each error vertex and its fall-through sibling
        # are complementary on every state
        cfa = compile_src(self.SRC, width=3)
        for err in cfa.errors:
            (into,) = [e for e in cfa.edges if e.dst == err]
            siblings = [e for e in cfa.edges if e.src == into.src and e.dst != err
                        and isinstance(e.stmt, Assume)]
            assert len(siblings) == 1
            for values in itertools.product(range(8), repeat=len(cfa.vars)):
                env = dict(zip(cfa.vars, values))
                a = eval_bexpr(into.stmt.cond, env, 3)
                b = eval_bexpr(siblings[0].stmt.cond, env, 3)
                assert a != b

    def test_declarations_become_entry_edges(self):
        cfa = compile_src("unsigned a := 2, b; skip;")
        stmts = [e.stmt for e in cfa.edges]
        assert stmts[0] == Assign("a", Const(2))
        assert stmts[1] == Havoc("b")
        assert isinstance(stmts[2], Skip)

    def test_infinite_loop_has_no_exit(self):
        cfa = compile_src("unsigned x; while (true) { x := x + 1; }")
        (back,) = back_edges(cfa)
        assert back.dst == back.src  # the body edge is the self-loop
        assert all(not isinstance(e.stmt, Assume) for e in cfa.edges)

    def test_nondet_loop_may_exit_every_iteration(self):
        cfa = compile_src("unsigned x; while (*) { x := x + 1; }")
        head = back_edges(cfa)[0].dst
        assert len([e for e in cfa.edges if e.src == head]) == 2

    def test_unreachable_error_warns(self):
        cfa = compile_src("unsigned x; while (true) { skip; } assert(x == 0);")
        assert any("unreachable" in w for w in cfa.warnings)


class TestDot:
    def test_shapes_and_labels(self):
        cfa = compile_src("unsigned x := 1; assert(x == 1);")
        dot = dump_dot(cfa)
        assert dot.startswith("digraph cfa {")
        assert dot.count("doublecircle") == 1
        assert '"x:=1"' in dot
        assert "penwidth=2" in dot  # the initial vertex

    def test_quotes_are_escaped(self):
        from accelbmc.frontend.dot import _quote
        assert _quote('a"b') == '"a\\"b"'
