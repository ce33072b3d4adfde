"""Recursive-descent parser for the ``.imp`` mini-language.

Grammar::

    program := decl* stmt*
    decl    := "unsigned" id (":=" expr)? ("," id (":=" expr)?)* ";"
    stmt    := id ":=" expr ";" | "assume" "(" bexpr ")" ";"
             | "assert" "(" bexpr ")" ";" | "skip" ";"
             | "if" "(" cond ")" block ("else" block)?
             | "while" "(" cond ")" block
    cond    := bexpr | "*"
    expr    := term (("+"|"-") term)*
    term    := atom ("*" const)?
    atom    := id | const | "(" expr ")"

``*`` on its own is nondeterminism: allowed as the whole right-hand side of
an assignment/initializer and as a branch condition.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .lang import (BConst, BExpr, Cmp, Const, Expr, Var, Add, Sub, Mul, conj,
                   disj, Not)

DEFAULT_WIDTH = 32


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0, path: str = "<input>"):
        super().__init__(f"{path}:{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


@dataclass
class SourceProgram:
    text: str
    path: str = "<input>"


# ---------------------------------------------------------------------------
# AST


@dataclass
class SAssign:
    var: str
    expr: Optional[Expr]  # None means nondet
    line: int = 0


@dataclass
class SAssume:
    cond: BExpr
    line: int = 0


@dataclass
class SAssert:
    cond: BExpr
    line: int = 0


@dataclass
class SSkip:
    line: int = 0


@dataclass
class SIf:
    cond: Optional[BExpr]  # None means nondeterministic choice
    then: list
    orelse: list
    line: int = 0


@dataclass
class SWhile:
    cond: Optional[BExpr]
    body: list
    line: int = 0


@dataclass
class Decl:
    name: str
    init: Optional[Expr]
    nondet: bool
    line: int = 0


@dataclass
class Program:
    decls: list
    body: list
    width: int = DEFAULT_WIDTH
    path: str = "<input>"
    expect: Optional[str] = None

    @property
    def var_names(self) -> list:
        return [d.name for d in self.decls]


# ---------------------------------------------------------------------------
# Lexer

KEYWORDS = {"unsigned", "assume", "assert", "if", "else", "while", "skip",
            "true", "false"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<num>0[xX][0-9a-fA-F]+|\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|==|!=|<=|>=|&&|\|\||[-+*<>=!(){};,])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, path: str = "<input>") -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line,
                             pos - line_start + 1, path)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("ws", "comment"):
            pass
        elif kind == "id" and m.group() in KEYWORDS:
            tokens.append(Token("kw", m.group(), line, col))
        else:
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


_EXPECT_RE = re.compile(r"//\s*EXPECT:\s*(safe|unsafe)", re.IGNORECASE)


def read_expectation(text: str) -> Optional[str]:
    m = _EXPECT_RE.search(text)
    return m.group(1).lower() if m else None


# ---------------------------------------------------------------------------
# Parser


@dataclass
class _Parser:
    tokens: list
    path: str
    pos: int = 0
    declared: dict = field(default_factory=dict)

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        where = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{msg} (at {where})", tok.line, tok.col, self.path)

    def peek(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def accept(self, text: str) -> bool:
        if self.peek(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.peek(text):
            self.error(f"expected {text!r}")
        t = self.tok
        self.pos += 1
        return t

    def ident(self) -> Token:
        if self.tok.kind != "id":
            self.error("expected identifier")
        t = self.tok
        self.pos += 1
        return t

    def use(self, tok: Token) -> str:
        if tok.text not in self.declared:
            raise ParseError(f"undeclared variable {tok.text!r}", tok.line, tok.col, self.path)
        return tok.text

    # -- program ----------------------------------------------------------

    def program(self) -> tuple:
        decls = []
        while self.peek("unsigned"):
            decls.extend(self.decl())
        body = []
        while self.tok.kind != "eof":
            if self.peek("unsigned"):
                self.error("declarations must precede statements")
            body.append(self.stmt())
        return decls, body

    def decl(self) -> list:
        self.expect("unsigned")
        out = []
        while True:
            name_tok = self.ident()
            if name_tok.text in self.declared:
                raise ParseError(f"duplicate declaration of {name_tok.text!r}",
                                 name_tok.line, name_tok.col, self.path)
            init, nondet = None, True
            if self.accept(":="):
                if self.accept("*"):
                    init = None
                else:
                    init = self.expr()
                    nondet = False
            # registered after the initializer: `unsigned x := x` is an error
            self.declared[name_tok.text] = True
            out.append(Decl(name_tok.text, init, nondet, name_tok.line))
            if not self.accept(","):
                break
        self.expect(";")
        return out

    def block(self) -> list:
        self.expect("{")
        out = []
        while not self.peek("}"):
            if self.tok.kind == "eof":
                self.error("unclosed block")
            out.append(self.stmt())
        self.expect("}")
        return out

    def stmt(self):
        t = self.tok
        if self.accept("skip"):
            self.expect(";")
            return SSkip(t.line)
        if self.accept("assume"):
            self.expect("(")
            c = self.bexpr()
            self.expect(")")
            self.expect(";")
            return SAssume(c, t.line)
        if self.accept("assert"):
            self.expect("(")
            c = self.bexpr()
            self.expect(")")
            self.expect(";")
            return SAssert(c, t.line)
        if self.accept("if"):
            cond = self.cond()
            then = self.block()
            orelse = self.block() if self.accept("else") else []
            return SIf(cond, then, orelse, t.line)
        if self.accept("while"):
            cond = self.cond()
            return SWhile(cond, self.block(), t.line)
        if t.kind == "id":
            name = self.use(self.ident())
            self.expect(":=")
            if self.accept("*"):
                rhs = None
            else:
                rhs = self.expr()
            self.expect(";")
            return SAssign(name, rhs, t.line)
        self.error("expected statement")

    def cond(self) -> Optional[BExpr]:
        self.expect("(")
        if self.peek("*") and self.tokens[self.pos + 1].text == ")":
            self.pos += 2
            return None
        c = self.bexpr()
        self.expect(")")
        return c

    # -- boolean expressions ------------------------------------------------

    def bexpr(self) -> BExpr:
        parts = [self.bconj()]
        while self.accept("||"):
            parts.append(self.bconj())
        return disj(*parts) if len(parts) > 1 else parts[0]

    def bconj(self) -> BExpr:
        parts = [self.bunary()]
        while self.accept("&&"):
            parts.append(self.bunary())
        return conj(*parts) if len(parts) > 1 else parts[0]

    def bunary(self) -> BExpr:
        if self.accept("!"):
            return Not(self.bunary())
        if self.accept("true"):
            return BConst(True)
        if self.accept("false"):
            return BConst(False)
        if self.peek("("):
            # either a parenthesised boolean or a comparison starting with
            # a parenthesised arithmetic expression
            save = self.pos
            try:
                return self.comparison()
            except ParseError:
                self.pos = save
            self.expect("(")
            b = self.bexpr()
            self.expect(")")
            return b
        return self.comparison()

    def comparison(self) -> BExpr:
        a = self.expr()
        t = self.tok
        ops = {"==": "==", "=": "==", "!=": "!=", "<": "<", "<=": "<=",
               ">": ">", ">=": ">="}
        if t.kind == "op" and t.text in ops:
            self.pos += 1
            return Cmp(ops[t.text], a, self.expr())
        self.error("expected comparison operator")

    # -- arithmetic -----------------------------------------------------------

    def expr(self) -> Expr:
        e = self.term()
        while True:
            if self.accept("+"):
                e = Add(e, self.term())
            elif self.accept("-"):
                e = Sub(e, self.term())
            else:
                return e

    def term(self) -> Expr:
        a = self.atom()
        if self.peek("*"):
            self.pos += 1
            if self.tok.kind != "num":
                self.error("multiplication only by constants")
            c = self.number()
            return Mul(a, c)
        return a

    def number(self) -> Const:
        t = self.tok
        self.pos += 1
        return Const(int(t.text, 0))

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            return self.number()
        if t.kind == "id":
            return Var(self.use(self.ident()))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.peek("*"):
            self.error("nondet '*' only allowed as a whole right-hand side")
        self.error("expected expression")


def parse(src, width: Optional[int] = None) -> Program:
    """Parse a :class:`SourceProgram` (or raw text) into a :class:`Program`."""
    if isinstance(src, str):
        src = SourceProgram(src)
    width = DEFAULT_WIDTH if width is None else width
    if not 1 <= width <= 64:
        raise ParseError(f"bit width {width} outside 1..64", path=src.path)
    tokens = tokenize(src.text, src.path)
    if tokens[0].kind == "eof":
        raise ParseError("empty program", 1, 1, src.path)
    p = _Parser(tokens, src.path)
    decls, body = p.program()
    return Program(decls, body, width, src.path, read_expectation(src.text))


def parse_file(path, width: Optional[int] = None) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse(SourceProgram(fh.read(), str(path)), width)
