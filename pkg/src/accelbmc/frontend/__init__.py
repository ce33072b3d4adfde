"""Parsing, lowering and rendering of ``.imp`` programs."""
from .dot import dump_dot
from .lang import (Add, And, Assign, Assume, BConst, BVar, Cfa, CfaBuilder,
                   Cmp, Const, Edge, EvalError, Havoc, Ite, Mul, Nondet,
                   NoWrap, Not, Or, Overflow, Skip, Sub, Var, eval_bexpr,
                   eval_expr)
from .lower import compile_source, lower
from .parser import ParseError, Program, SourceProgram, parse, parse_file

__all__ = [
    "Add", "And", "Assign", "Assume", "BConst", "BVar", "Cfa", "CfaBuilder",
    "Cmp", "Const", "Edge", "EvalError", "Havoc", "Ite", "Mul", "Nondet",
    "NoWrap", "Not", "Or", "Overflow", "ParseError", "Program", "Skip",
    "SourceProgram", "Sub", "Var", "compile_source", "dump_dot", "eval_bexpr",
    "eval_expr", "lower", "parse", "parse_file",
]
