"""Bounded model checking with loop acceleration and trace automata."""

__version__ = "0.1.0"
