"""Seeded generator of small random programs.

The programs are written in the surface language so that they also exercise
the parser.  They favour the loop shapes the accelerator handles (counters
stepping by constants, resets, guards comparing a counter to a constant or
to another variable) but include havocs, branches inside loop bodies and
nested loops, which exercise the fallback paths.  At width 4 their state
spaces stay small enough for exhaustive enumeration.
"""
from __future__ import annotations

import argparse
import random
from dataclasses import dataclass
from typing import Optional

NAMES = ("x", "y", "z")


@dataclass
class GenConfig:
    width: int = 4
    min_vars: int = 2
    max_vars: int = 3
    max_loops: int = 2
    max_body: int = 3
    p_branch: float = 0.25  # `if (*)` inside a loop body
    p_havoc: float = 0.1  # `x := *` inside a loop body
    p_nested: float = 0.1
    p_nondet_init: float = 0.4


class _Gen:
    def __init__(self, rng: random.Random, cfg: GenConfig):
        self.rng = rng
        self.cfg = cfg
        self.top = (1 << cfg.width) - 1
        self.vars: list = []

    def const(self, lo: int = 0, hi: Optional[int] = None) -> int:
        return self.rng.randint(lo, self.top if hi is None else hi)

    def var(self, exclude=()) -> str:
        pool = [v for v in self.vars if v not in exclude] or self.vars
        return self.rng.choice(pool)

    def guard(self) -> str:
        r = self.rng
        x = self.var()
        kind = r.randrange(6)
        if kind == 0:
            return f"{x} > 0"
        if kind == 1:
            return f"{x} < {self.const(1)}"
        if kind == 2:
            return f"{x} <= {self.const(0, self.top - 1)}"
        if kind == 3:
            return f"{x} >= {self.const(1)}"
        if kind == 4 and len(self.vars) > 1:
            return f"{x} < {self.var(exclude=(x,))}"
        return f"{x} != {self.const()}"

    def update(self) -> str:
        r = self.rng
        x = self.var()
        if r.random() < self.cfg.p_havoc:
            return f"{x} := *;"
        kind = r.randrange(5)
        if kind <= 1:
            return f"{x} := {x} + {self.const(1, 3)};"
        if kind == 2:
            return f"{x} := {x} - {self.const(1, 3)};"
        if kind == 3:
            return f"{x} := {self.const()};"
        y = self.var(exclude=(x,))
        return f"{x} := {x} + {y};" if y != x else f"{x} := {x} + 1;"

    def body(self, depth: int) -> list:
        r = self.rng
        out = []
        for _ in range(r.randint(1, self.cfg.max_body)):
            if depth == 0 and r.random() < self.cfg.p_nested:
                out += self.loop(depth + 1)
            elif r.random() < self.cfg.p_branch:
                a, b = self.update(), self.update()
                out += ["if (*) {", "  " + a, "} else {", "  " + b, "}"]
            else:
                out.append(self.update())
        return out

    def loop(self, depth: int) -> list:
        lines = [f"while ({self.guard()}) {{"]
        lines += ["  " + s for s in self.body(depth)]
        lines.append("}")
        return lines

    def program(self) -> str:
        r, cfg = self.rng, self.cfg
        n = r.randint(cfg.min_vars, cfg.max_vars)
        self.vars = list(NAMES[:n])
        lines = []
        for v in self.vars:
            init = "*" if r.random() < cfg.p_nondet_init else str(self.const(0, 3))
            lines.append(f"unsigned {v} := {init};")
        for _ in range(r.randint(min(1, cfg.max_loops), cfg.max_loops)):
            if r.random() < 0.3:
                lines.append(f"assume({self.guard()});")
            lines += self.loop(0)
        x = self.var()
        if r.random() < 0.5:
            lines.append(f"assert({x} != {self.const()});")
        else:
            lines.append(f"assert({self.guard()});")
        return "\n".join(lines) + "\n"


def random_program(seed: int, cfg: Optional[GenConfig] = None) -> str:
    """Source text of the program determined by ``seed``."""
    return _Gen(random.Random(seed), cfg or GenConfig()).program()


def random_programs(seed: int, count: int, cfg: Optional[GenConfig] = None) -> list:
    rng = random.Random(seed)
    return [random_program(rng.getrandbits(32), cfg) for _ in range(count)]


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description="Print random programs.")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    args = p.parse_args(argv)
    for i, text in enumerate(random_programs(args.seed, args.count)):
        print(f"// program {i}\n{text}")


if __name__ == "__main__":
    main()
