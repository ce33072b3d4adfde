import itertools
from pathlib import Path

import pytest

from accelbmc.frontend import lower, parse, parse_file
from accelbmc.frontend.lang import bool_vars, eval_bexpr, free_vars
from accelbmc.oracle import StateSpaceTooLarge, enumerate_reachable
from accelbmc.randprog import random_programs

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"
GOLDEN = Path(__file__).resolve().parent / "golden"

RANDOM_SEED = 20240601
RANDOM_COUNT = 24


def corpus_files():
    return sorted(CORPUS.rglob("*.imp"))


def compile_src(src, width=4):
    return lower(parse(src, width))


def compile_file(path, width=None):
    return lower(parse_file(path, width))


def in_bounds(cfa) -> bool:
    """True when the oracle can enumerate ``cfa``."""
    try:
        enumerate_reachable(cfa)
    except StateSpaceTooLarge:
        return False
    return True


def random_sources(count=RANDOM_COUNT, seed=RANDOM_SEED):
    return random_programs(seed, count)


def models(formula, width, names=None):
    """All satisfying assignments of ``formula`` by brute force."""
    bv = sorted(free_vars(formula)) if names is None else list(names)
    bb = sorted(bool_vars(formula))
    out = []
    for values in itertools.product(range(1 << width), repeat=len(bv)):
        env = dict(zip(bv, values))
        for flags in itertools.product((False, True), repeat=len(bb)):
            env.update(zip(bb, flags))
            if eval_bexpr(formula, env, width):
                out.append(dict(env))
    return out


@pytest.fixture(scope="session")
def corpus_w4():
    """Corpus programs at width 4 that fit the oracle, by name."""
    out = {}
    for f in corpus_files():
        cfa = compile_file(f, 4)
        if in_bounds(cfa):
            out[f"{f.parent.name}/{f.name}"] = cfa
    return out


@pytest.fixture(scope="session")
def random_w4():
    """Seeded random programs (width 4) that fit the oracle."""
    out = []
    for src in random_sources(40):
        cfa = compile_src(src)
        if in_bounds(cfa):
            out.append((src, cfa))
    return out
