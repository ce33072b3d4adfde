"""Independent brute-force oracles shared by the tests."""
import itertools
import random

from accelbmc.frontend.lang import eval_bexpr, free_vars


def truth_table_sat(num_vars, clauses):
    """Satisfiability by evaluating every assignment at once.

    Each variable's column of the truth table is a ``2**num_vars``-bit
    integer; clauses are ORs of columns and the formula is their AND.
    """
    size = 1 << num_vars
    full = (1 << size) - 1
    cols = []
    for v in range(num_vars):
        # bit a of column v is bit v of assignment a: a period of 2^(v+1)
        # bits (2^v zeros, then 2^v ones) repeated by doubling
        period = 1 << (v + 1)
        pattern = ((1 << (1 << v)) - 1) << (1 << v)
        while period < size:
            pattern |= pattern << period
            period <<= 1
        cols.append(pattern)
    negs = [full ^ c for c in cols]
    table = full
    for c in clauses:
        acc = 0
        for lit in c:
            col = cols[abs(lit) - 1]
            acc |= col if lit > 0 else negs[abs(lit) - 1]
        table &= acc
        if not table:
            return False
    return bool(table)


def random_3cnf(rng: random.Random, max_vars=20):
    n = rng.randint(3, max_vars)
    m = int(n * rng.uniform(3.0, 5.5))
    clauses = []
    for _ in range(m):
        vs = rng.sample(range(1, n + 1), 3)
        clauses.append([v if rng.random() < 0.5 else -v for v in vs])
    return n, clauses


def satisfies(model, clauses):
    return all(any(model[abs(l)] == (l > 0) for l in c) for c in clauses)


def bv_satisfiable(formula, width, names=None):
    names = sorted(free_vars(formula)) if names is None else names
    for values in itertools.product(range(1 << width), repeat=len(names)):
        if eval_bexpr(formula, dict(zip(names, values)), width):
            return True
    return False


def random_bv_formula(rng: random.Random, names=("x", "y", "z"), width=4, depth=2):
    """A random comparison tree over +, -, * and constants."""
    from accelbmc.frontend.lang import Add, And, Cmp, Const, Mul, Not, NoWrap, Or, Sub, Var

    def expr(d):
        if d == 0 or rng.random() < 0.3:
            if rng.random() < 0.6:
                return Var(rng.choice(names))
            return Const(rng.randrange(1 << width))
        op = rng.choice((Add, Sub, Mul))
        return op(expr(d - 1), expr(d - 1))

    def cond(d):
        if d == 0 or rng.random() < 0.4:
            if rng.random() < 0.15:
                return NoWrap(expr(2))
            return Cmp(rng.choice(("==", "!=", "<", "<=", ">", ">=")), expr(2), expr(2))
        k = rng.random()
        if k < 0.4:
            return And((cond(d - 1), cond(d - 1)))
        if k < 0.8:
            return Or((cond(d - 1), cond(d - 1)))
        return Not(cond(d - 1))

    return cond(depth)
