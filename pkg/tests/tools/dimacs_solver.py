"""Minimal SAT-competition style front end over the embedded solver.

Used by the tests as a stand-in external solver: ``python3 dimacs_solver.py
FILE`` prints ``s SATISFIABLE``/``s UNSATISFIABLE`` and a ``v`` line.
"""
import sys

from accelbmc.satcore import parse_dimacs, solve


def main(path):
    with open(path) as fh:
        n, clauses = parse_dimacs(fh.read())
    res = solve((n, clauses))
    if not res.satisfiable:
        print("s UNSATISFIABLE")
        return 20
    print("s SATISFIABLE")
    print("v " + " ".join(str(v if res.model[v] else -v) for v in range(1, n + 1)) + " 0")
    return 10


if __name__ == "__main__":
    sys.exit(main(sys.argv[1]))
