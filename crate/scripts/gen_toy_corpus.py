#!/usr/bin/env python3
"""Regenerate the bundled toy elliptic-curve corpus and its L-function zeros.

Requires cypari2 (`pip install --only-binary :all: cypari2`). Writes
crates/core/data/toy_curves.csv and crates/core/data/toy_zeros.csv in the
formats read by `murmur ap --curves` and `murmur murmurate --zeros`.
"""
import os
import sys

import cypari2

HEIGHT = 200
OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "data")

CURVES = [
    ("11a1", [0, -1, 1, -10, -20]),
    ("14a1", [1, 0, 1, 4, -6]),
    ("15a1", [1, 1, 1, -10, -10]),
    ("17a1", [1, -1, 1, -1, -14]),
    ("19a1", [0, 1, 1, -9, -15]),
    ("20a1", [0, 1, 0, 4, 4]),
    ("21a1", [1, 0, 0, -4, -1]),
    ("24a1", [0, -1, 0, -4, 4]),
    ("26a1", [1, 0, 1, -5, -8]),
    ("26b1", [1, -1, 1, -3, 3]),
    ("27a1", [0, 0, 1, 0, -7]),
    ("30a1", [1, 0, 1, 1, 2]),
    ("32a1", [0, 0, 0, 4, 0]),
    ("33a1", [1, 1, 0, -11, 0]),
    ("34a1", [1, 0, 0, -3, 1]),
    ("35a1", [0, 1, 1, 9, 1]),
    ("36a1", [0, 0, 0, 0, 1]),
    ("37a1", [0, 0, 1, -1, 0]),
    ("37b1", [0, 1, 1, -23, -50]),
    ("55a1", [1, -1, 0, -4, 3]),
    ("389a1", [0, 1, 1, -2, 0]),
    ("5077a1", [0, 0, 1, -7, 6]),
]


def main():
    pari = cypari2.Pari()
    pari.allocatemem(2 * 10**9)
    curves = []
    zeros = []
    for label, ainv in CURVES:
        e = pari.ellinit(ainv)
        if list(pari.ellminimalmodel(e)[:5]) != ainv:
            sys.exit(f"{label}: model is not minimal")
        conductor = int(pari.ellglobalred(e)[0])
        rank = int(pari.ellanalyticrank(e)[0])
        curves.append((label, ainv, conductor, rank))
        gammas = [float(g) for g in pari.lfunzeros(pari.lfuncreate(e), HEIGHT)]
        # central zeros are accounted for by the rank term
        zeros.extend((label, g) for g in gammas if g > 1e-8)

    with open(os.path.join(OUT, "toy_curves.csv"), "w", newline="\n") as f:
        f.write("label,a1,a2,a3,a4,a6,conductor,rank\n")
        for label, a, n, r in curves:
            f.write(f"{label},{a[0]},{a[1]},{a[2]},{a[3]},{a[4]},{n},{r}\n")
    zeros.sort()
    with open(os.path.join(OUT, "toy_zeros.csv"), "w", newline="\n") as f:
        f.write("object_id,gamma\n")
        for label, g in zeros:
            f.write(f"{label},{g:.9f}\n")


if __name__ == "__main__":
    main()
