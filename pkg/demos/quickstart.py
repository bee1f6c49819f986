"""Solve a small random instance three ways and draw the result.

    python demos/quickstart.py [n] [epsilon] [out.svg]

Prints the MST-doubling baseline, the shifted-quadtree tour and, for
n <= 12, the exact optimum, then writes an SVG with the quadtree overlay.
"""

import sys

import numpy as np

from euclid_tsp.cli import RunConfig, emit_svg, run
from euclid_tsp.oracle import held_karp

n = int(sys.argv[1]) if len(sys.argv) > 1 else 12
eps = float(sys.argv[2]) if len(sys.argv) > 2 else 0.5
out = sys.argv[3] if len(sys.argv) > 3 else "quickstart.svg"

pts = np.random.default_rng(7).uniform(0, 1000, (n, 2))
res = run(RunConfig(epsilon=eps, repeats=8, seed=7), pts)
s = res.stats

print(f"n={n}  eps={eps}  r={s['r']}  grid L={s['L']}")
print(f"baseline (MST doubling) {s['baseline_cost']:10.2f}")
print(f"best of {s['repeats']} shifts      {s['best_cost']:10.2f}")
for rep in s["per_repeat"]:
    mark = "*" if rep["repeat"] == s["best_repeat"] else " "
    print(f"  {mark} shift {tuple(rep['shift'])!s:>12}  cost {rep['cost']:.2f}")
if n <= 12:
    opt = held_karp(pts).cost
    print(f"optimum (Held-Karp)     {opt:10.2f}   ratio {s['best_cost'] / opt:.4f}")

with open(out, "w") as fh:
    fh.write(emit_svg(pts, res.tour.order, res.rectangles()))
print("wrote", out)
