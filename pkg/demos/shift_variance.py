"""How much the random shift matters, and what taking the best of k buys.

    python demos/shift_variance.py [n] [shifts]

One shift can cut the tour badly where a dissection line runs through a
cluster; the guarantee is on the average over shifts.  This runs many
shifts on one instance and reports the spread and the best-of-k curve.
"""

import sys

import numpy as np

from euclid_tsp.baseline import constant_factor_tour
from euclid_tsp.dp import DpConfig
from euclid_tsp.geometry import preprocess, tour_cost
from euclid_tsp.pipeline import solve_shift
from euclid_tsp.portals import r_from_epsilon
from euclid_tsp.quadtree import sample_shift

n = int(sys.argv[1]) if len(sys.argv) > 1 else 300
shifts = int(sys.argv[2]) if len(sys.argv) > 2 else 24

rng = np.random.default_rng(3)
# a few tight clusters make the shift visible
centres = rng.uniform(0, 1000, (6, 2))
pts = centres[rng.integers(0, 6, n)] + rng.normal(0, 40, (n, 2))

inst = preprocess(pts, 1.0)
base = constant_factor_tour(inst)
cfg = DpConfig(r_from_epsilon(1.0))
costs = np.array([solve_shift(inst, base, sample_shift(inst.L, s), cfg).tour.cost for s in range(shifts)])
base_cost = tour_cost(pts, base.tour.order)

print(f"n={n}  r={cfg.r}  baseline {base_cost:.1f}")
print(f"per shift: min {costs.min():.1f}  median {np.median(costs):.1f}  max {costs.max():.1f}")
for k in (1, 2, 4, 8, 16):
    if k <= shifts:
        print(f"best of first {k:2d}: {costs[:k].min():.1f}")
