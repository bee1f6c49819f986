"""Wall time of one shifted solve against n, with the per-stage split.

    python demos/scaling.py [max_exponent]

Sizes run from 10^3 up to 10^max_exponent (default 4; 5 takes a couple of
minutes and about 3 GB).  The last line is the fitted log-log slope.
"""

import sys
import time

import numpy as np

from euclid_tsp.cli import RunConfig, run

top = int(sys.argv[1]) if len(sys.argv) > 1 else 4
sizes = [10**e for e in range(3, top + 1)]

run(RunConfig(repeats=1), np.random.default_rng(0).uniform(0, 1, (50, 2)))  # compile kernels

walls = []
for n in sizes:
    pts = np.random.default_rng(n).uniform(0, 1000, (n, 2))
    t0 = time.perf_counter()
    res = run(RunConfig(epsilon=1.0, repeats=1, timings=True), pts)
    walls.append(time.perf_counter() - t0)
    t = res.stats["timings"]
    print(f"n={n:>7}  total {walls[-1]:7.2f}s  tree {t['tree']:.2f}  index {t['index']:.2f}  dp {t['dp']:.2f}"
          f"  cost/baseline {res.stats['best_cost'] / res.stats['baseline_cost']:.3f}")
if len(sizes) > 1:
    print(f"log-log slope {np.polyfit(np.log(sizes), np.log(walls), 1)[0]:.3f}")
