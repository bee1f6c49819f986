"""One shifted solve from grid instance to tour, and the best-of-shifts driver."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

from .baseline import BaselineTour, constant_factor_tour
from .crossing_index import build_crossing_index
from .dp import DpConfig, InvariantError, fill, extract_tour
from .geometry import GridInstance, Tour, tour_cost
from .quadtree import Shift, add_dummy_cells, build_compressed_quadtree, sample_shift


@dataclass
class ShiftResult:
    shift: Shift
    tour: Tour  # cost on the original coordinates
    dp_value: float  # optimum of the restricted class, grid units
    cells: int
    routes: int
    relaxed: int  # how many times the direct-segment limits had to be loosened
    fallback: bool  # the baseline tour was returned because the class was empty
    vertex_count: int
    timings: dict


def relaxations(config: DpConfig) -> list[DpConfig]:
    """The configured limits followed by progressively looser ones."""
    out = [config]
    for extra in (1, 2):
        out.append(replace(config, per_full_child=config.per_full_child + 1,
                           per_empty_child=config.per_empty_child + 1,
                           slack=config.slack + extra, cycle_slack=config.cycle_slack + extra))
    return out


def solve_shift(inst: GridInstance, baseline: BaselineTour, shift: Shift, config: DpConfig,
                keep_table: bool = False):
    clock = time.perf_counter
    t0 = clock()
    qt = add_dummy_cells(build_compressed_quadtree(inst, shift))
    t1 = clock()
    idx = build_crossing_index(qt, baseline)
    t2 = clock()
    timings = {"tree": t1 - t0, "index": t2 - t1}
    if inst.n == 1 or len({tuple(p) for p in inst.points.tolist()}) == 1:
        order = tuple(range(inst.n))
        timings["dp"] = 0.0
        res = ShiftResult(shift, Tour(order, tour_cost(inst.original, order)), 0.0, 0, 0, 0, False,
                          qt.vertex_count, timings)
        return (res, None) if keep_table else res
    table = None
    relaxed = 0
    cells = routes = 0
    for relaxed, cfg in enumerate(relaxations(config)):
        try:
            table = fill(qt, idx, cfg)
            cells += table.stats.cells
            routes += table.stats.routes_examined
            break
        except InvariantError as err:
            if "no feasible tour" not in str(err):
                raise
            table = None
    if table is None:
        order = baseline.tour.order
        timings["dp"] = clock() - t2
        res = ShiftResult(shift, Tour(order, tour_cost(inst.original, order)), float("inf"), cells,
                          routes, relaxed, True, qt.vertex_count, timings)
        return (res, None) if keep_table else res
    grid_tour = extract_tour(table)
    timings["dp"] = clock() - t2
    tour = Tour(grid_tour.order, tour_cost(inst.original, grid_tour.order))
    res = ShiftResult(shift, tour, table.value, cells, routes, relaxed, False, qt.vertex_count, timings)
    return (res, table) if keep_table else res


def shift_seeds(seed: int, repeats: int) -> list[int]:
    """Independent, reproducible seeds for the repeats of one run."""
    return [seed * 1_000_003 + i for i in range(repeats)]


def best_of_shifts(inst: GridInstance, config: DpConfig, seed: int, repeats: int,
                   baseline: BaselineTour | None = None) -> tuple[ShiftResult, list[ShiftResult]]:
    baseline = baseline or constant_factor_tour(inst)
    results = [solve_shift(inst, baseline, sample_shift(inst.L, s), config) for s in shift_seeds(seed, repeats)]
    best = min(results, key=lambda r: r.tour.cost)
    return best, results
