"""Command-line entry point: read an instance, run the solver, report.

Stats go to standard output as one JSON document with a fixed key set; the
tour (one input index per line) and an SVG drawing are optional files.
Exit codes: 0 success, 2 unreadable input, 3 bad configuration, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .baseline import constant_factor_tour
from .dp import DpConfig, InvariantError
from .geometry import C_L_DEFAULT, GridInstance, Tour, preprocess, tour_cost
from .oracle import HELD_KARP_MAX_N, held_karp
from .pipeline import best_of_shifts
from .portals import C_R_DEFAULT, r_from_epsilon
from .quadtree import Quadtree, Shift, build_tree

EXIT_OK, EXIT_PARSE, EXIT_CONFIG, EXIT_INTERNAL = 0, 2, 3, 4
MODES = ("ptas", "exact", "baseline")
FORMATS = ("tsplib", "csv")

# Every stats document carries exactly these keys, in this order.
STATS_KEYS = (
    "n", "L", "r", "k_max", "epsilon", "c_r", "c_L", "seed", "repeats", "mode",
    "per_repeat", "best_repeat", "best_cost", "baseline_cost", "oracle_cost", "timings",
)
REPEAT_KEYS = ("repeat", "shift", "dp_cells", "routes", "relaxed", "fallback", "cost")

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_OPT_NUM = {"type": ["number", "null"]}
_OPT_INT = {"type": ["integer", "null"]}
# JSON Schema of the stats document; ptas-only and exact-only fields are null otherwise.
STATS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": list(STATS_KEYS),
    "properties": {
        "n": _INT, "L": _INT, "r": _OPT_INT, "k_max": _OPT_INT, "epsilon": _NUM, "c_r": _NUM, "c_L": _NUM,
        "seed": _INT, "repeats": _INT, "mode": {"enum": list(MODES)},
        "per_repeat": {"oneOf": [{"type": "null"}, {"type": "array", "items": {
            "type": "object", "additionalProperties": False, "required": list(REPEAT_KEYS),
            "properties": {
                "repeat": _INT, "shift": {"type": "array", "items": _INT, "minItems": 2, "maxItems": 2},
                "dp_cells": _INT, "routes": _INT, "relaxed": _INT, "fallback": {"type": "boolean"}, "cost": _NUM,
            }}}]},
        "best_repeat": _OPT_INT, "best_cost": _NUM, "baseline_cost": _NUM, "oracle_cost": _OPT_NUM,
        "timings": {"type": ["object", "null"], "additionalProperties": _NUM},
    },
}


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- input


def _number(text: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite coordinate: {text!r}", line)
    return v


def _parse_csv(text: str) -> list[tuple[float, float]]:
    """``x,y`` per line; blank lines and ``#`` comments are skipped and the first
    content line may be a header of two non-numeric names."""
    points = []
    first = True
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields, found {len(fields)}", no)
        if first and not _numeric(fields[0]) and not _numeric(fields[1]):
            first = False
            continue
        first = False
        points.append((_number(fields[0], no), _number(fields[1], no)))
    return points


def _numeric(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _parse_tsplib(text: str) -> list[tuple[float, float]]:
    header: dict[str, str] = {}
    points: list[tuple[float, float]] = []
    in_coords = False
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if in_coords:
            fields = line.split()
            if len(fields) != 3:
                if fields and fields[0].replace("_", "").isalpha() and fields[0].isupper():
                    in_coords = False  # another section starts
                    continue
                raise ParseError(f"expected 'index x y', found {line!r}", no)
            _number(fields[0], no)
            points.append((_number(fields[1], no), _number(fields[2], no)))
            continue
        if line.startswith("NODE_COORD_SECTION"):
            kind = header.get("EDGE_WEIGHT_TYPE")
            if kind is None:
                raise ParseError("EDGE_WEIGHT_TYPE missing before NODE_COORD_SECTION", no)
            in_coords = True
            continue
        if ":" in line:
            key, _, value = line.partition(":")
            key, value = key.strip().upper(), value.strip()
            header[key] = value
            if key == "EDGE_WEIGHT_TYPE" and value != "EUC_2D":
                raise ParseError("only EUC_2D supported", no)
            if key == "DIMENSION" and not value.isdigit():
                raise ParseError(f"bad DIMENSION {value!r}", no)
            continue
        if line.endswith("_SECTION"):
            continue  # sections we do not need, e.g. DISPLAY_DATA_SECTION
        raise ParseError(f"unrecognised line {line!r}", no)
    if "DIMENSION" in header and int(header["DIMENSION"]) != len(points):
        raise ParseError(f"DIMENSION says {header['DIMENSION']} but {len(points)} coordinates were read")
    return points


def parse_instance(data: bytes, fmt: str) -> list[tuple[float, float]]:
    """Points in file order from a TSPLIB EUC_2D or a two-column CSV file."""
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as err:
        raise ParseError(f"not UTF-8 text ({err.reason})") from None
    if fmt == "csv":
        points = _parse_csv(text)
    elif fmt == "tsplib":
        points = _parse_tsplib(text)
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    if not points:
        raise ParseError("no points")
    return points


def guess_format(path: str) -> str:
    return "tsplib" if Path(path).suffix.lower() == ".tsp" else "csv"


# ---------------------------------------------------------------- running


@dataclass(frozen=True)
class RunConfig:
    epsilon: float = 1.0
    c_r: float = C_R_DEFAULT
    c_L: float = C_L_DEFAULT
    seed: int = 0
    repeats: int = 8
    mode: str = "ptas"
    k_max: int | None = None
    timings: bool = False

    def validate(self) -> None:
        if not (0 < self.epsilon <= 1):
            raise ConfigError("epsilon must lie in (0, 1]")
        if self.repeats < 1:
            raise ConfigError("repeats must be at least 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        if not (self.c_r > 0 and math.isfinite(self.c_r)):
            raise ConfigError("c_r must be positive")
        if not (self.c_L > 0 and math.isfinite(self.c_L)):
            raise ConfigError("c_L must be positive")
        if self.k_max is not None and self.k_max < 1:
            raise ConfigError("k_max must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


@dataclass
class RunResult:
    stats: dict
    tour: Tour
    instance: GridInstance
    shift: Shift | None  # shift of the best repeat, ptas mode only

    def rectangles(self) -> list[tuple[float, float, float, float]] | None:
        if self.shift is None:
            return None
        return tree_rectangles(build_tree(self.instance, self.shift), self.instance)


def run(config: RunConfig, points) -> RunResult:
    config.validate()
    clock = time.perf_counter
    t0 = clock()
    inst = preprocess(points, config.epsilon, config.c_L)
    baseline = constant_factor_tour(inst)
    t1 = clock()
    timings = {"preprocess_and_baseline": t1 - t0}
    baseline_cost = tour_cost(inst.original, baseline.tour.order)
    stats = dict.fromkeys(STATS_KEYS)
    stats.update(n=inst.n, L=inst.L, epsilon=config.epsilon, c_r=config.c_r, c_L=config.c_L,
                 seed=config.seed, repeats=config.repeats, mode=config.mode, baseline_cost=baseline_cost)
    shift = None
    if config.mode == "ptas":
        r = r_from_epsilon(config.epsilon, config.c_r)
        dpc = DpConfig(r, config.k_max)
        best, results = best_of_shifts(inst, dpc, config.seed, config.repeats, baseline)
        stats.update(r=r, k_max=dpc.limits.k_max)
        stats["per_repeat"] = [
            dict(zip(REPEAT_KEYS, (i, [res.shift.a1, res.shift.a2], res.cells, res.routes, res.relaxed,
                                   res.fallback, res.tour.cost)))
            for i, res in enumerate(results)
        ]
        stats["best_repeat"] = results.index(best)
        tour = best.tour
        for stage in ("tree", "index", "dp"):
            timings[stage] = sum(res.timings[stage] for res in results)
        shift = best.shift
    elif config.mode == "exact":
        if inst.n > HELD_KARP_MAX_N:
            raise ConfigError(f"exact mode handles at most {HELD_KARP_MAX_N} points")
        exact = held_karp(inst.original)
        tour = Tour(exact.order, tour_cost(inst.original, exact.order))
        stats["oracle_cost"] = exact.cost
        timings["oracle"] = clock() - t1
    else:
        tour = Tour(baseline.tour.order, baseline_cost)
    stats["best_cost"] = tour.cost
    stats["timings"] = timings if config.timings else None
    return RunResult(stats, tour, inst, shift)


def stats_json(stats: dict) -> str:
    return json.dumps(stats, indent=2, allow_nan=False) + "\n"


def tour_text(tour: Tour) -> str:
    return "".join(f"{i}\n" for i in tour.order)


# ---------------------------------------------------------------- drawing


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def emit_svg(points, order, overlay: list[tuple[float, float, float, float]] | None = None,
             size: int = 800) -> str:
    """SVG 1.1 drawing of a closed tour, its points and optional rectangles (x, y, w, h).

    The y axis points up as in the input; the viewBox is padded by 5%.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts):
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    else:
        lo, hi = np.zeros(2), np.ones(2)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1])) or 1.0
    pad = 0.05 * span
    x0, y0 = lo[0] - pad, lo[1] - pad
    w = h = span + 2 * pad
    radius = span / 250
    stroke = span / 500

    def X(x):
        return _fmt(x)

    def Y(y):  # mirror so larger y is drawn higher
        return _fmt(y0 + h - (y - y0))

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" "http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(h)}">',
        f"<title>{escape(f'tour over {len(pts)} points')}</title>",
    ]
    if overlay:
        out.append(f'<g fill="none" stroke="#9ab" stroke-width="{_fmt(stroke / 2)}">')
        for rx, ry, rw, rh in overlay:
            out.append(f'<rect x="{X(rx)}" y="{Y(ry + rh)}" width="{_fmt(rw)}" height="{_fmt(rh)}"/>')
        out.append("</g>")
    if len(order) >= 2:
        path = " ".join(f"{'M' if i == 0 else 'L'}{X(pts[j, 0])},{Y(pts[j, 1])}" for i, j in enumerate(order))
        out.append(f'<path d="{path} Z" fill="none" stroke="#c33" stroke-width="{_fmt(stroke)}"/>')
    out.append('<g fill="#123">')
    for x, y in pts:
        out.append(f'<circle cx="{X(x)}" cy="{Y(y)}" r="{_fmt(radius)}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def tree_rectangles(tree: Quadtree, inst: GridInstance) -> list[tuple[float, float, float, float]]:
    """Cells of the quadtree as rectangles in input coordinates."""
    rects = []
    scale = inst.transform.scale
    for c in tree.cells:
        lx, ly = inst.transform.to_original(np.array(c.lo))
        side = c.side_len / scale
        rects.append((float(lx), float(ly), side, side))
    return rects


# ---------------------------------------------------------------- entry point


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad flags as a configuration error."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="euclid-tsp", description="Approximate Euclidean TSP tours on shifted quadtrees.")
    p.add_argument("input", help="instance file (TSPLIB EUC_2D or CSV x,y); '-' reads stdin")
    p.add_argument("--epsilon", type=float, default=1.0, help="accuracy parameter in (0, 1]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=8, help="independent shifts; the best is kept")
    p.add_argument("--mode", choices=MODES, default="ptas")
    p.add_argument("--format", choices=FORMATS, default=None, help="default: tsplib for .tsp, else csv")
    p.add_argument("--svg", metavar="PATH", help="write an SVG drawing of the tour")
    p.add_argument("--overlay", action="store_true", help="draw quadtree cells in the SVG (ptas mode)")
    p.add_argument("--tour", metavar="PATH", help="write the tour, one input index per line")
    p.add_argument("--cr", type=float, default=C_R_DEFAULT, help="r = max(5, ceil(cr / epsilon))")
    p.add_argument("--cL", type=float, default=C_L_DEFAULT, help="grid side L >= cL * n / epsilon")
    p.add_argument("--kmax", type=int, default=None, help="most crossings per side (default r)")
    p.add_argument("--timings", action="store_true", help="include wall times (breaks byte-identical output)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(args.epsilon, args.cr, args.cL, args.seed, args.repeats, args.mode, args.kmax,
                           args.timings)
        config.validate()
        fmt = args.format or guess_format(args.input)
        data = sys.stdin.buffer.read() if args.input == "-" else Path(args.input).read_bytes()
        points = parse_instance(data, fmt)
        result = run(config, points)
    except ParseError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"cannot read input: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantError, AssertionError) as err:
        print(f"internal error: {err}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as err:  # anything unexpected is a broken invariant too
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INTERNAL
    sys.stdout.write(stats_json(result.stats))
    try:
        if args.tour:
            Path(args.tour).write_text(tour_text(result.tour))
        if args.svg:
            rects = result.rectangles() if args.overlay else None
            Path(args.svg).write_text(emit_svg(result.instance.original, result.tour.order, rects))
    except OSError as err:
        print(f"cannot write output: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
