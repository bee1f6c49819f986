import json
import re
import subprocess
import sys
import xml.etree.ElementTree as ET

import jsonschema
import pytest

from euclid_tsp.cli import (EXIT_CONFIG, EXIT_INTERNAL, EXIT_OK, EXIT_PARSE, REPEAT_KEYS, STATS_KEYS,
                            STATS_SCHEMA, ConfigError, ParseError, RunConfig, emit_svg, main,
                            parse_instance, run, stats_json)

from helpers import is_permutation, uniform_points

SVG = "{http://www.w3.org/2000/svg}"

TSPLIB = b"""NAME : square4
COMMENT : side 10
TYPE : TSP
DIMENSION : 4
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 0 0
2 10 0
3 10 10
4 0 10
EOF
"""


def test_csv_example():
    assert parse_instance(b"0,0\n1,0\n", "csv") == [(0.0, 0.0), (1.0, 0.0)]


def test_csv_header_and_comments():
    assert parse_instance(b"x,y\n# note\n\n2.5,-1\n", "csv") == [(2.5, -1.0)]


def test_csv_error_cites_line():
    with pytest.raises(ParseError, match="line 3") as info:
        parse_instance(b"0,0\n1,0\na,b\n", "csv")
    assert info.value.line == 3


def test_csv_wrong_field_count():
    with pytest.raises(ParseError, match="line 2"):
        parse_instance(b"0,0\n1,2,3\n", "csv")


def test_tsplib_points_in_file_order():
    assert parse_instance(TSPLIB, "tsplib") == [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]


def test_tsplib_rejects_other_weight_types():
    with pytest.raises(ParseError, match="only EUC_2D supported"):
        parse_instance(TSPLIB.replace(b"EUC_2D", b"GEO"), "tsplib")


def test_tsplib_dimension_mismatch():
    with pytest.raises(ParseError):
        parse_instance(TSPLIB.replace(b"DIMENSION : 4", b"DIMENSION : 5"), "tsplib")


def test_exact_mode_fields():
    res = run(RunConfig(mode="exact"), uniform_points(0, 5))
    s = res.stats
    assert s["oracle_cost"] == pytest.approx(res.tour.cost, rel=1e-12)
    assert s["per_repeat"] is None and s["r"] is None and s["best_repeat"] is None
    jsonschema.validate(s, STATS_SCHEMA)


def test_exact_mode_size_cap():
    with pytest.raises(ConfigError):
        run(RunConfig(mode="exact"), uniform_points(0, 21))


def test_best_of_repeats_is_minimum():
    res = run(RunConfig(repeats=4, seed=3), uniform_points(3, 30))
    costs = [p["cost"] for p in res.stats["per_repeat"]]
    assert len(costs) == 4
    assert res.stats["best_cost"] == min(costs) == res.tour.cost
    assert is_permutation(res.tour.order, 30)


@pytest.mark.parametrize("mode", ["ptas", "exact", "baseline"])
def test_stats_schema(mode):
    s = run(RunConfig(mode=mode, repeats=2), uniform_points(1, 9)).stats
    jsonschema.validate(s, STATS_SCHEMA)
    assert tuple(s) == STATS_KEYS
    for rep in s["per_repeat"] or []:
        assert tuple(rep) == REPEAT_KEYS
    assert json.loads(stats_json(s)) == s


def test_timings_are_opt_in():
    s = run(RunConfig(repeats=1, timings=True), uniform_points(1, 9)).stats
    jsonschema.validate(s, STATS_SCHEMA)
    assert set(s["timings"]) >= {"tree", "index", "dp"}


def test_config_validation():
    for bad in (RunConfig(epsilon=0), RunConfig(epsilon=1.5), RunConfig(repeats=0), RunConfig(mode="fast"),
                RunConfig(c_r=0), RunConfig(c_L=-1), RunConfig(k_max=0), RunConfig(seed=-1)):
        with pytest.raises(ConfigError):
            bad.validate()


def _svg_shapes(text):
    root = ET.fromstring(text.encode())
    return root, root.findall(f".//{SVG}path"), root.findall(f".//{SVG}rect"), root.findall(f".//{SVG}circle")


def test_svg_square():
    text = emit_svg([(0, 0), (1, 0), (1, 1), (0, 1)], (0, 1, 2, 3))
    assert '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN"' in text
    root, paths, rects, circles = _svg_shapes(text)
    assert root.get("version") == "1.1"
    assert len(paths) == 1 and not rects and len(circles) == 4
    d = paths[0].get("d")
    assert d.endswith("Z") and len(re.findall(r"[ML]", d)) == 4


def test_svg_overlay_draws_rectangles():
    text = emit_svg([(0, 0), (1, 1)], (0, 1), overlay=[(0, 0, 1, 1), (0, 0, 0.5, 0.5)])
    assert len(_svg_shapes(text)[2]) == 2


def test_svg_well_formed_on_random_instances():
    for seed in range(20):
        pts = uniform_points(seed, 3 + seed)
        res = run(RunConfig(repeats=1, seed=seed), pts)
        _, paths, rects, circles = _svg_shapes(emit_svg(pts, res.tour.order, res.rectangles()))
        assert len(paths) == 1 and len(circles) == len(pts) and rects


@pytest.fixture
def csv_file(tmp_path):
    p = tmp_path / "pts.csv"
    p.write_text("".join(f"{x},{y}\n" for x, y in uniform_points(4, 25)))
    return p


def test_main_writes_stats_tour_and_svg(csv_file, tmp_path, capsys):
    tour, svg = tmp_path / "t.txt", tmp_path / "t.svg"
    code = main([str(csv_file), "--repeats", "2", "--tour", str(tour), "--svg", str(svg), "--overlay"])
    assert code == EXIT_OK
    jsonschema.validate(json.loads(capsys.readouterr().out), STATS_SCHEMA)
    assert is_permutation([int(v) for v in tour.read_text().split()], 25)
    assert _svg_shapes(svg.read_text())[2]


def test_main_is_byte_identical(csv_file, tmp_path, capsys):
    outs = []
    for i in range(2):
        tour = tmp_path / f"t{i}.txt"
        main([str(csv_file), "--repeats", "3", "--seed", "9", "--epsilon", "0.5", "--tour", str(tour)])
        outs.append((capsys.readouterr().out, tour.read_bytes()))
    assert outs[0] == outs[1]


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("0,0\n1,0\na,b\n")
    assert main([str(bad)]) == EXIT_PARSE
    assert "line 3" in capsys.readouterr().err
    good = tmp_path / "good.csv"
    good.write_text("0,0\n1,0\n1,1\n")
    assert main([str(good), "--epsilon", "2"]) == EXIT_CONFIG
    assert main([str(tmp_path / "missing.csv")]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as info:
        main([str(good), "--repeats", "many"])
    assert info.value.code == EXIT_CONFIG
    assert main([str(good), "--kmax", "3"]) == EXIT_OK


def test_internal_errors_map_to_4(monkeypatch, tmp_path):
    from euclid_tsp import cli
    from euclid_tsp.dp import InvariantError

    def boom(*a, **k):
        raise InvariantError("broken backpointer chain")

    monkeypatch.setattr(cli, "run", boom)
    f = tmp_path / "p.csv"
    f.write_text("0,0\n1,1\n")
    assert main([str(f)]) == EXIT_INTERNAL


def test_module_entry_point(tmp_path):
    f = tmp_path / "sq.tsp"
    f.write_bytes(TSPLIB)
    out = subprocess.run([sys.executable, "-m", "euclid_tsp", str(f), "--mode", "exact"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["oracle_cost"] == pytest.approx(40.0, rel=1e-12)
