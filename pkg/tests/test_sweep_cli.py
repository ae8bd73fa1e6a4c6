import csv
import io
import math
import warnings

import pytest

from hotspot_uav import cli
from hotspot_uav.config import parse_config
from hotspot_uav.errors import NumericFailure
from hotspot_uav.sweep import (
    COLUMNS,
    FlatProfileWarning,
    find_optimum_height,
    format_csv,
    golden_section_max,
    manifest_path,
    run_sweep,
    sweep_results,
)


def strip_wall_time(text):
    rows = list(csv.reader(io.StringIO(text)))
    k = rows[0].index("wall_time_s")
    return [r[:k] + r[k + 1:] for r in rows]


SMALL = ("[sweep]\naxis = height\nvalues = 60, 120\nengines = analytic, montecarlo\n"
         "strategies = hotspot, ppp\n[simulation]\nn_trials = 300\nseed = 5\n")


@pytest.fixture(scope="module")
def small_rows():
    return sweep_results(parse_config(SMALL), with_se=False)


def test_row_count_order_and_columns(small_rows):
    assert len(small_rows) == 2 * 2 * 2
    keys = [(r.axis_value, r.strategy, r.engine) for r in small_rows]
    assert keys == sorted(keys, key=lambda k: (k[0], ["hotspot", "ppp"].index(k[1]),
                                               ["analytic", "montecarlo"].index(k[2])))
    header = format_csv(small_rows).splitlines()[0]
    assert header == ",".join(COLUMNS)


def test_rows_are_valid(small_rows):
    for r in small_rows:
        assert 0.0 <= r.coverage <= 1.0
        assert r.coverage_ci95 >= 0.0 and (math.isnan(r.se_ci95) or r.se_ci95 >= 0.0)
        assert r.n_trials == (300 if r.engine == "montecarlo" else 0)
        assert r.seed == 5


def test_csv_is_crlf_with_plain_decimals(small_rows):
    text = format_csv(small_rows)
    assert text.endswith("\r\n") and text.count("\r\n") == len(small_rows) + 1
    assert "," in text and ";" not in text


def test_sweep_writes_csv_and_manifest(tmp_path):
    out = tmp_path / "res" / "h.csv"
    cfg = parse_config(SMALL, {"sweep.engines": "montecarlo", "sweep.output": str(out)})
    rows = run_sweep(cfg)
    assert out.exists() and len(out.read_text().splitlines()) == len(rows) + 1
    manifest = manifest_path(str(out))
    assert manifest.endswith("h.manifest.ini")
    again = parse_config(open(manifest).read())
    assert again.seed == cfg.seed and again.values == cfg.values
    # the manifest reproduces the table
    rerun = run_sweep(again, output=str(tmp_path / "again.csv"))
    assert strip_wall_time(format_csv(rerun)) == strip_wall_time(format_csv(rows))


def test_sweep_is_deterministic_across_runs_and_workers():
    cfg = parse_config(SMALL, {"sweep.engines": "montecarlo"})
    a = format_csv(sweep_results(cfg, workers=1))
    b = format_csv(sweep_results(cfg, workers=1))
    c = format_csv(sweep_results(cfg, workers=2))
    assert strip_wall_time(a) == strip_wall_time(b) == strip_wall_time(c)


def test_density_axis_reports_display_units():
    cfg = parse_config("[sweep]\naxis = density\nvalues = 1, 5 /km2\n")
    rows = sweep_results(cfg, with_se=False)
    assert [r.axis_value for r in rows] == pytest.approx([1.0, 5.0])
    assert rows[0].coverage > rows[1].coverage


# -- optimum height -------------------------------------------------------------

def test_golden_section_finds_parabola_peak():
    x, fx = golden_section_max(lambda t: -(t - 3.3) ** 2, 0.0, 10.0, 1e-4)
    assert x == pytest.approx(3.3, abs=1e-4) and fx == pytest.approx(0.0, abs=1e-8)


def test_optimum_single_element():
    cfg = parse_config("[sweep]\nvalues = 75\n")
    res = find_optimum_height(cfg)
    assert res.gamma_opt == 75.0 and not res.flat


def test_optimum_refines_between_grid_points():
    cfg = parse_config("[sweep]\nvalues = 40:200:40\n[deployment]\nhotspot_radius = 150\n")
    res = find_optimum_height(cfg)
    assert res.metric_at_opt >= max(res.metrics)
    i = res.metrics.index(max(res.metrics))
    assert res.heights[max(i - 1, 0)] <= res.gamma_opt <= res.heights[min(i + 1, len(res.heights) - 1)]


def test_flat_profile_warns():
    cfg = parse_config("[sweep]\nvalues = 100, 101, 102\nengines = montecarlo\n"
                       "[simulation]\nn_trials = 200\n")
    with pytest.warns(FlatProfileWarning):
        res = find_optimum_height(cfg)
    assert res.flat


def test_optimum_requires_height_axis():
    with pytest.raises(Exception, match="height sweep"):
        find_optimum_height(parse_config("[sweep]\naxis = density\nvalues = 1, 5\n"))


# -- command line -----------------------------------------------------------------

def run_cli(args, capsys=None):
    out = io.StringIO()
    code = cli.main(args, out=out)
    return code, out.getvalue()


def test_cli_coverage_default_point():
    code, text = run_cli(["coverage", "--height", "100"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 1 and float(rows[0]["coverage"]) == pytest.approx(0.8361, abs=1e-3)


def test_cli_sweep_and_config_file(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[sweep]\nvalues = 60, 120\nengines = montecarlo\n[simulation]\nn_trials = 200\n")
    out = tmp_path / "o.csv"
    code, text = run_cli(["sweep", "-c", str(cfg), "--output", str(out), "--set", "simulation.seed=3"])
    assert code == 0 and "2 rows" in text
    assert (tmp_path / "o.manifest.ini").exists()


def test_cli_compare_uses_all_strategies(tmp_path):
    out = tmp_path / "cmp.csv"
    code, _ = run_cli(["compare", "--n-trials", "100", "--density", "25", "--height", "40",
                       "--output", str(out)])
    assert code == 0
    rows = list(csv.DictReader(open(out, newline="")))
    assert [r["strategy"] for r in rows] == ["hotspot", "ppp", "grid", "kmeans"]
    assert {r["engine"] for r in rows} == {"montecarlo"}


def test_cli_optimum(tmp_path):
    code, text = run_cli(["optimum", "--values", "60:140:40"])
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "strategy,gamma_opt_m,coverage,flat" and lines[1].startswith("hotspot,")


@pytest.mark.parametrize("args", [
    ["coverage", "--set", "environment.delta=1.5"],
    ["coverage", "--strategies", ""],
    ["coverage", "--set", "radio.nonsense=1"],
    ["coverage", "--set", "noequals"],
    ["coverage", "-c", "/nonexistent/file.ini"],
    ["sweep", "--engines", "analytic", "--strategies", "grid"],
])
def test_cli_invalid_input_exits_1(args):
    assert run_cli(args)[0] == 1


def test_cli_usage_error_exits_1():
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 1


def test_cli_numeric_failure_exits_2(monkeypatch):
    def boom(*a, **k):
        raise NumericFailure("series did not converge", context=(1, 2, 3, 4))
    monkeypatch.setattr("hotspot_uav.sweep.coverage_probability", boom)
    assert run_cli(["coverage"])[0] == 2


def test_cli_selftest():
    code, text = run_cli(["selftest"])
    assert code == 0
    assert text.count("PASS") == 6 and "FAIL" not in text
