import csv
import io
import json
import math
import time
from pathlib import Path

import pytest

from cli import TABLES, build_parser, emit_csv, format_value, parse_scenario, reproduce, run
from cli.scenario import load_scenario
from cli.tables import table_ids
from domain.errors import ScenarioError
from gaussian import std_normal_cdf

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

UP_SCENARIO = """
[market]
spot = 100.0
rate = 0.03
vol = 0.2

[grid]
maturity = 0.5
steps = 6

[barrier]
direction = "UP"
levels = [105, 108, 110, 113, 115, 118]

[[contracts]]
type = "UOC"
strike = 100
"""

ICICLE_ONLY = """
[market]
spot = 100.0
rate = 0.03
vol = 0.25
drift = 0.02

[grid]
times = [0.25, 0.5, 1.0]

[barrier]
direction = "UP"
levels = {}
icicles = { "3" = 110.0 }
"""


def csv_rows(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def test_format_value():
    assert format_value(0.66543219876) == "0.665432"
    assert format_value(None) == ""
    assert format_value(True) == "true"
    assert format_value(64) == "64"


def test_emit_csv_header_only(capsys):
    emit_csv([], columns=["type", "price"])
    assert capsys.readouterr().out == "type,price\r\n"


def test_emit_csv_row_with_full_precision(tmp_path):
    path = tmp_path / "out" / "prices.csv"
    emit_csv([{"type": "UOC", "price": 0.1 + 0.2}], path, precise="price")
    text = path.read_text(encoding="utf-8")
    assert text == "type,price,price_full\r\nUOC,0.3,0.30000000000000004\r\n"


def test_scenario_rejects_unknown_keys():
    data = {"market": {"spot": 100, "rate": 0.03, "vol": 0.2, "volatility": 0.2},
            "grid": {"maturity": 0.5, "steps": 6},
            "barrier": {"direction": "UP", "levels": [110]}}
    with pytest.raises(ScenarioError) as info:
        parse_scenario(data)
    assert any(p["field"] == "market.volatility" for p in info.value.details["problems"])


def test_scenario_needs_exactly_one_barrier():
    data = {"market": {"spot": 100, "rate": 0.03, "vol": 0.2}, "grid": {"maturity": 0.5, "steps": 6}}
    with pytest.raises(ScenarioError):
        parse_scenario(data)


def test_scenario_grid_forms(write_scenario):
    scenario = load_scenario(write_scenario(ICICLE_ONLY))
    assert scenario.grid.to_grid().times == (0.0, 0.25, 0.5, 1.0)
    assert scenario.barrier.to_barrier().icicles == {3: 110.0}


def test_missing_scenario_file(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "absent.toml")


def test_flags_override_the_scenario(write_scenario):
    text = UP_SCENARIO + "\n[engine]\nprune_eps = 1e-9\nworkers = 2\n"
    scenario = load_scenario(write_scenario(text))
    options = scenario.reflection_options(prune_eps=0.0)
    assert options.prune_eps == 0.0
    assert options.workers == 2


def test_price_command(write_scenario, capsys):
    status = run(["price", "--scenario", str(write_scenario(UP_SCENARIO))])
    assert status == 0
    rows = csv_rows(capsys.readouterr().out)
    assert len(rows) == 1
    assert rows[0]["type"] == "UOC"
    assert float(rows[0]["price_full"]) == pytest.approx(0.6654, abs=5e-4)
    assert rows[0]["subsets_evaluated"] == "256"


def test_invalid_input_exits_with_status_2(write_scenario, capsys):
    text = UP_SCENARIO.replace('type = "UOC"', 'type = "DOC"')
    status = run(["price", "--scenario", str(write_scenario(text))])
    captured = capsys.readouterr()
    assert status == 2
    record = json.loads(captured.err.strip().splitlines()[-1])
    assert record["error"] == "BarrierDirectionMismatch"


def test_malformed_scenario_reports_problems(write_scenario, capsys):
    status = run(["price", "--scenario", str(write_scenario("[market]\nspot = 'x'\n"))])
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert status == 2
    assert record["error"] == "ScenarioError"
    assert record["problems"]


def test_prob_without_barrier_steps(write_scenario, capsys):
    status = run(["prob", "--scenario", str(write_scenario(ICICLE_ONLY))])
    assert status == 0
    row = csv_rows(capsys.readouterr().out)[0]
    expected = std_normal_cdf((math.log(1.1) - 0.02) / 0.25)
    assert float(row["probability_full"]) == pytest.approx(expected, abs=1e-12)
    assert row["barrier_steps"] == "0"


def test_prob_engines_agree(write_scenario, capsys):
    path = str(write_scenario(UP_SCENARIO))
    run(["prob", "--scenario", path])
    reflected = float(csv_rows(capsys.readouterr().out)[0]["probability_full"])
    run(["prob", "--scenario", path, "--engine", "kernel"])
    kernel = float(csv_rows(capsys.readouterr().out)[0]["probability_full"])
    assert reflected == pytest.approx(kernel, abs=1e-4)


def test_curve_command_survival(capsys):
    status = run(["curve", "--scenario", str(SCENARIOS / "survival_linear.toml"), "--engine", "kernel"])
    assert status == 0
    row = csv_rows(capsys.readouterr().out)[0]
    assert row["kind"] == "survival"
    assert float(row["value_full"]) == pytest.approx(0.6530, abs=5e-4)
    assert len(row["levels"].split(";")) == 10


def test_reproduce_first_cells(capsys):
    status = run(["reproduce", "4b", "--limit", "4"])
    out = capsys.readouterr().out
    assert status == 0
    rows = csv_rows(out)
    assert [r["type"] for r in rows] == ["UOC", "UIC", "UOP", "UIP"]
    assert all(r["ok"] == "true" for r in rows)
    assert "# cells_failed=0" in out


def test_reproduce_writes_a_file(tmp_path, capsys):
    path = tmp_path / "ex5.csv"
    assert run(["reproduce", "--table", "ex5", "--limit", "2", "--out", str(path)]) == 0
    first = path.read_text(encoding="utf-8").splitlines()
    assert run(["reproduce", "--table", "ex5", "--limit", "2", "--out", str(path)]) == 0
    assert path.read_text(encoding="utf-8").splitlines() == first


def test_reproduce_flags_a_failing_cell(tmp_path, capsys):
    (tmp_path / "4b.csv").write_text(
        "rate,vol,barrier,levels,maturity,type,strike,expected,tolerance\n"
        "0.03,0.2,T1,105;108;110;113;115;118,0.5,UOC,100,0.7000,0.0005\n",
        encoding="utf-8",
    )
    status = run(["reproduce", "4b", "--tables-dir", str(tmp_path)])
    assert status == 1
    assert "# cells_failed=1" in capsys.readouterr().out


def test_unknown_table_is_a_usage_error():
    with pytest.raises(SystemExit):
        run(["reproduce", "9z"])


def test_reproduce_accepts_every_known_table():
    assert list(table_ids()) == sorted(TABLES)
    parser = build_parser()
    for table_id in table_ids():
        assert parser.parse_args(["reproduce", table_id]).table_id == table_id
        assert parser.parse_args(["reproduce", "--table", table_id]).table_flag == table_id


@pytest.mark.slow
@pytest.mark.parametrize("table_id", sorted(TABLES))
def test_every_table_reproduces(table_id):
    report = reproduce(table_id)
    assert report.ok, report.summary_lines()


@pytest.mark.slow
def test_monthly_table_reproduces_within_half_a_minute():
    start = time.perf_counter()
    report = reproduce("4b")
    assert report.ok
    assert time.perf_counter() - start < 30.0
