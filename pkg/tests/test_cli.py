"""
CLI tests: tables, reports and exit codes.
"""

import csv
import io
import json

import pytest

from lonely_passenger import __version__


def _json(result):
    return json.loads(result.stdout)


def _csv_rows(result):
    lines = [line for line in result.stdout.splitlines() if not line.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(lines))))


def test_exact_p(invoke):
    result = invoke("exact", "p", "--n", "3", "--k", "2")
    assert result.exit_code == 0
    assert _csv_rows(result) == [["n", "k", "p"], ["3", "2", "3/4"]]


def test_exact_p_single_passenger_json(invoke):
    result = invoke("exact", "p", "--n", "1", "--k", "7", "--format", "json")
    assert result.exit_code == 0
    envelope = _json(result)
    assert envelope["command"] == "exact p"
    assert envelope["version"] == __version__
    assert envelope["payload"]["rows"] == [{"n": 1, "k": 7, "p": "1/1"}]


def test_exact_dist(invoke):
    result = invoke("exact", "dist", "--n", "3", "--k", "3")
    assert result.exit_code == 0
    assert _csv_rows(result) == [
        ["N", "L", "prob"], ["1", "0", "1/9"], ["2", "1", "2/3"], ["3", "3", "2/9"],
    ]


def test_csv_and_json_carry_the_same_rows(invoke):
    table = _csv_rows(invoke("exact", "ne", "--l", "2", "--n", "3"))
    payload = _json(invoke("exact", "ne", "--l", "2", "--n", "3", "--format", "json"))["payload"]
    assert table[0] == payload["columns"]
    assert table[1:] == [[str(row[col]) for col in payload["columns"]] for row in payload["rows"]]


def test_exact_lonely(invoke):
    result = invoke("exact", "lonely", "--n", "3", "--k", "2", "--format", "json")
    assert _json(result)["payload"]["rows"] == [{"L": 0, "prob": "1/4"}, {"L": 1, "prob": "3/4"}]


@pytest.mark.parametrize("args", [
    ("exact", "p", "--n", "0", "--k", "2"),
    ("exact", "ne", "--l", "4", "--n", "3"),
    ("exact", "p", "--n", "3"),
    ("couple", "forward", "--n", "3", "--l", "2"),
])
def test_usage_errors_exit_2(invoke, args):
    assert invoke(*args).exit_code == 2


def test_size_limit_exits_3(invoke):
    result = invoke("oracle", "joint", "--n", "20", "--k", "3", "--limit", "1000")
    assert result.exit_code == 3


def test_oracle_tables(invoke):
    rows = _csv_rows(invoke("oracle", "joint", "--n", "3", "--k", "2"))
    assert rows[0] == ["m", "N", "L", "prob"]
    assert ["3", "2", "1", "3/4"] in rows
    rows = _csv_rows(invoke("oracle", "ne", "--l", "2", "--n", "3"))
    assert ["2", "1", "0", "1/3"] in rows


def test_check_theorem(invoke):
    result = invoke("check", "theorem", "--n-max", "5", "--k-max", "4")
    assert result.exit_code == 0
    report = _json(result)["payload"]
    assert report["passed"]
    assert report["summary"]["total"] == 4 * 3


def test_check_stirling(invoke):
    assert invoke("check", "stirling", "--n-max", "40").exit_code == 0


def test_check_oracle(invoke):
    assert invoke("check", "oracle", "--limit", "500").exit_code == 0


def test_couple_monotone(invoke):
    result = invoke("couple", "monotone", "--n", "3", "--l", "2", "--paths", "2000", "--seed", "7")
    assert result.exit_code == 0
    envelope = _json(result)
    assert envelope["seed"] == 7
    assert envelope["payload"]["total_violations"] == 0


def test_couple_negative_control(invoke):
    result = invoke("couple", "monotone", "--n", "3", "--l", "2", "--paths", "200", "--seed", "7",
                    "--negative-control", "--no-fit")
    assert result.exit_code == 1


def test_mc_single_passenger(invoke):
    result = invoke("mc", "p", "--n", "1", "--k", "4", "--samples", "10")
    assert result.exit_code == 0
    assert _json(result)["payload"]["value"] == 1.0


def test_mc_two_buses(invoke):
    result = invoke("mc", "p", "--n", "2", "--k", "2", "--samples", "20000", "--seed", "3")
    assert result.exit_code == 0
    assert abs(_json(result)["payload"]["z"]) <= 5


def test_mc_shadow_never_fails(invoke):
    result = invoke("mc", "shadow", "--n", "6", "--k-max", "4", "--samples", "1000", "--seed", "1")
    assert result.exit_code == 0
    assert len(_json(result)["payload"]["rows"]) == 4


def test_mc_near_certain_cell(invoke):
    result = invoke("mc", "p", "--n", "20", "--k", "50", "--samples", "100000", "--seed", "3")
    assert result.exit_code == 0
    payload = _json(result)["payload"]
    assert payload["value"] == 1.0
    assert abs(payload["z"]) <= 5


def test_check_couplings(invoke):
    result = invoke("check", "couplings", "--n-max", "2", "--paths", "200", "--seed", "4")
    assert result.exit_code == 0
    envelope = _json(result)
    assert envelope["seed"] == 4
    assert envelope["payload"]["summary"]["total"] == 4
