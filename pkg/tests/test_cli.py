import json
import os

import pytest
from test_utils import read_from_memory, write_to_memory

from commext import cli


CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config")


def _solve_square(out: str) -> int:
    return cli.main(["solve", "--config_path", os.path.join(CONFIG_DIR, "square_radon.yaml"), "--out", out])


@pytest.mark.entry
def test_solve_square_radon_is_deterministic():
    assert _solve_square("memory://cli/square_a") == 0
    assert _solve_square("memory://cli/square_b") == 0

    first = read_from_memory("memory://cli/square_a/rule.json")
    assert first == read_from_memory("memory://cli/square_b/rule.json")

    rule = json.loads(first)
    assert len(rule["nodes"]) == 7
    assert len(rule["weights"]) == 7
    assert rule["verification"]["passed"] is True

    report = json.loads(read_from_memory("memory://cli/square_a/report.json"))
    assert report["success"] is True
    assert report["method"] == "radon"
    assert len(report["diametrical_pairs"]) == 3
    assert read_from_memory("memory://cli/square_a/rule.csv").startswith("x1,x2,weight")
    assert read_from_memory("memory://cli/square_a/nodes.svg").lstrip().startswith("<svg")


@pytest.mark.entry
def test_verify_round_trip():
    assert _solve_square("memory://cli/round_trip") == 0
    solved = json.loads(read_from_memory("memory://cli/round_trip/report.json"))

    assert cli.main(["verify", "--rule", "memory://cli/round_trip/rule.json"]) == 0
    verified = json.loads(read_from_memory("memory://cli/round_trip/verify_report.json"))
    assert verified["passed"] is True
    assert verified["num_nodes"] == 7
    assert verified["verification"]["max_error"] == pytest.approx(solved["verification"]["max_error"], abs=1e-12)
    # the solve report keeps its search history
    assert json.loads(read_from_memory("memory://cli/round_trip/report.json")) == solved


@pytest.mark.entry
def test_verify_detects_bad_rules():
    assert _solve_square("memory://cli/tamper") == 0
    text = read_from_memory("memory://cli/tamper/rule.json")

    rule = json.loads(text)
    rule["weights"][0] *= 1.01
    write_to_memory(json.dumps(rule), "memory://cli/tamper/changed.json")
    assert cli.main(["verify", "--rule", "memory://cli/tamper/changed.json"]) == 2

    write_to_memory(text[: len(text) // 2], "memory://cli/tamper/truncated.json")
    assert cli.main(["verify", "--rule", "memory://cli/tamper/truncated.json"]) == 1
    assert cli.main(["verify", "--rule", "memory://cli/tamper/missing.json"]) == 1


@pytest.mark.entry
def test_solve_interval():
    args = ["solve", "--domain", "interval", "--q", "9", "--out", "memory://cli/interval", "--format", "json,csv"]
    assert cli.main(args) == 0
    rule = json.loads(read_from_memory("memory://cli/interval/rule.json"))
    assert len(rule["nodes"]) == 10
    assert rule["provenance"] == "jacobi_1d"


@pytest.mark.entry
def test_solve_below_bound_reports_failure():
    args = ["solve", "--domain", "square", "--N", "6", "--method", "minimize_s", "--out", "memory://cli/below"]
    assert cli.main(args) == 2
    report = json.loads(read_from_memory("memory://cli/below/report.json"))
    assert report["success"] is False
    assert report["reason"].startswith("below rank bound")


@pytest.mark.entry
def test_bounds(capsys):
    assert cli.main(["bounds", "--domain", "square", "--q", "2"]) == 0
    out = capsys.readouterr().out
    assert "recommended N: 7" in out


@pytest.mark.entry
def test_fixture(capsys):
    assert cli.main(["fixture", "--name", "rank_two_pair", "--seed", "0"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["commutator_rank"] == 2
    assert len(record["mats"]) == 2


@pytest.mark.entry
def test_bad_input_exits_with_one():
    assert cli.main(["fixture", "--name", "no_such_fixture"]) == 1
    assert cli.main(["solve", "--q", "-1", "--out", "memory://cli/bad"]) == 1
    assert cli.main(["frobnicate"]) == 1
    assert cli.main([]) == 1
    assert cli.main(["--help"]) == 0
