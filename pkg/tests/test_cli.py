import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from app import EXIT_CONFIG, EXIT_OK, cli
from src.config.settings import REPORT_COLUMNS
from src.data.network_loader import NetworkLoader

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def scenario_file(tmp_path, line):
    NetworkLoader().save(line, tmp_path / "line.json")
    path = tmp_path / "line-scenario.json"
    path.write_text(json.dumps({
        "format_version": 1, "network": "line.json", "n": 1, "k": None,
        "horizon": 600, "seed": 3, "replications": 2, "time_limit": None,
    }))
    return path


def test_validate_bundled_network(runner):
    result = runner.invoke(cli, ["validate", str(SCENARIOS / "two-station.json")])
    assert result.exit_code == EXIT_OK, result.output
    assert "Network 'two-station' is valid" in result.output
    assert "crossing pairs" in result.output


def test_validate_reports_dangling_edge(runner, tmp_path, line):
    raw = line.to_dict()
    raw["adjacency"].append(["b1", "ghost"])
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(raw))
    result = runner.invoke(cli, ["validate", str(path)])
    assert result.exit_code == EXIT_CONFIG
    assert "ghost" in result.output


def test_run_writes_reproducible_reports(runner, scenario_file, tmp_path):
    outputs = []
    for name in ("first", "second"):
        report_dir = tmp_path / name
        result = runner.invoke(cli, ["run", "--scenario", str(scenario_file), "--quiet", "--deterministic",
                                     "--report", str(report_dir)])
        assert result.exit_code == EXIT_OK, result.output
        outputs.append((report_dir / "line-1-all.csv").read_bytes())
    assert outputs[0] == outputs[1]
    header = outputs[0].decode().splitlines()[0]
    assert header.split(",") == REPORT_COLUMNS


def test_run_json_with_trace(runner, scenario_file, tmp_path):
    result = runner.invoke(cli, ["run", "--scenario", str(scenario_file), "--quiet", "--deterministic",
                                 "--report", str(tmp_path), "--format", "json", "--trace", "--k", "1"])
    assert result.exit_code == EXIT_OK, result.output
    document = json.loads((tmp_path / "line-1-1.json").read_text())
    assert document["scenario"] == "line-1-1"
    assert (tmp_path / "line-1-1.rep000.trace.csv").exists()


def test_run_prints_summary(runner, scenario_file):
    result = runner.invoke(cli, ["run", "--scenario", str(scenario_file), "--replications", "1"])
    assert result.exit_code == EXIT_OK, result.output
    assert "Scenario line-1-all" in result.output


@pytest.mark.parametrize("flags", [["--k", "many"], ["--k", "0"], ["--gap", "2"]])
def test_bad_flags_exit_with_config_error(runner, scenario_file, flags):
    result = runner.invoke(cli, ["run", "--scenario", str(scenario_file), "--quiet", *flags])
    assert result.exit_code == EXIT_CONFIG
    assert "Error" in result.output


def test_dump_writes_models(runner, scenario_file, tmp_path):
    result = runner.invoke(cli, ["dump", "--scenario", str(scenario_file), "--quiet", "--report", str(tmp_path)])
    assert result.exit_code == EXIT_OK, result.output
    for name in ("catalog.txt", "cliques.txt", "master.mps", "pricing-L1.mps", "line-1-all.rep000.trace.csv"):
        assert (tmp_path / name).exists(), name
    assert (tmp_path / "catalog.txt").read_text().startswith("# conflict intervals (0)")


def test_sweep_prints_pivots(runner, scenario_file, tmp_path):
    result = runner.invoke(cli, ["sweep", "--scenario", str(scenario_file), "--ns", "1", "--ks", "1,all",
                                 "--replications", "1", "--deterministic", "--report", str(tmp_path)])
    assert result.exit_code == EXIT_OK, result.output
    assert (tmp_path / "sweep.delay_quotient_mean.csv").exists()
    assert (tmp_path / "line-1-1.csv").exists() and (tmp_path / "line-1-all.csv").exists()
