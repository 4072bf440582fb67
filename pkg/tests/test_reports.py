import json
import math

import plotly.graph_objects as go
import pytest

from src.components.report_charts import ReportCharts, write_html
from src.config.settings import REPORT_COLUMNS, SWEEP_METRICS, TRACE_COLUMNS
from src.data.models import BatchReport, CgReport, IterationRecord, MetricsCalculator, ReplicationResult
from src.logic.batch_analyzer import BatchAnalyzer, parse_scenario_code
from src.utils.report_processor import ReportWriter, batch_frame, read_batch_csv, trace_frame


def make_report(d_start, d_end, cpu=1.5, integer=True, cliques=2, iterations=2):
    trace = [
        IterationRecord(iteration=i + 1, z_rRMP=d_end + 10 - 5 * i, lb=d_end - 10 + 5 * i, gap=0.1,
                        n_columns=3 + i, n_cliques=cliques, t_master_ms=2.0, t_pricing_ms=5.0,
                        t_clique_ms=1.0, t_total_ms=8.5)
        for i in range(iterations)
    ]
    return CgReport(d_start=d_start, d_end=d_end, cpu_time=cpu, final_gap=0.0 if integer else 0.05,
                    integer_at_cg_end=integer, clique_count=cliques, iteration_count=iterations, path_count=4,
                    lb_best=d_end, z_final=d_end, trace=trace, mean_clique_size=2.5, profile_count=6)


@pytest.fixture
def batch():
    return BatchReport("corridor-3-2", [
        ReplicationResult(0, 101, report=make_report(300.0, 150.0, cpu=1.25)),
        ReplicationResult(1, 102, report=make_report(80.0, 0.0, cpu=0.75, integer=False)),
        ReplicationResult(2, 103, error="StartFailure: no conflict-free path for service C2 within the horizon"),
    ])


def test_delay_quotient_edge_cases():
    assert MetricsCalculator.delay_quotient(300.0, 150.0) == 2.0
    assert MetricsCalculator.delay_quotient(0.0, 0.0) == 1.0
    assert math.isinf(MetricsCalculator.delay_quotient(80.0, 0.0))
    assert MetricsCalculator.relative_gap(100.0, 95.0) == pytest.approx(0.05)
    assert MetricsCalculator.relative_gap(0.5, 0.0) == pytest.approx(0.5)


def test_aggregates_skip_failures_and_infinite_quotients(batch):
    aggregates = batch.aggregates
    assert aggregates["replications"] == 2
    assert aggregates["cpu_mean"] == pytest.approx(1.0)
    assert aggregates["delay_quotient_mean"] == pytest.approx(2.0)
    assert aggregates["integer_pct"] == pytest.approx(50.0)
    assert aggregates["clique_size_mean"] == pytest.approx(2.5)
    assert aggregates["routing_options"] == 6
    assert len(batch.failures) == 1


def test_csv_report_layout(tmp_path, batch):
    writer = ReportWriter(tmp_path / "reports")
    path = writer.write_batch(batch)
    assert path.name == "corridor-3-2.csv"
    frame = read_batch_csv(path)
    assert list(frame.columns) == REPORT_COLUMNS
    assert list(frame["cpu_s"]) == [1.25, 0.75]
    failures = (tmp_path / "reports" / "corridor-3-2.failures.csv").read_text()
    assert "StartFailure" in failures


def test_deterministic_reports_zero_timing(tmp_path, batch):
    writer = ReportWriter(tmp_path, deterministic=True)
    frame = read_batch_csv(writer.write_batch(batch))
    assert (frame["cpu_s"] == 0.0).all()
    assert (batch_frame(batch)["cpu_s"] > 0).all()

    report = batch.results[0].report
    trace = trace_frame(report, deterministic=True)
    assert list(trace.columns) == TRACE_COLUMNS
    assert (trace[["t_master_ms", "t_pricing_ms", "t_clique_ms", "t_total_ms"]] == 0.0).all().all()
    assert list(trace["n_columns"]) == [3, 4]
    assert writer.write_trace(report, "corridor-3-2.rep000").name == "corridor-3-2.rep000.trace.csv"


def test_json_report(tmp_path, batch):
    path = ReportWriter(tmp_path, deterministic=True).write_batch(batch, "json")
    document = json.loads(path.read_text())
    assert set(document) == {"format_version", "scenario", "columns", "rows", "aggregates", "failures"}
    assert document["columns"] == REPORT_COLUMNS
    assert len(document["rows"]) == 2
    assert document["aggregates"]["cpu_mean"] == 0.0
    assert document["failures"][0]["seed"] == 103


def test_unknown_format_is_rejected(tmp_path, batch):
    with pytest.raises(ValueError, match="unknown report format"):
        ReportWriter(tmp_path).write_batch(batch, "xlsx")


def test_foreign_csv_is_not_a_batch(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    assert read_batch_csv(path) is None


def test_parse_scenario_code():
    assert parse_scenario_code("corridor-3-2") == {"network": "corridor", "n": 3, "k": 2}
    assert parse_scenario_code("two-station-10-all") == {"network": "two-station", "n": 10, "k": "all"}


def test_summary_and_pivots(batch):
    analyzer = BatchAnalyzer()
    other = BatchReport("corridor-3-all", [ReplicationResult(0, 7, report=make_report(100.0, 50.0))])
    summary = analyzer.summary([batch, other])
    assert list(summary["scenario"]) == ["corridor-3-2", "corridor-3-all"]
    assert list(summary["failures"]) == [1, 0]

    tables = analyzer.pivot_tables([batch, other])
    assert set(tables) == set(SWEEP_METRICS)
    quotient = tables["delay_quotient_mean"]
    assert list(quotient.index) == [3]
    assert quotient.loc[3, "2"] == pytest.approx(2.0)
    assert quotient.loc[3, "all"] == pytest.approx(2.0)
    with pytest.raises(KeyError):
        analyzer.pivot([batch], "colour")


def test_insights(batch):
    lines = BatchAnalyzer().insights(batch)
    assert "delay quotient > 1 in 100% of replications" in lines
    assert "1 replications failed" in lines
    empty = BatchReport("line-1-all", [ReplicationResult(0, 1, error="boom")])
    assert BatchAnalyzer().insights(empty) == ["line-1-all: no successful replications"]


def test_charts(tmp_path, batch):
    charts = ReportCharts()
    report = batch.results[0].report
    fig = charts.iteration_times(report)
    assert isinstance(fig, go.Figure)
    assert [trace.name for trace in fig.data] == ["Total", "Clique update", "Subproblems", "Master"]
    assert list(fig.data[0].y) == [0.0085, 0.0085]
    assert len(charts.bound_convergence(report).data) == 2
    box = charts.disturbance_boxplot({"all": [0, 0, 120], "positive": [120]})
    assert len(box.data) == 1
    path = write_html(fig, tmp_path / "charts" / "iterations.html")
    assert path.exists()
