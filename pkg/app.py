"""
trainpaths command line
Conflict-free train dispatching by path-based column generation: batch runs, sweeps,
network validation and debug dumps
"""

import logging
import sys
from pathlib import Path
from typing import List, Optional

import click
import numpy as np

from src.components.report_charts import ReportCharts, write_html
from src.config.models import ScenarioConfig, build_config, load_scenario
from src.config.settings import APP_DESCRIPTION, APP_TITLE, APP_VERSION, LOG_LEVEL
from src.data.models import BatchReport
from src.data.network_loader import NetworkLoader, select_services
from src.logic.batch_analyzer import BatchAnalyzer
from src.logic.driver import CgState, fcfs_start, prepare_problem, run_cg
from src.logic.harness import disturbed_services, run_batch, sample_disturbances, sweep
from src.logic.network import validate_network
from src.solver.mps import write_mps
from src.utils.errors import ConfigError, NetworkFormatError, NoProfile, NoRoute, TrainPathsError
from src.utils.helpers import derive_seed, format_table
from src.utils.report_processor import ReportWriter, batch_frame

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3

INPUT_ERRORS = (ConfigError, NetworkFormatError, NoRoute, NoProfile)

# Sample size of the disturbance boxplot
BOXPLOT_SAMPLES = 700


def configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, LOG_LEVEL.upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def apply_flags(scenario: ScenarioConfig, k: Optional[str] = None, **flags) -> ScenarioConfig:
    """CLI flags override scenario-file values; k accepts 'all' for unlimited"""
    scenario = scenario.with_overrides(**flags)
    if k is not None:
        values = scenario.model_dump()
        if k != "all" and not k.isdigit():
            raise ConfigError(f"--k expects a positive count or 'all', got '{k}'")
        values["k"] = None if k == "all" else int(k)
        scenario = build_config(ScenarioConfig, values)
    return scenario


class DispatchApp:
    """Ties the harness, analysis and report writers together for the commands"""

    def __init__(self, report_dir: Optional[Path] = None, fmt: str = "csv", deterministic: bool = False,
                 quiet: bool = False):
        self.analyzer = BatchAnalyzer()
        self.charts = ReportCharts()
        self.writer = ReportWriter(report_dir, deterministic) if report_dir else None
        self.fmt = fmt
        self.deterministic = deterministic
        self.quiet = quiet

    def echo(self, text: str = "") -> None:
        if not self.quiet:
            click.echo(text)

    def run(self, scenario: ScenarioConfig, trace: bool = False, plots: bool = False) -> int:
        batch = run_batch(scenario, deterministic=self.deterministic, progress=not self.quiet)
        self.show_batch(batch)
        if self.writer is not None:
            self.writer.write_batch(batch, self.fmt)
            if trace:
                for result in batch.results:
                    if result.ok:
                        self.writer.write_trace(result.report, f"{batch.scenario}.rep{result.replication:03d}")
            if plots:
                self.write_plots(scenario, batch)
        return self.exit_code([batch])

    def sweep(self, scenario: ScenarioConfig, ns: List[int], ks: List[Optional[int]]) -> int:
        batches = sweep(scenario, ns, ks, deterministic=self.deterministic, progress=not self.quiet)
        tables = self.analyzer.pivot_tables(batches)
        for metric, table in tables.items():
            self.echo(f"\n{metric}")
            self.echo(table.to_string())
        if self.writer is not None:
            for batch in batches:
                self.writer.write_batch(batch, self.fmt)
            self.writer.write_tables(tables)
            self.writer.write_text(self.analyzer.summary(batches).to_csv(index=False), "sweep.summary.csv")
        return self.exit_code(batches)

    def dump(self, scenario: ScenarioConfig, replication: int) -> int:
        """Catalog, clique and model dumps of a single replication"""
        if self.writer is None:
            raise ConfigError("dump needs --report DIR")
        network = NetworkLoader().load(scenario.network)
        problem = prepare_problem(network, select_services(network, scenario.n), scenario.profile_options(),
                                  threads=scenario.threads)
        self.writer.write_text(problem.catalog.dump(), "catalog.txt")

        seed = derive_seed(scenario.seed, replication)
        problem.services = disturbed_services(problem.services, seed, scenario.q, scenario.rate)
        state = CgState(problem, scenario.cg_config())
        fcfs_start(state)
        state.build_subproblems()
        report = run_cg(state.config, state)

        self.writer.write_text(state.store.dump(), "cliques.txt")
        write_mps(state.master.lp, self.writer.path_for("master.mps"))
        for service, model in sorted(state.subproblems.items()):
            write_mps(model.mip, self.writer.path_for(f"pricing-{service}.mps"))
        self.writer.write_trace(report, f"{scenario.code}.rep{replication:03d}")
        self.echo(f"Dumps written to {self.writer.directory}")
        return EXIT_OK

    def show_batch(self, batch: BatchReport) -> None:
        frame = batch_frame(batch, self.deterministic)
        self.echo(f"Scenario {batch.scenario}")
        if not frame.empty:
            self.echo(frame.to_string(index=False))
        summary = self.analyzer.summary([batch]).drop(columns=["scenario", "network"], errors="ignore")
        self.echo(summary.T.to_string(header=False))
        for line in self.analyzer.insights(batch):
            self.echo(f"- {line}")

    def write_plots(self, scenario: ScenarioConfig, batch: BatchReport) -> None:
        first = next((r.report for r in batch.results if r.ok), None)
        if first is not None:
            write_html(self.charts.iteration_times(first), self.writer.path_for(f"{batch.scenario}.iterations.html"))
            write_html(self.charts.bound_convergence(first), self.writer.path_for(f"{batch.scenario}.bounds.html"))
        rng = np.random.default_rng(scenario.seed)
        samples = sample_disturbances(rng, BOXPLOT_SAMPLES, scenario.q, scenario.rate)
        positive = samples[samples > 0]
        fig = self.charts.disturbance_boxplot({"all": samples, "positive": positive})
        write_html(fig, self.writer.path_for("disturbances.html"))

    @staticmethod
    def exit_code(batches: List[BatchReport]) -> int:
        failed = sum(len(b.failures) for b in batches)
        return EXIT_PARTIAL if failed else EXIT_OK


def _run_command(action) -> None:
    try:
        code = action()
    except INPUT_ERRORS as exc:
        click.echo(f"Error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except TrainPathsError as exc:
        click.echo(f"Error: {exc}", err=True)
        sys.exit(EXIT_PARTIAL)
    sys.exit(code)


def _parse_ks(value: str) -> List[Optional[int]]:
    return [None if item.strip() == "all" else int(item) for item in value.split(",") if item.strip()]


def _parse_ns(value: str) -> List[int]:
    return [int(item) for item in value.split(",") if item.strip()]


scenario_option = click.option("--scenario", "scenario_path", required=True,
                               type=click.Path(exists=True, dir_okay=False, path_type=Path),
                               help="Scenario JSON file")


def common_options(func):
    options = [
        click.option("--n", type=int, help="Number of train services"),
        click.option("--k", type=str, help="Reduction index (count or 'all')"),
        click.option("--gap", "gap_target", type=float, help="Relative gap target"),
        click.option("--time-limit", type=float, help="Wall-clock limit per replication (s)"),
        click.option("--seed", type=int, help="Master seed"),
        click.option("--replications", type=int, help="Number of replications"),
        click.option("--threads", type=int, help="Pricing threads"),
        click.option("--backend", "solver_backend", type=click.Choice(["bundled", "highs"])),
        click.option("--parallel-reps/--sequential-reps", "parallel_reps", default=None,
                     help="Run replications concurrently"),
        click.option("--report", "report_dir", type=click.Path(file_okay=False, path_type=Path),
                     help="Directory for reports"),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True),
        click.option("--deterministic", is_flag=True, help="Zero timing columns in reports"),
        click.option("-v", "--verbose", count=True),
        click.option("--quiet", is_flag=True),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _scenario_from(scenario_path: Path, k: Optional[str], **flags) -> ScenarioConfig:
    return apply_flags(load_scenario(scenario_path), k=k, **flags)


@click.group(help=APP_DESCRIPTION)
@click.version_option(APP_VERSION, prog_name=APP_TITLE)
def cli():
    pass


@cli.command("run")
@scenario_option
@common_options
@click.option("--trace", is_flag=True, help="Write the per-iteration trace of every replication")
@click.option("--plots", is_flag=True, help="Write plotly HTML charts")
def run_command(scenario_path, n, k, gap_target, time_limit, seed, replications, threads, solver_backend,
                parallel_reps, report_dir, fmt, deterministic, verbose, quiet, trace, plots):
    """Run the replications of one scenario"""
    configure_logging(verbose, quiet)

    def action():
        scenario = _scenario_from(scenario_path, k, n=n, gap_target=gap_target, time_limit=time_limit,
                                  seed=seed, replications=replications, threads=threads,
                                  solver_backend=solver_backend, parallel_reps=parallel_reps)
        app = DispatchApp(report_dir, fmt, deterministic, quiet)
        return app.run(scenario, trace=trace, plots=plots)

    _run_command(action)


@cli.command("sweep")
@scenario_option
@common_options
@click.option("--ns", required=True, help="Comma-separated service counts, e.g. 10,20")
@click.option("--ks", required=True, help="Comma-separated reduction indices, e.g. 1,2,all")
def sweep_command(scenario_path, n, k, gap_target, time_limit, seed, replications, threads, solver_backend,
                  parallel_reps, report_dir, fmt, deterministic, verbose, quiet, ns, ks):
    """Run batches over an n x k grid and print one pivot table per metric"""
    configure_logging(verbose, quiet)

    def action():
        scenario = _scenario_from(scenario_path, k, n=n, gap_target=gap_target, time_limit=time_limit,
                                  seed=seed, replications=replications, threads=threads,
                                  solver_backend=solver_backend, parallel_reps=parallel_reps)
        app = DispatchApp(report_dir, fmt, deterministic, quiet)
        return app.sweep(scenario, _parse_ns(ns), _parse_ks(ks))

    _run_command(action)


@cli.command("dump")
@scenario_option
@common_options
@click.option("--replication", type=int, default=0, show_default=True)
def dump_command(scenario_path, n, k, gap_target, time_limit, seed, replications, threads, solver_backend,
                 parallel_reps, report_dir, fmt, deterministic, verbose, quiet, replication):
    """Write the conflict catalog, clique store and MPS models of one replication"""
    configure_logging(verbose, quiet)

    def action():
        scenario = _scenario_from(scenario_path, k, n=n, gap_target=gap_target, time_limit=time_limit,
                                  seed=seed, replications=replications, threads=threads,
                                  solver_backend=solver_backend, parallel_reps=parallel_reps)
        return DispatchApp(report_dir, fmt, deterministic, quiet).dump(scenario, replication)

    _run_command(action)


@cli.command("validate")
@click.argument("network_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("-v", "--verbose", count=True)
def validate_command(network_path, verbose):
    """Check a network file and list its structural violations"""
    configure_logging(verbose, False)
    try:
        network = NetworkLoader().load(network_path, check=False)
    except NetworkFormatError as exc:
        click.echo(f"Error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    violations = validate_network(network)
    if violations:
        for violation in violations:
            click.echo(f"- {violation}")
        sys.exit(EXIT_CONFIG)
    rows = [["blocks", len(network.blocks)], ["points", len(network.points)],
            ["services", len(network.services)], ["crossing pairs", len(network.crossing_pairs)]]
    click.echo(f"Network '{network.name}' is valid")
    click.echo(format_table(rows, ["item", "count"]))
    sys.exit(EXIT_OK)


def main():
    cli()


if __name__ == "__main__":
    main()
