"""
Column generation driver: preprocessing, FCFS start, pricing rounds, bounds and the final integer master
"""

import logging
import math
import time
from itertools import count
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from joblib import Parallel, delayed

from src.config.models import CgConfig, ProfileOptions
from src.config.settings import GAP_TOL
from src.data.models import CgReport, IterationRecord, MetricsCalculator, Network, ProfileSet, TrainPath, TrainService
from src.logic.cliques import CliqueStore, CliqueUpdate, reconcile, update_with_path
from src.logic.conflicts import ConflictCatalog, build_catalog, paths_conflict
from src.logic.master import (
    MasterSolution, add_path_column, init_master, solve_integer, solve_relaxation, sync_clique_rows,
    verify_selection,
)
from src.logic.pricing import (
    DualSnapshot, PenaltyGroup, PricedPath, SubproblemModel, build_subproblem, groups_from_store,
    solve_pricing, update_subproblem,
)
from src.logic.profiles import ProfileCache, generate_all_profiles
from src.solver.backends import get_backend
from src.solver.lp_model import MipStatus
from src.utils.errors import StartFailure
from src.utils.helpers import Stopwatch

logger = logging.getLogger(__name__)


@dataclass
class DispatchProblem:
    """Preprocessed instance: services with disturbances, their profiles and the conflict catalog"""
    network: Network
    services: List[TrainService]
    profile_sets: Dict[str, ProfileSet]
    catalog: ConflictCatalog

    @property
    def profile_count(self) -> int:
        return sum(len(ps) for ps in self.profile_sets.values())

    def service(self, service_id: str) -> TrainService:
        return next(s for s in self.services if s.id == service_id)


def prepare_problem(net: Network, services: Sequence[TrainService], options: Optional[ProfileOptions] = None,
                    threads: int = 1, cache: Optional[ProfileCache] = None) -> DispatchProblem:
    profile_sets = generate_all_profiles(services, net, options, threads=threads, cache=cache)
    catalog = build_catalog(profile_sets, net)
    return DispatchProblem(net, list(services), profile_sets, catalog)


class CgState:
    """Everything the column generation loop mutates, owned by a single driver"""

    def __init__(self, problem: DispatchProblem, config: CgConfig):
        self.problem = problem
        self.config = config
        self.backend = get_backend(config.solver_backend)
        self.master = init_master(problem.services)
        self.store = CliqueStore()
        self.paths: Dict[str, TrainPath] = {}
        self.subproblems: Dict[str, SubproblemModel] = {}
        self.fcfs_paths: List[TrainPath] = []
        self._path_numbers: Dict[str, int] = {}

    def next_path_id(self, service: str) -> str:
        number = self._path_numbers.get(service, 0)
        self._path_numbers[service] = number + 1
        return f"{service}#{number}"

    def conflicts_with(self, first: str, second: str) -> bool:
        return paths_conflict(self.paths[first], self.paths[second], self.problem.catalog)

    def has_path(self, priced: PricedPath) -> bool:
        return any(p.service == priced.service and p.parts == priced.parts for p in self.paths.values())

    def accept(self, path: TrainPath) -> CliqueUpdate:
        """Insert a path into the conflict graph, the master and every live subproblem"""
        self.paths[path.id] = path
        update = update_with_path(self.store, path.id, self.conflicts_with)
        add_path_column(self.master, path, self.store)
        sync_clique_rows(self.master, update, self.store)
        self.propagate(update, path)
        return update

    def propagate(self, update: CliqueUpdate, path: Optional[TrainPath] = None) -> None:
        for model in self.subproblems.values():
            update_subproblem(model, path, update, self.store, self.paths)

    def build_subproblems(self) -> None:
        for service in self.problem.services:
            groups = groups_from_store(self.store, self.paths, service.id, DualSnapshot())
            self.subproblems[service.id] = build_subproblem(
                service, self.problem.profile_sets[service.id], self.problem.catalog,
                self.paths, groups, DualSnapshot(), self.config,
            )


def fcfs_start(state: CgState) -> List[TrainPath]:
    """
    First come, first served: services in order of disturbed entry time (ties by id), each priced
    with a prohibitive penalty on conflicts with every already fixed path
    """
    problem, config = state.problem, state.config
    order = sorted(problem.services, key=lambda s: (s.disturbed_entry, s.id))
    fixed: Dict[str, TrainPath] = {}
    for service in order:
        groups = [PenaltyGroup(("fcfs", a), frozenset([a]), config.fcfs_penalty) for a in sorted(fixed)]
        duals = DualSnapshot(beta={g.key: config.fcfs_penalty for g in groups})
        model = build_subproblem(service, problem.profile_sets[service.id], problem.catalog,
                                 fixed, groups, duals, config)
        priced = solve_pricing(model, get_backend(config.solver_backend), duals, config.pricing_time_limit)
        if not priced.found:
            logger.warning("FCFS: pricing for %s timed out, solving without a limit", service.id)
            priced = solve_pricing(model, get_backend(config.solver_backend), duals)
        if priced.conflicts:
            raise StartFailure(
                f"no conflict-free path for service {service.id} within the horizon",
                service=service.id,
                diagnostics={"conflicts": list(priced.conflicts), "objective": priced.objective,
                             "status": priced.status.value},
            )
        path = priced.to_path(state.next_path_id(service.id))
        fixed[path.id] = path
        state.accept(path)
        state.fcfs_paths.append(path)
        logger.debug("FCFS %s", path.describe())
    d_start = sum(p.cost for p in state.fcfs_paths)
    logger.info("FCFS start: %d paths, total delay %.0f s", len(state.fcfs_paths), d_start)
    return list(state.fcfs_paths)


def _price_all(state: CgState, duals: DualSnapshot, time_limit: Optional[float]) -> List[PricedPath]:
    for model in state.subproblems.values():
        model.apply_duals(duals, state.config.skip_inactive_cliques)
    services = [s.id for s in state.problem.services]
    backend_name = state.config.solver_backend
    return Parallel(n_jobs=state.config.threads, prefer="threads")(
        delayed(solve_pricing)(state.subproblems[s], get_backend(backend_name), duals, time_limit)
        for s in services
    )


def _pricing_time_limit(config: CgConfig, deadline: Optional[float], services: int) -> Optional[float]:
    limit = config.pricing_time_limit
    if deadline is None:
        return limit
    rounds = max(1, math.ceil(services / config.threads))
    share = max(0.1, (deadline - time.perf_counter()) / 2 / rounds)
    return share if limit is None else min(limit, share)


def stop_reason(config: CgConfig, priced: Sequence[PricedPath], negative: Sequence[PricedPath], gap: float,
                history: Sequence[float], timed_out: bool) -> Optional[str]:
    """Why the loop ends after this pricing round, or None to add the negative columns and go on"""
    if not negative:
        if any(not p.found or p.status != MipStatus.OPTIMAL for p in priced):
            return "time-limit"
        if any(p.reduced_cost < -config.negative_rc_tol for p in priced):
            # only copies of existing columns came back
            return "stalled"
        return "optimal"
    if config.gap_target > 0 and gap <= config.gap_target:
        return "gap"
    if timed_out:
        return "time-limit"
    window = config.tailing_off_window
    if (config.gap_target > 0 and len(history) > window
            and history[-1 - window] - history[-1] < config.tailing_off_rel * max(1.0, abs(history[-1]))):
        return "tailing-off"
    return None


def run_cg(config: CgConfig, state: CgState) -> CgReport:
    """Column generation until the gap target, convergence, tailing-off or the time limit"""
    cpu_started = time.process_time()
    started = time.perf_counter()
    deadline = started + config.time_limit if config.time_limit else None
    watch = Stopwatch()
    trace: List[IterationRecord] = []
    lb_best = -math.inf
    history: List[float] = []
    rows_changed = False
    status = "optimal"
    relaxation: Optional[MasterSolution] = None

    for iteration in count(1):
        watch.start("total")
        watch.start("master")
        relaxation = solve_relaxation(state.master, state.backend)
        watch.stop("master")
        z = relaxation.objective
        if history and z > history[-1] + 1e-6 * (1.0 + abs(history[-1])):
            if rows_changed:
                logger.debug("z(rRMP) rose from %.6f to %.6f after new clique rows", history[-1], z)
            else:
                logger.warning("z(rRMP) rose from %.6f to %.6f without new rows", history[-1], z)
        history.append(z)

        watch.start("pricing")
        priced = _price_all(state, relaxation.duals, _pricing_time_limit(config, deadline, len(state.subproblems)))
        watch.stop("pricing")

        lb = z + sum(min(0.0, p.bound - relaxation.duals.alpha_of(p.service)) for p in priced)
        lb_best = max(lb_best, lb)
        gap = MetricsCalculator.relative_gap(z, lb_best)
        negative = [p for p in priced if p.reduced_cost < -config.negative_rc_tol and not state.has_path(p)]

        timed_out = deadline is not None and time.perf_counter() >= deadline
        stop = stop_reason(config, priced, negative, gap, history, timed_out)
        if stop == "time-limit":
            logger.warning("Time limit reached after %d iterations", iteration)
        elif stop == "stalled":
            logger.warning("Pricing returned only copies of existing columns; stopping without proof")
        elif stop == "tailing-off":
            logger.warning("Tailing-off: z(rRMP) improved less than %.2g%% over %d iterations",
                           config.tailing_off_rel * 100, config.tailing_off_window)

        watch.start("clique")
        rows_before = len(state.master.clique_row)
        if stop is None:
            for candidate in negative:
                state.accept(candidate.to_path(state.next_path_id(candidate.service)))
            if config.reconcile_every and iteration % config.reconcile_every == 0:
                update = reconcile(state.store)
                sync_clique_rows(state.master, update, state.store)
                state.propagate(update)
        rows_changed = len(state.master.clique_row) > rows_before
        watch.stop("clique")
        total = watch.stop("total")

        trace.append(IterationRecord(
            iteration=iteration, z_rRMP=z, lb=lb, gap=gap, n_columns=len(state.master.columns),
            n_cliques=len(state.store), t_master_ms=watch.take("master"), t_pricing_ms=watch.take("pricing"),
            t_clique_ms=watch.take("clique"), t_total_ms=watch.take("total") or total,
        ))
        logger.info("iter %d: z=%.3f lb=%.3f gap=%.4f columns=%d cliques=%d",
                    iteration, z, lb, gap, len(state.master.columns), len(state.store))
        if stop is not None:
            status = stop
            break

    integral = relaxation.integral
    if integral:
        selected_ids = relaxation.selected()
        z_final = relaxation.objective
        verify_selection([state.paths[a] for a in selected_ids], state.problem.catalog)
    else:
        remaining = None if deadline is None else max(1.0, deadline - time.perf_counter())
        integer = solve_integer(state.master, state.backend, state.problem.catalog, remaining,
                                incumbent=[p.id for p in state.fcfs_paths])
        selected_ids = integer.selected()
        z_final = integer.objective

    selected = [state.paths[a] for a in selected_ids]
    d_end = float(sum(p.cost for p in selected))
    final_gap = MetricsCalculator.relative_gap(z_final, lb_best)
    if status == "optimal" and final_gap > GAP_TOL:
        # LP optimum proven, but the integer master stays above it
        status = "converged"
    report = CgReport(
        d_start=float(sum(p.cost for p in state.fcfs_paths)),
        d_end=d_end,
        cpu_time=time.process_time() - cpu_started,
        final_gap=final_gap,
        integer_at_cg_end=integral,
        clique_count=len(state.store),
        iteration_count=len(trace),
        path_count=len(state.paths),
        lb_best=lb_best,
        z_final=z_final,
        status=status,
        selected=selected,
        trace=trace,
        mean_clique_size=state.store.mean_size(),
        profile_count=state.problem.profile_count,
    )
    logger.info("CG finished (%s): d_start=%.0f d_end=%.0f gap=%.4f iterations=%d",
                status, report.d_start, report.d_end, report.final_gap, report.iteration_count)
    return report


def dispatch(problem: DispatchProblem, config: CgConfig) -> CgReport:
    """FCFS start followed by column generation"""
    state = CgState(problem, config)
    fcfs_start(state)
    state.build_subproblems()
    return run_cg(config, state)
