import pytest

from src.config.models import CgConfig, ProfileOptions
from src.config.settings import GAP_TOL
from src.data.models import PathPart, TrainPath
from src.data.synthetic import random_corridor
from src.logic.cliques import CliqueStore, update_with_path
from src.logic.conflicts import paths_conflict
from src.logic.driver import CgState, dispatch, fcfs_start, prepare_problem, run_cg, stop_reason
from src.logic.master import solve_relaxation, verify_selection
from src.logic.pricing import DualSnapshot, PricedPath, build_subproblem, groups_from_store, solve_pricing
from src.solver.backends import BundledBackend
from src.solver.lp_model import MipStatus
from tests.oracles import joint_optimum

FASTEST_ONLY = ProfileOptions(k=1, speed_levels=(1.0,))
TOL = 1e-6
CORRIDOR_OPTIMUM = 189.0


def check_report(report, problem, oracle=None):
    verify_selection(report.selected, problem.catalog)
    assert sorted(p.service for p in report.selected) == sorted(s.id for s in problem.services)
    assert report.d_end <= report.d_start + TOL
    assert report.d_end == pytest.approx(sum(p.cost for p in report.selected))
    columns = [record.n_columns for record in report.trace]
    assert columns == sorted(columns)
    assert report.status != "stalled"
    if report.status == "optimal":
        assert report.final_gap == pytest.approx(0.0, abs=GAP_TOL)
    if oracle is not None:
        assert all(record.lb <= oracle + TOL * max(1.0, oracle) for record in report.trace)
        assert report.lb_best <= oracle + TOL * max(1.0, oracle)
        assert report.d_end >= oracle - TOL


def check_optimal(report, problem, oracle):
    check_report(report, problem, oracle)
    assert report.d_end == pytest.approx(oracle)
    assert report.status in ("optimal", "converged")


def corridor_problem(seed, n_services):
    net = random_corridor(seed, n_services=n_services)
    return prepare_problem(net, net.services, FASTEST_ONLY)


def test_single_service_needs_one_iteration(line, small_config):
    service = line.services[0].with_disturbance(150)
    problem = prepare_problem(line, [service])
    report = dispatch(problem, small_config)
    assert report.iteration_count == 1
    assert report.status == "optimal"
    assert report.integer_at_cg_end
    assert report.final_gap == pytest.approx(0.0)
    assert report.d_start == report.d_end == 60.0
    assert report.selected[0].exit_time == 260


def test_fcfs_start_is_conflict_free_and_ordered(merge, small_config):
    ma, mb = merge.services
    problem = prepare_problem(merge, [mb, ma.with_disturbance(30)], FASTEST_ONLY)
    state = CgState(problem, small_config)
    paths = fcfs_start(state)
    # both enter at 30; ties break by id
    assert [p.service for p in paths] == ["MA", "MB"]
    assert paths[0].parts[0].departure >= 30
    verify_selection(paths, problem.catalog)
    assert not paths_conflict(paths[0], paths[1], problem.catalog)
    assert state.master.lp.num_cols == 2
    assert len(state.store) == 0


def test_fcfs_start_survives_a_tiny_pricing_limit(corridor):
    config = CgConfig(horizon=240, threads=1, time_limit=None, pricing_time_limit=1e-6)
    problem = prepare_problem(corridor, corridor.services, FASTEST_ONLY)
    paths = fcfs_start(CgState(problem, config))
    assert [p.service for p in paths] == ["C1", "C2", "C3"]
    verify_selection(paths, problem.catalog)


def test_groups_charge_cliques_holding_own_paths(merge, small_config):
    problem = prepare_problem(merge, merge.services, FASTEST_ONLY)
    profile_sets = problem.profile_sets
    ma_profile = profile_sets["MA"].ordered_ids()[0]
    mb_profile = profile_sets["MB"].ordered_ids()[0]
    paths = {
        "MA#0": TrainPath("MA#0", "MA", (PathPart(ma_profile, 0),), 100, 0.0),
        "MB#0": TrainPath("MB#0", "MB", (PathPart(mb_profile, 0),), 100, 0.0),
    }
    store = CliqueStore()
    for path_id in paths:
        update_with_path(store, path_id, lambda a, b: True)
    (key, members), = store.active_items()
    assert members == {"MA#0", "MB#0"}

    groups = groups_from_store(store, paths, "MA", DualSnapshot(beta={key: 25.0}))
    assert len(groups) == 1
    assert groups[0].members == {"MB#0"}
    assert groups[0].beta == 25.0
    assert not groups[0].fixed


def test_copy_of_a_master_column_prices_like_the_original(corridor, small_config):
    problem = prepare_problem(corridor, corridor.services, FASTEST_ONLY)
    state = CgState(problem, small_config)
    fcfs_start(state)
    state.build_subproblems()
    relaxation = solve_relaxation(state.master, state.backend)
    for sid, model in state.subproblems.items():
        model.apply_duals(relaxation.duals)
        priced = solve_pricing(model, BundledBackend(), relaxation.duals)
        if state.has_path(priced):
            assert priced.reduced_cost >= -small_config.negative_rc_tol


def test_corridor_reaches_the_hand_computed_optimum(corridor, small_config):
    problem = prepare_problem(corridor, corridor.services, FASTEST_ONLY)
    report = dispatch(problem, small_config)
    check_optimal(report, problem, CORRIDOR_OPTIMUM)
    assert report.profile_count == 3
    assert report.path_count > len(problem.services)


@pytest.mark.parametrize("pair", [("C1", "C2"), ("C2", "C3"), ("C1", "C3")])
def test_corridor_pairs_match_joint_enumeration(corridor, small_config, pair):
    services = [s for s in corridor.services if s.id in pair]
    problem = prepare_problem(corridor, services, FASTEST_ONLY)
    oracle = joint_optimum(services, problem.profile_sets, problem.catalog, small_config.horizon)
    check_optimal(dispatch(problem, small_config), problem, oracle)


@pytest.mark.parametrize("seed", range(4))
def test_random_pairs_match_joint_enumeration(seed, small_config):
    problem = corridor_problem(seed, 2)
    oracle = joint_optimum(problem.services, problem.profile_sets, problem.catalog, small_config.horizon)
    check_optimal(dispatch(problem, small_config), problem, oracle)


@pytest.mark.parametrize("n_services, seed", [(3, seed) for seed in range(12)] + [(4, seed) for seed in range(8)])
def test_random_corridors_match_joint_enumeration(n_services, seed, small_config):
    problem = corridor_problem(seed, n_services)
    oracle = joint_optimum(problem.services, problem.profile_sets, problem.catalog, small_config.horizon)
    check_optimal(dispatch(problem, small_config), problem, oracle)


def test_merge_with_disturbance_matches_joint_enumeration(merge, small_config):
    ma, mb = merge.services
    services = [ma.with_disturbance(40), mb]
    problem = prepare_problem(merge, services, FASTEST_ONLY)
    oracle = joint_optimum(services, problem.profile_sets, problem.catalog, small_config.horizon)
    check_optimal(dispatch(problem, small_config), problem, oracle)


def test_gap_target_stops_within_the_target(corridor, small_config):
    problem = prepare_problem(corridor, corridor.services, FASTEST_ONLY)
    exact = dispatch(problem, small_config)
    loose = dispatch(problem, small_config.model_copy(update={"gap_target": 0.1}))
    check_report(loose, problem, CORRIDOR_OPTIMUM)
    assert loose.iteration_count <= exact.iteration_count
    assert loose.status in ("gap", "tailing-off", "optimal", "converged")
    if loose.status == "gap":
        assert loose.trace[-1].gap <= 0.1
    if loose.integer_at_cg_end:
        assert loose.final_gap <= 0.1 + TOL


def test_pricing_time_limit_is_reported(corridor):
    config = CgConfig(horizon=240, threads=1, time_limit=None, pricing_time_limit=1e-6)
    problem = prepare_problem(corridor, corridor.services, FASTEST_ONLY)
    report = dispatch(problem, config)
    check_report(report, problem, CORRIDOR_OPTIMUM)
    assert report.status == "time-limit"
    assert report.iteration_count == 1
    assert report.d_end == report.d_start
    assert report.path_count == len(problem.services)


def test_overall_time_limit_is_reported(small_config):
    problem = corridor_problem(3, 5)
    report = dispatch(problem, small_config.model_copy(update={"time_limit": 1e-3}))
    check_report(report, problem)
    assert report.status in ("time-limit", "optimal", "converged")


def priced_path(service, reduced_cost, status=MipStatus.OPTIMAL, found=True):
    parts = (PathPart(f"{service}|0", 0),) if found else ()
    return PricedPath(service=service, parts=parts, exit_time=100, cost=0.0, reduced_cost=reduced_cost,
                      objective=reduced_cost, status=status)


def test_stop_reasons():
    config = CgConfig(gap_target=0.1, tailing_off_window=2, tailing_off_rel=1e-3)
    exact = CgConfig()
    done = [priced_path("r1", 0.0), priced_path("r2", 3.0)]
    better = priced_path("r1", -5.0)

    assert stop_reason(exact, done, [], 0.5, [10.0], False) == "optimal"
    assert stop_reason(exact, done + [priced_path("r3", 0.0, MipStatus.TIME_LIMIT)], [], 0.5, [10.0],
                       False) == "time-limit"
    assert stop_reason(exact, [priced_path("r1", 0.0, MipStatus.TIME_LIMIT, found=False)], [], 0.5, [10.0],
                       False) == "time-limit"
    assert stop_reason(exact, [better], [], 0.5, [10.0], False) == "stalled"

    assert stop_reason(exact, [better], [better], 0.0, [10.0], False) is None
    assert stop_reason(exact, [better], [better], 0.5, [10.0], True) == "time-limit"
    assert stop_reason(config, [better], [better], 0.05, [10.0], False) == "gap"

    flat = [100.0, 99.99, 99.98]
    assert stop_reason(config, [better], [better], 0.5, flat, False) == "tailing-off"
    assert stop_reason(config, [better], [better], 0.5, [100.0, 90.0, 80.0], False) is None
    assert stop_reason(exact, [better], [better], 0.5, flat, False) is None


def test_runs_are_deterministic(corridor, small_config):
    results = []
    for _ in range(2):
        problem = prepare_problem(corridor, corridor.services, FASTEST_ONLY)
        report = dispatch(problem, small_config)
        results.append((report.d_end, report.iteration_count, report.status,
                        [(p.service, p.parts) for p in report.selected],
                        [(r.z_rRMP, r.lb, r.n_columns, r.n_cliques) for r in report.trace]))
    assert results[0] == results[1]


def test_trace_timings_add_up(corridor, small_config):
    problem = prepare_problem(corridor, corridor.services, FASTEST_ONLY)
    report = dispatch(problem, small_config)
    assert report.iteration_count == len(report.trace)
    for record in report.trace:
        phases = record.t_master_ms + record.t_pricing_ms + record.t_clique_ms
        assert phases <= record.t_total_ms + 1.0
        assert record.lb <= record.z_rRMP + TOL
    assert report.trace_frame().shape[0] == report.iteration_count


def test_incremental_subproblem_matches_rebuild(corridor):
    config = CgConfig(horizon=240, threads=1, time_limit=None, pricing_time_limit=None)
    problem = prepare_problem(corridor, corridor.services, FASTEST_ONLY)
    state = CgState(problem, config)
    fcfs = fcfs_start(state)
    state.build_subproblems()

    first = fcfs[0]
    service = problem.service(first.service)
    shifted_parts = tuple(PathPart(part.profile, part.departure + 40) for part in first.parts)
    exit_time = first.exit_time + 40
    shifted = TrainPath(state.next_path_id(service.id), service.id, shifted_parts, exit_time,
                        float(max(0, exit_time - service.scheduled_exit)))
    state.accept(shifted)
    duals = solve_relaxation(state.master, state.backend).duals

    for sid, model in state.subproblems.items():
        model.apply_duals(duals, config.skip_inactive_cliques)
        incremental = solve_pricing(model, BundledBackend(), duals)
        groups = groups_from_store(state.store, state.paths, sid, duals)
        assert {g.key: g.members for g in groups} == {
            key: group.members for key, group in model.groups.items() if not group.fixed
        }
        fresh_model = build_subproblem(problem.service(sid), problem.profile_sets[sid], problem.catalog,
                                       state.paths, groups, duals, config)
        fresh = solve_pricing(fresh_model, BundledBackend(), duals)
        assert incremental.reduced_cost == pytest.approx(fresh.reduced_cost, abs=1e-6)


def test_run_cg_after_manual_start(merge, small_config):
    problem = prepare_problem(merge, merge.services, FASTEST_ONLY)
    state = CgState(problem, small_config)
    fcfs_start(state)
    state.build_subproblems()
    report = run_cg(small_config, state)
    assert report.path_count == len(state.paths)
    assert report.clique_count == len(state.store)
    assert report.d_start == sum(p.cost for p in state.fcfs_paths)
