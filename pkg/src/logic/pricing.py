"""
Pricing subproblem: per-service MIP choosing profiles (y), departures (t), conflict indicators (z)
and clique memberships (z_C) for a new train path of minimal reduced cost
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Hashable, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from src.config.models import CgConfig
from src.config.settings import BIG_M_DIAGNOSTIC_FRACTION
from src.data.models import PathPart, ProfileSet, TrainPath, TrainService
from src.logic.cliques import CliqueStore, CliqueUpdate
from src.logic.conflicts import ConflictCatalog, paths_conflict, path_times
from src.solver.lp_model import MipModel, MipSolution, MipStatus, Sense
from src.utils.errors import SolverError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DualSnapshot:
    """Fulfillment duals alpha_r and clique penalties beta_C = -pi_C >= 0"""
    alpha: Mapping[str, float] = field(default_factory=dict)
    beta: Mapping[Hashable, float] = field(default_factory=dict)

    def alpha_of(self, service: str) -> float:
        return float(self.alpha.get(service, 0.0))

    def beta_of(self, key: Hashable) -> float:
        return max(0.0, float(self.beta.get(key, 0.0)))


@dataclass(frozen=True)
class PenaltyGroup:
    """A clique row as seen by one subproblem; fixed groups can never be joined"""
    key: Hashable
    members: FrozenSet[str]
    beta: float
    fixed: bool = False


@dataclass(frozen=True)
class Trigger:
    """Conflict with an opposing path iff t[lower_profile] >= lower and t[upper_profile] <= upper"""
    path: str
    kind: str
    lower_profile: str
    lower: int
    upper_profile: str
    upper: int
    profiles: Tuple[str, ...]


@dataclass
class PricedPath:
    """A priced train path with verified clique memberships"""
    service: str
    parts: Tuple[PathPart, ...]
    exit_time: int
    cost: float
    reduced_cost: float
    objective: float
    bound: float = 0.0
    cliques: Tuple[Hashable, ...] = ()
    conflicts: Tuple[str, ...] = ()
    status: MipStatus = MipStatus.OPTIMAL
    masked: Tuple[str, ...] = ()

    @property
    def found(self) -> bool:
        return bool(self.parts)

    def to_path(self, path_id: str) -> TrainPath:
        return TrainPath(path_id, self.service, self.parts, self.exit_time, self.cost)


def conflict_triggers(profile_set: ProfileSet, opposing: TrainPath, catalog: ConflictCatalog) -> List[Trigger]:
    """All conflict conditions between the service's profiles and one fixed opposing path"""
    own = profile_set.profiles
    times = path_times(opposing)
    parts = opposing.parts
    pairs = list(zip(parts, parts[1:]))
    triggers = []

    for part in parts:
        for interval in catalog.intervals_of(part.profile):
            if interval.w in own:
                t_w = part.departure
                triggers.append(Trigger(opposing.id, "K", interval.w, t_w + interval.lo,
                                        interval.w, t_w + interval.hi, (interval.w,)))

    for v in profile_set.ordered_ids():
        for w, w_next in pairs:
            cond = catalog.halting_condition(v, w.profile, w_next.profile)
            if cond is not None:
                triggers.append(Trigger(opposing.id, "H", v, w.departure + cond.lo,
                                        v, w_next.departure + cond.hi - cond.f_w, (v,)))

        for v_next in sorted(profile_set.successors[v]):
            for w in parts:
                cond = catalog.halting_condition(w.profile, v, v_next)
                if cond is not None:
                    triggers.append(Trigger(opposing.id, "H-halt", v_next, w.departure - cond.hi + cond.f_w,
                                            v, w.departure - cond.lo, (v, v_next)))
            for w, w_next in pairs:
                cond = catalog.halting_condition(v, w.profile, w_next.profile, v_next)
                if cond is not None:
                    triggers.append(Trigger(opposing.id, "HH", v_next, w.departure + cond.lo + cond.f_v,
                                            v, w_next.departure + cond.hi - cond.f_w, (v, v_next)))
                cond = catalog.halting_condition(w.profile, v, v_next, w_next.profile)
                if cond is not None:
                    triggers.append(Trigger(opposing.id, "HH", v_next, times[w.profile] - cond.hi + cond.f_w,
                                            v, times[w_next.profile] - cond.lo - cond.f_v, (v, v_next)))
    return triggers


class SubproblemModel:
    """
    MIP of one service. Kept alive across iterations: opposing paths and clique rows are
    appended, betas re-priced, frozen cliques neutralized.
    """

    def __init__(self, service: TrainService, profile_set: ProfileSet, catalog: ConflictCatalog,
                 config: CgConfig):
        self.service = service
        self.profile_set = profile_set
        self.catalog = catalog
        self.config = config
        self.mip = MipModel(f"pricing-{service.id}")
        self.t_b = service.disturbed_entry
        self.big_m = config.horizon + catalog.max_magnitude() + config.epsilon
        self.paths: Dict[str, TrainPath] = {}
        self.y_col: Dict[str, int] = {}
        self.t_col: Dict[str, int] = {}
        self.za_col: Dict[str, int] = {}
        self.zc_col: Dict[Hashable, int] = {}
        self.zc_row: Dict[Hashable, int] = {}
        self.groups: Dict[Hashable, PenaltyGroup] = {}
        self.indicator_rows: List[Tuple[int, int, Tuple[int, ...], float]] = []
        self.earliest = self._earliest_departures()
        self._build_routing()

    def _earliest_departures(self) -> Dict[str, int]:
        ps = self.profile_set
        earliest = {v: self.t_b for v in ps.start_set}
        for v in sorted(ps.profiles, key=lambda p: (ps[p].from_stage, p)):
            if v not in earliest:
                earliest[v] = min(earliest[u] + ps[u].run_time for u in ps.predecessors(v))
        return earliest

    def bounds_of(self, profile: str) -> Tuple[int, int]:
        low = self.earliest[profile]
        return low, low + self.config.horizon

    def _build_routing(self) -> None:
        mip, ps = self.mip, self.profile_set
        for v in ps.ordered_ids():
            self.y_col[v] = mip.add_binary(0.0, name=f"y[{v}]")
        for v in ps.ordered_ids():
            low, high = self.bounds_of(v)
            self.t_col[v] = mip.add_column(0.0, low, high, name=f"t[{v}]")

        latest_exit = max(self.bounds_of(v)[1] + ps[v].run_time for v in ps.end_set)
        clip = self.config.clip_early_arrivals
        self.te_col = mip.add_column(0.0 if clip else 1.0, self.t_b, latest_exit, name="t_e")
        if clip:
            self.d_col = mip.add_column(1.0, 0.0, max(0.0, latest_exit - self.service.scheduled_exit), name="d")
            mip.add_row(Sense.GE, -float(self.service.scheduled_exit),
                        [(self.d_col, 1.0), (self.te_col, -1.0)], name="delay")
        else:
            self.d_col = None
            mip.objective_offset = -float(self.service.scheduled_exit)

        # one chosen profile over every stage slot
        boundaries = sorted({ps[v].from_stage for v in ps.profiles} | {ps[v].to_stage for v in ps.profiles})
        for left, right in zip(boundaries, boundaries[1:]):
            covering = [v for v in ps.ordered_ids() if ps[v].from_stage <= left and right <= ps[v].to_stage]
            mip.add_row(Sense.EQ, 1.0, [(self.y_col[v], 1.0) for v in covering], name=f"slot[{left:g}]")

        for v in ps.ordered_ids():
            if v in ps.end_set:
                continue
            entries = [(self.y_col[w], 1.0) for w in sorted(ps.successors[v])] + [(self.y_col[v], -1.0)]
            mip.add_row(Sense.GE, 0.0, entries, name=f"flow[{v}]")

        for v in ps.ordered_ids():
            f_v = ps[v].run_time
            for w in sorted(ps.successors[v]):
                big_m = self.bounds_of(v)[1] + f_v - self.bounds_of(w)[0]
                mip.add_row(Sense.GE, f_v - 2 * big_m, [
                    (self.t_col[w], 1.0), (self.t_col[v], -1.0),
                    (self.y_col[v], -big_m), (self.y_col[w], -big_m),
                ], name=f"prec[{v},{w}]")
            if v in ps.end_set:
                big_m = self.bounds_of(v)[1] + f_v - self.t_b
                mip.add_row(Sense.GE, f_v - big_m, [
                    (self.te_col, 1.0), (self.t_col[v], -1.0), (self.y_col[v], -big_m),
                ], name=f"exit[{v}]")

    def add_opposing_path(self, path: TrainPath) -> int:
        """z_a plus the indicator rows of every reachable conflict condition with path"""
        if path.id in self.za_col:
            return 0
        mip = self.mip
        self.paths[path.id] = path
        z_a = mip.add_binary(0.0, name=f"z_a[{path.id}]")
        self.za_col[path.id] = z_a
        eps = self.config.epsilon
        added = 0
        for number, trigger in enumerate(conflict_triggers(self.profile_set, path, self.catalog)):
            low_x, high_x = self.bounds_of(trigger.lower_profile)
            low_y, high_y = self.bounds_of(trigger.upper_profile)
            if trigger.lower > high_x or trigger.upper < low_y:
                continue
            ys = tuple(self.y_col[v] for v in trigger.profiles)
            k = len(ys)
            indicators = []
            tag = f"{path.id}:{trigger.kind}{number}"
            if trigger.lower > low_x:
                big_m = high_x - trigger.lower + eps
                z_l = mip.add_binary(0.0, name=f"zl[{tag}]")
                row = mip.add_row(Sense.LE, trigger.lower - eps + k * big_m,
                                  [(self.t_col[trigger.lower_profile], 1.0), (z_l, -big_m)]
                                  + [(y, big_m) for y in ys], name=f"low[{tag}]")
                self.indicator_rows.append((row, z_l, ys, big_m))
                indicators.append(z_l)
            if trigger.upper < high_y:
                big_m = trigger.upper + eps - low_y
                z_u = mip.add_binary(0.0, name=f"zu[{tag}]")
                row = mip.add_row(Sense.GE, trigger.upper + eps - k * big_m,
                                  [(self.t_col[trigger.upper_profile], 1.0), (z_u, big_m)]
                                  + [(y, -big_m) for y in ys], name=f"up[{tag}]")
                self.indicator_rows.append((row, z_u, ys, big_m))
                indicators.append(z_u)
            if indicators:
                mip.add_row(Sense.GE, 1.0 - len(indicators),
                            [(z_a, 1.0)] + [(z, -1.0) for z in indicators], name=f"link[{tag}]")
            else:
                mip.add_row(Sense.GE, 1.0 - k, [(z_a, 1.0)] + [(y, -1.0) for y in ys], name=f"link[{tag}]")
            added += 1
        return added

    def add_group(self, group: PenaltyGroup) -> None:
        """z_C with cost beta_C and the row z_C - sum z_a >= 1 - |C|"""
        if group.key in self.groups:
            return
        self.groups[group.key] = group
        col = self.mip.add_binary(0.0 if group.fixed else group.beta, name=f"z_C[{group.key}]")
        self.zc_col[group.key] = col
        if group.fixed:
            self.mip.set_bounds(col, 0.0, 0.0)
            return
        for member in sorted(group.members):
            if member not in self.za_col:
                self.add_opposing_path(self._known_path(member))
        entries = [(col, 1.0)] + [(self.za_col[a], -1.0) for a in sorted(group.members)]
        self.zc_row[group.key] = self.mip.add_row(Sense.GE, 1.0 - len(group.members), entries,
                                                  name=f"clique[{group.key}]")

    def _known_path(self, path_id: str) -> TrainPath:
        if path_id not in self.paths:
            raise SolverError(f"subproblem {self.service.id} does not know train path {path_id}")
        return self.paths[path_id]

    def register_paths(self, paths: Iterable[TrainPath]) -> None:
        for path in paths:
            self.paths.setdefault(path.id, path)

    def extend_group(self, key: Hashable, path: TrainPath) -> None:
        """Own paths never enter a group: the service's new path takes their place in the clique"""
        if path.service == self.service.id:
            return
        group = self.groups[key]
        grown = replace(group, members=group.members | {path.id})
        self.groups[key] = grown
        if group.fixed:
            return
        self.add_opposing_path(path)
        row = self.zc_row[key]
        self.mip.add_entry(row, self.za_col[path.id], -1.0)
        self.mip.set_rhs(row, 1.0 - len(grown.members))

    def fix_group(self, key: Hashable) -> None:
        """z_C = 0 and a row that always holds"""
        group = self.groups[key]
        self.groups[key] = replace(group, fixed=True)
        self.mip.set_bounds(self.zc_col[key], 0.0, 0.0)
        self.mip.set_cost(self.zc_col[key], 0.0)
        if key in self.zc_row:
            self.mip.set_rhs(self.zc_row[key], -float(len(group.members)))

    def set_beta(self, key: Hashable, beta: float) -> None:
        group = self.groups[key]
        if group.fixed:
            return
        self.groups[key] = replace(group, beta=beta)
        self.mip.set_cost(self.zc_col[key], beta)

    def apply_duals(self, duals: DualSnapshot, skip_inactive: bool = False) -> None:
        for key in list(self.groups):
            beta = duals.beta_of(key)
            self.set_beta(key, beta)
            group = self.groups[key]
            if skip_inactive and not group.fixed and key in self.zc_row:
                self.mip.set_bounds(self.zc_col[key], 0.0, 0.0 if beta <= 0 else 1.0)
                self.mip.set_rhs(self.zc_row[key], 1.0 - len(group.members) - (1.0 if beta <= 0 else 0.0))

    def row_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for name in self.mip.row_names:
            family = name.split("[", 1)[0]
            counts[family] = counts.get(family, 0) + 1
        return counts

    def extract(self, solution: MipSolution, duals: DualSnapshot) -> PricedPath:
        """Read the chain, round and repair times, then verify conflicts and clique memberships"""
        x = solution.x
        ps = self.profile_set
        chosen = sorted((v for v in ps.profiles if x[self.y_col[v]] > 0.5),
                        key=lambda v: ps[v].from_stage)
        parts = []
        earliest = self.t_b
        for v in chosen:
            departure = max(int(round(x[self.t_col[v]])), earliest, self.earliest[v])
            parts.append(PathPart(v, departure))
            earliest = departure + ps[v].run_time
        exit_time = earliest
        delay = exit_time - self.service.scheduled_exit
        cost = float(max(0, delay) if self.config.clip_early_arrivals else delay)
        candidate = TrainPath("", self.service.id, tuple(parts), exit_time, cost)

        conflicts = tuple(a for a in sorted(self.za_col)
                          if paths_conflict(candidate, self.paths[a], self.catalog))
        masked = tuple(a for a in conflicts if x[self.za_col[a]] < 0.5)
        hit = set(conflicts)
        cliques = tuple(key for key, group in self.groups.items()
                        if not group.fixed and group.members <= hit)
        penalty = sum(self.groups[key].beta for key in cliques)
        return PricedPath(
            service=self.service.id, parts=tuple(parts), exit_time=exit_time, cost=cost,
            reduced_cost=cost + penalty - duals.alpha_of(self.service.id),
            objective=solution.objective, bound=min(solution.best_bound, solution.objective),
            cliques=cliques, conflicts=conflicts,
            status=solution.status, masked=masked,
        )

    def big_m_warnings(self, x: np.ndarray) -> int:
        """Relaxed indicator rows whose slack is within a small fraction of their M"""
        activity = self.mip.row_activity(x)
        count = 0
        for row, indicator, ys, big_m in self.indicator_rows:
            relaxed = x[indicator] > 0.5 or any(x[y] < 0.5 for y in ys)
            if not relaxed:
                continue
            rhs = self.mip.rhs[row]
            slack = rhs - activity[row] if self.mip.senses[row] == Sense.LE else activity[row] - rhs
            if slack < BIG_M_DIAGNOSTIC_FRACTION * big_m:
                count += 1
        return count


def groups_from_store(store: CliqueStore, paths: Mapping[str, TrainPath], service: str,
                      duals: DualSnapshot) -> List[PenaltyGroup]:
    """
    Active cliques as penalty groups over their members from other services. A new path of the
    service that conflicts with all of them can stand in for the service's own member, so beta_C
    is still charged.
    """
    return [_lifted_group(key, members, paths, service, duals.beta_of(key))
            for key, members in store.active_items()]


def build_subproblem(service: TrainService, profile_set: ProfileSet, catalog: ConflictCatalog,
                     paths: Mapping[str, TrainPath], groups: Iterable[PenaltyGroup],
                     duals: DualSnapshot, config: CgConfig) -> SubproblemModel:
    """Routing, precedence and exit rows plus indicator and clique rows for every group"""
    model = SubproblemModel(service, profile_set, catalog, config)
    model.register_paths(paths.values())
    for group in groups:
        model.add_group(group)
    model.apply_duals(duals, config.skip_inactive_cliques)
    logger.debug("Subproblem %s: %s", service.id, model.mip.summary())
    return model


def solve_pricing(model: SubproblemModel, backend, duals: DualSnapshot,
                  time_limit: Optional[float] = None) -> PricedPath:
    """
    Solve the subproblem; if rounding hides a conflict, re-solve with integer departure times.
    A time limit without any incumbent yields a PricedPath that is not `found` and carries only
    the solver's bound.
    """
    solution = backend.solve_mip(model.mip, gap_target=0.0, time_limit=time_limit)
    if not solution.has_incumbent:
        if solution.status != MipStatus.TIME_LIMIT:
            raise SolverError(f"pricing for service {model.service.id} found no path ({solution.status.value})")
        logger.warning("Service %s: pricing hit its time limit without a path", model.service.id)
        return PricedPath(service=model.service.id, parts=(), exit_time=model.t_b, cost=math.inf,
                          reduced_cost=math.inf, objective=math.inf, bound=solution.best_bound,
                          status=solution.status)
    priced = model.extract(solution, duals)

    if priced.masked:
        logger.debug("Service %s: conflicts with %s hidden by continuous times, re-solving with integer t",
                     model.service.id, ", ".join(priced.masked))
        for col in model.t_col.values():
            model.mip.integrality[col] = True
        try:
            retry = backend.solve_mip(model.mip, gap_target=0.0, time_limit=time_limit)
        finally:
            for col in model.t_col.values():
                model.mip.integrality[col] = False
        if retry.has_incumbent:
            solution = retry
            priced = model.extract(solution, duals)
        if priced.masked:
            logger.warning("Service %s: priced path conflicts with %s without indicator support",
                           model.service.id, ", ".join(priced.masked))

    warnings = model.big_m_warnings(solution.x)
    if warnings:
        logger.warning("Service %s: %d big-M rows close to their limit", model.service.id, warnings)
    if solution.status == MipStatus.OPTIMAL and not priced.masked:
        expected = solution.objective - duals.alpha_of(model.service.id)
        if abs(expected - priced.reduced_cost) > 1e-6 * (1.0 + abs(expected)):
            logger.debug("Service %s: reduced cost %.6f differs from MIP value %.6f",
                         model.service.id, priced.reduced_cost, expected)
    logger.debug("Service %s priced: cost %g, reduced cost %.6f, %d cliques",
                  model.service.id, priced.cost, priced.reduced_cost, len(priced.cliques))
    return priced


def update_subproblem(model: SubproblemModel, a_new: Optional[TrainPath], update: CliqueUpdate,
                      store: CliqueStore, paths: Mapping[str, TrainPath]) -> None:
    """Append a_new's indicators, grow extended clique rows and add rows for created cliques"""
    if a_new is not None:
        model.register_paths([a_new])
    else:
        model.register_paths(paths.values())
    for key, path_id in update.extended:
        if key in model.groups:
            model.extend_group(key, paths[path_id])
        else:
            model.add_group(_group_for(store, key, paths, model.service.id))
    for key in update.created:
        model.add_group(_group_for(store, key, paths, model.service.id))
    for key in update.frozen:
        if key in model.groups:
            model.fix_group(key)


def _group_for(store: CliqueStore, key: Hashable, paths: Mapping[str, TrainPath], service: str) -> PenaltyGroup:
    return _lifted_group(key, store.members(key), paths, service, 0.0)


def _lifted_group(key: Hashable, members: FrozenSet[str], paths: Mapping[str, TrainPath], service: str,
                  beta: float) -> PenaltyGroup:
    others = frozenset(a for a in members if paths[a].service != service)
    return PenaltyGroup(key, others, beta, fixed=not others)
