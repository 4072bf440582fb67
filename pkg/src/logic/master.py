"""
Restricted master problem: fulfillment rows, clique rows and train-path columns
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Hashable, List, Optional, Sequence

import numpy as np

from src.config.settings import INTEGRALITY_TOL
from src.data.models import TrainPath, TrainService
from src.logic.cliques import CliqueStore, CliqueUpdate
from src.logic.conflicts import ConflictCatalog, paths_conflict
from src.logic.pricing import DualSnapshot
from src.solver.lp_model import LinearProgram, MipModel, MipStatus, Sense, SimplexBasis
from src.solver.mps import write_mps
from src.utils.errors import IncidenceMismatch, SolverError

logger = logging.getLogger(__name__)


@dataclass
class MasterState:
    """rRMP model plus the bookkeeping between paths, cliques and rows"""
    lp: LinearProgram
    service_row: Dict[str, int]
    columns: Dict[str, int] = field(default_factory=dict)
    paths: Dict[str, TrainPath] = field(default_factory=dict)
    clique_row: Dict[Hashable, int] = field(default_factory=dict)
    basis: Optional[SimplexBasis] = None
    solved: bool = False

    @property
    def column_ids(self) -> List[str]:
        return sorted(self.columns, key=self.columns.get)

    def paths_of(self, service: str) -> List[TrainPath]:
        return [p for p in self.paths.values() if p.service == service]

    def row_members(self, row: int) -> set:
        by_col = {col: path_id for path_id, col in self.columns.items()}
        return {by_col[col] for (r, col), coef in self.lp.entries.items() if r == row and coef != 0.0}


@dataclass
class MasterSolution:
    values: Dict[str, float]
    objective: float
    duals: DualSnapshot = field(default_factory=DualSnapshot)
    integral: bool = False
    status: str = "optimal"

    def selected(self) -> List[str]:
        return sorted(a for a, value in self.values.items() if value > 0.5)


def init_master(services: Sequence[TrainService]) -> MasterState:
    """One '= 1' fulfillment row per service, no columns yet"""
    lp = LinearProgram("rrmp")
    rows = {s.id: lp.add_row(Sense.EQ, 1.0, name=f"fulfil[{s.id}]") for s in services}
    return MasterState(lp=lp, service_row=rows)


def add_path_column(state: MasterState, path: TrainPath, store: CliqueStore) -> int:
    """Column of path in its fulfillment row and every master clique row containing it"""
    if path.id in state.columns:
        raise IncidenceMismatch(f"train path {path.id} already has a master column")
    entries = [(state.service_row[path.service], 1.0)]
    for clique_id in store.cliques_of(path.id):
        if clique_id in state.clique_row:
            entries.append((state.clique_row[clique_id], 1.0))
    col = state.lp.add_column(path.cost, 0.0, float("inf"), entries, name=f"x[{path.id}]")
    state.columns[path.id] = col
    state.paths[path.id] = path
    return col


def sync_clique_rows(state: MasterState, update: CliqueUpdate, store: CliqueStore) -> None:
    """Extended rows gain their new column, created cliques become '<= 1' rows"""
    touched = []
    for clique_id, path_id in update.extended:
        if clique_id not in state.clique_row:
            continue
        row = state.clique_row[clique_id]
        col = state.columns[path_id]
        if state.lp.coefficient(row, col) == 0.0:
            state.lp.add_entry(row, col, 1.0)
        touched.append(clique_id)
    for clique_id in update.created:
        members = store.members(clique_id)
        missing = [a for a in members if a not in state.columns]
        if missing:
            raise IncidenceMismatch(f"clique {clique_id} references paths without columns: {missing}")
        entries = [(state.columns[a], 1.0) for a in sorted(members)]
        state.clique_row[clique_id] = state.lp.add_row(Sense.LE, 1.0, entries, name=f"clique[{clique_id}]")
        touched.append(clique_id)
    for clique_id in touched:
        if store.is_frozen(clique_id):
            continue
        expected = set(store.members(clique_id))
        actual = state.row_members(state.clique_row[clique_id])
        if expected != actual:
            raise IncidenceMismatch(
                f"clique {clique_id}: store has {sorted(expected)}, master row has {sorted(actual)}"
            )


def check_incidence(state: MasterState, store: CliqueStore) -> None:
    """Every active clique has a row with exactly its member columns"""
    for clique_id, members in store.active_items():
        if clique_id not in state.clique_row:
            raise IncidenceMismatch(f"clique {clique_id} has no master row")
        actual = state.row_members(state.clique_row[clique_id])
        if actual != set(members):
            raise IncidenceMismatch(f"clique {clique_id}: row members differ from the store")


def _duals(state: MasterState, y: np.ndarray) -> DualSnapshot:
    alpha = {service: float(y[row]) for service, row in state.service_row.items()}
    beta = {key: max(0.0, -float(y[row])) for key, row in state.clique_row.items()}
    return DualSnapshot(alpha=alpha, beta=beta)


def _is_integral(x: np.ndarray) -> bool:
    return bool(np.all(np.minimum(np.abs(x), np.abs(x - 1.0)) <= INTEGRALITY_TOL))


def solve_relaxation(state: MasterState, backend) -> MasterSolution:
    """LP relaxation of the restricted master with duals alpha_r and beta_C"""
    for service, row in state.service_row.items():
        if not state.paths_of(service):
            raise SolverError(f"service {service} has no column in the master")
    solution = backend.solve_lp(state.lp, warm_start=state.basis)
    if not solution.optimal:
        raise SolverError(f"master relaxation is {solution.status.value}")
    state.basis = solution.basis
    state.solved = True
    x = solution.x
    values = {path_id: float(x[col]) for path_id, col in state.columns.items()}
    return MasterSolution(values, solution.objective, _duals(state, solution.duals), _is_integral(x))


def solve_integer(state: MasterState, backend, catalog: ConflictCatalog, time_limit: Optional[float] = None,
                  incumbent: Optional[Sequence[str]] = None) -> MasterSolution:
    """Binary restricted master over the generated columns; the selection is re-verified pairwise"""
    if not state.solved:
        raise SolverError("solve the master relaxation before the integer master")
    mip = MipModel.binary_copy(state.lp, name="rmp")

    start = None
    if incumbent is not None:
        start = np.zeros(mip.num_cols)
        for path_id in incumbent:
            start[state.columns[path_id]] = 1.0
    result = backend.solve_mip(mip, gap_target=0.0, time_limit=time_limit, incumbent=start)
    if not result.has_incumbent:
        raise SolverError(f"integer master is {result.status.value}")

    values = {path_id: float(round(result.x[col])) for path_id, col in state.columns.items()}
    solution = MasterSolution(values, result.objective, integral=True,
                              status="optimal" if result.status == MipStatus.OPTIMAL else result.status.value)
    verify_selection([state.paths[a] for a in solution.selected()], catalog)
    logger.debug("Integer master: objective %.3f after %d nodes", result.objective, result.nodes)
    return solution


def verify_selection(paths: Sequence[TrainPath], catalog: ConflictCatalog) -> None:
    """One path per service and no conflicting pair"""
    services = [p.service for p in paths]
    if len(services) != len(set(services)):
        raise IncidenceMismatch("selection holds two paths of one service")
    for first, second in combinations(paths, 2):
        if paths_conflict(first, second, catalog):
            raise IncidenceMismatch(f"selected paths {first.id} and {second.id} conflict")


def export_master(state: MasterState, path) -> None:
    write_mps(state.lp, path)
