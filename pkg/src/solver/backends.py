"""
Solver backends: the bundled simplex/branch-and-bound engine and an optional HiGHS engine via scipy
"""

import logging
import math
from typing import Optional, Protocol

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from src.config.settings import DUALITY_TOL, FEASIBILITY_TOL
from src.solver.branch_and_bound import BranchAndBound
from src.solver.lp_model import (
    LinearProgram, LpSolution, LpStatus, MipSolution, MipStatus, Sense, SimplexBasis,
)
from src.solver.simplex import RevisedSimplex
from src.utils.errors import ConfigError, SolverError

logger = logging.getLogger(__name__)


class SolverBackend(Protocol):
    name: str

    def solve_lp(self, lp: LinearProgram, warm_start: Optional[SimplexBasis] = None) -> LpSolution:
        ...

    def solve_mip(self, mip: LinearProgram, gap_target: float = 0.0, time_limit: Optional[float] = None,
                  incumbent: Optional[np.ndarray] = None) -> MipSolution:
        ...


class BundledBackend:
    """Default engine: revised simplex plus best-bound branch and bound"""
    name = "bundled"

    def __init__(self, check_duality: bool = False):
        self.simplex = RevisedSimplex()
        self.branch_and_bound = BranchAndBound(self.simplex)
        self.check_duality = check_duality

    def solve_lp(self, lp: LinearProgram, warm_start: Optional[SimplexBasis] = None) -> LpSolution:
        solution = self.simplex.solve(lp, warm_start=warm_start)
        if self.check_duality and solution.optimal:
            assert_strong_duality(lp, solution)
        return solution

    def solve_mip(self, mip: LinearProgram, gap_target: float = 0.0, time_limit: Optional[float] = None,
                  incumbent: Optional[np.ndarray] = None) -> MipSolution:
        return self.branch_and_bound.solve(mip, gap_target=gap_target, time_limit=time_limit, incumbent=incumbent)


class HighsBackend:
    """HiGHS through scipy.optimize; useful to cross-check the bundled engine"""
    name = "highs"

    def solve_lp(self, lp: LinearProgram, warm_start: Optional[SimplexBasis] = None) -> LpSolution:
        n, m = lp.num_cols, lp.num_rows
        matrix = lp.dense_matrix()
        le = [i for i, s in enumerate(lp.senses) if s != Sense.EQ]
        eq = [i for i, s in enumerate(lp.senses) if s == Sense.EQ]
        flip = np.array([-1.0 if lp.senses[i] == Sense.GE else 1.0 for i in le])
        rhs = np.array(lp.rhs)
        a_ub = matrix[le] * flip[:, None] if le else None
        b_ub = rhs[le] * flip if le else None
        bounds = [(None if math.isinf(lo) else lo, None if math.isinf(hi) else hi)
                  for lo, hi in zip(lp.lower, lp.upper)]
        result = linprog(
            np.array(lp.costs), A_ub=a_ub, b_ub=b_ub,
            A_eq=matrix[eq] if eq else None, b_eq=rhs[eq] if eq else None,
            bounds=bounds or None, method="highs",
        )
        if result.status == 2:
            return LpSolution(LpStatus.INFEASIBLE, np.full(n, np.nan), np.full(m, np.nan), math.nan)
        if result.status == 3:
            return LpSolution(LpStatus.UNBOUNDED, np.full(n, np.nan), np.full(m, np.nan), math.nan)
        if result.status != 0:
            raise SolverError(f"HiGHS LP failed: {result.message}")
        duals = np.zeros(m)
        if le:
            duals[le] = np.asarray(result.ineqlin.marginals) * flip
        if eq:
            duals[eq] = np.asarray(result.eqlin.marginals)
        x = np.asarray(result.x, dtype=float)
        return LpSolution(LpStatus.OPTIMAL, x, duals, lp.objective_value(x), int(result.nit))

    def solve_mip(self, mip: LinearProgram, gap_target: float = 0.0, time_limit: Optional[float] = None,
                  incumbent: Optional[np.ndarray] = None) -> MipSolution:
        matrix = mip.dense_matrix()
        lower_rows = np.array([-np.inf if s == Sense.LE else r for s, r in zip(mip.senses, mip.rhs)])
        upper_rows = np.array([np.inf if s == Sense.GE else r for s, r in zip(mip.senses, mip.rhs)])
        options = {"mip_rel_gap": gap_target}
        if time_limit:
            options["time_limit"] = time_limit
        constraints = [LinearConstraint(matrix, lower_rows, upper_rows)] if mip.num_rows else []
        result = milp(
            np.array(mip.costs), integrality=np.array(mip.integrality, dtype=int),
            bounds=Bounds(np.array(mip.lower), np.array(mip.upper)),
            constraints=constraints, options=options,
        )
        incumbent_obj = mip.objective_value(incumbent) if incumbent is not None else math.inf
        if result.x is None:
            if incumbent is not None:
                return MipSolution(MipStatus.FEASIBLE, np.asarray(incumbent, float), incumbent_obj, -math.inf)
            status = MipStatus.TIME_LIMIT if result.status == 1 else MipStatus.INFEASIBLE
            return MipSolution(status, None, math.inf, -math.inf)
        x = np.asarray(result.x, dtype=float)
        objective = mip.objective_value(x)
        bound = getattr(result, "mip_dual_bound", None)
        bound = objective if bound is None or not math.isfinite(bound) else bound + mip.objective_offset
        if incumbent is not None and incumbent_obj < objective:
            x, objective = np.asarray(incumbent, float), incumbent_obj
        status = MipStatus.OPTIMAL if result.status == 0 else MipStatus.TIME_LIMIT
        return MipSolution(status, x, objective, min(bound, objective), int(getattr(result, "mip_node_count", 0) or 0))


def get_backend(name: str = "bundled", check_duality: bool = False) -> SolverBackend:
    if name == "bundled":
        return BundledBackend(check_duality=check_duality)
    if name == "highs":
        return HighsBackend()
    raise ConfigError(f"unknown solver backend '{name}'")


def assert_strong_duality(lp: LinearProgram, solution: LpSolution) -> None:
    """Check primal feasibility and a zero duality gap for an optimal solve"""
    rhs_norm = float(np.max(np.abs(lp.rhs), initial=0.0))
    violation = lp.max_violation(solution.x)
    if violation > FEASIBILITY_TOL * (1.0 + rhs_norm) * 10:
        raise SolverError(f"{lp.name}: primal infeasibility {violation:.3g}")
    dual_objective = dual_objective_value(lp, solution)
    if abs(dual_objective - solution.objective) > DUALITY_TOL * (1.0 + abs(solution.objective)) * 10:
        raise SolverError(
            f"{lp.name}: duality gap {abs(dual_objective - solution.objective):.3g} "
            f"(primal {solution.objective:.9g}, dual {dual_objective:.9g})"
        )


def dual_objective_value(lp: LinearProgram, solution: LpSolution) -> float:
    """b'y plus the bound terms of the reduced costs"""
    y = solution.duals
    value = float(np.dot(lp.rhs, y)) if lp.num_rows else 0.0
    reduced = np.array(lp.costs) - (lp.dense_matrix().T @ y if lp.num_rows else 0.0)
    for j, dj in enumerate(np.atleast_1d(reduced)):
        bound = lp.lower[j] if dj > 0 else lp.upper[j]
        if abs(dj) <= 1e-12 or (math.isinf(bound) and abs(dj) <= DUALITY_TOL):
            continue
        value += dj * bound
    return value + lp.objective_offset
