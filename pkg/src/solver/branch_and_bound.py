"""
Best-bound branch and bound over LP relaxations
"""

import heapq
import logging
import math
import time
from typing import Optional

import numpy as np

from src.config.settings import FEASIBILITY_TOL, INTEGRALITY_TOL
from src.solver.lp_model import LinearProgram, MipSolution, MipStatus

logger = logging.getLogger(__name__)


class BranchAndBound:
    """
    Branch and bound with best-bound node selection and most-fractional branching.
    Ties are broken by node creation order and column index, so runs are deterministic.
    """

    def __init__(self, lp_solver, integrality_tol: float = INTEGRALITY_TOL, node_limit: Optional[int] = None):
        self.lp_solver = lp_solver
        self.integrality_tol = integrality_tol
        self.node_limit = node_limit

    def solve(self, mip: LinearProgram, gap_target: float = 0.0, time_limit: Optional[float] = None,
              incumbent: Optional[np.ndarray] = None) -> MipSolution:
        started = time.perf_counter()
        deadline = started + time_limit if time_limit else None
        integer_cols = np.array([j for j, flag in enumerate(mip.integrality) if flag], dtype=int)
        lower, upper = mip.bounds_arrays()
        lower[integer_cols] = np.ceil(lower[integer_cols] - self.integrality_tol)
        upper[integer_cols] = np.floor(upper[integer_cols] + self.integrality_tol)

        best_x, best_obj = None, math.inf
        if incumbent is not None:
            candidate = np.asarray(incumbent, dtype=float)
            if mip.max_violation(candidate) <= 1e3 * FEASIBILITY_TOL:
                best_x, best_obj = candidate.copy(), mip.objective_value(candidate)
            else:
                logger.warning("ignoring infeasible start incumbent for %s", mip.name)

        root = self.lp_solver.solve(mip, lower=lower, upper=upper)
        if not root.optimal:
            if best_x is not None:
                return MipSolution(MipStatus.OPTIMAL, best_x, best_obj, best_obj, 0, [best_obj])
            return MipSolution(MipStatus.INFEASIBLE, None, math.inf, math.inf, 0, [])

        counter = 0
        heap = [(root.objective, counter, lower, upper, root)]
        nodes = 0
        bound_trace = []
        status = MipStatus.OPTIMAL
        best_bound = root.objective

        while heap:
            node_bound = heap[0][0]
            best_bound = min(node_bound, best_obj)
            bound_trace.append(best_bound)
            if best_x is not None and self._gap(best_obj, best_bound) <= gap_target and gap_target > 0:
                status = MipStatus.FEASIBLE
                break
            if deadline is not None and time.perf_counter() > deadline:
                status = MipStatus.TIME_LIMIT
                break
            if self.node_limit is not None and nodes >= self.node_limit:
                status = MipStatus.TIME_LIMIT
                break

            bound, _, node_lower, node_upper, solution = heapq.heappop(heap)
            if bound >= best_obj - self._cutoff(best_obj):
                continue
            if solution is None:
                solution = self.lp_solver.solve(mip, lower=node_lower, upper=node_upper)
                if not solution.optimal or solution.objective >= best_obj - self._cutoff(best_obj):
                    continue

            x = solution.x
            fractional = self._most_fractional(x, integer_cols)
            if fractional is None:
                rounded = x.copy()
                rounded[integer_cols] = np.round(rounded[integer_cols])
                best_x, best_obj = rounded, mip.objective_value(rounded)
                logger.debug("%s: incumbent %.6g after %d nodes", mip.name, best_obj, nodes)
                continue

            nodes += 1
            value = x[fractional]
            down_upper = node_upper.copy()
            down_upper[fractional] = math.floor(value)
            up_lower = node_lower.copy()
            up_lower[fractional] = math.ceil(value)
            for child_lower, child_upper in ((node_lower, down_upper), (up_lower, node_upper)):
                child = self.lp_solver.solve(mip, lower=child_lower, upper=child_upper)
                if child.optimal and child.objective < best_obj - self._cutoff(best_obj):
                    counter += 1
                    heapq.heappush(heap, (child.objective, counter, child_lower, child_upper, child))

        if not heap and status == MipStatus.OPTIMAL:
            best_bound = best_obj
        if best_x is None:
            final = MipStatus.INFEASIBLE if status == MipStatus.OPTIMAL else status
            return MipSolution(final, None, math.inf, best_bound, nodes, bound_trace)
        best_bound = min(best_bound, best_obj)
        logger.debug("%s: %s after %d nodes, objective %.6g, bound %.6g",
                     mip.name, status.value, nodes, best_obj, best_bound)
        return MipSolution(status, best_x, best_obj, best_bound, nodes, bound_trace)

    def _most_fractional(self, x: np.ndarray, integer_cols: np.ndarray) -> Optional[int]:
        if integer_cols.size == 0:
            return None
        values = x[integer_cols]
        distance = np.abs(values - np.round(values))
        if np.max(distance) <= self.integrality_tol:
            return None
        score = np.minimum(values - np.floor(values), np.ceil(values) - values)
        return int(integer_cols[int(np.argmax(score))])

    @staticmethod
    def _cutoff(best_obj: float) -> float:
        if math.isinf(best_obj):
            return 0.0
        return 1e-9 * max(1.0, abs(best_obj))

    @staticmethod
    def _gap(objective: float, bound: float) -> float:
        return max(0.0, (objective - bound) / max(1.0, abs(objective)))
