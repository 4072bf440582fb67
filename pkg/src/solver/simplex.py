"""
Bounded-variable revised simplex
Two phases with a slack crash basis, Dantzig pricing and a Bland fallback after degenerate pivots.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from src.config.settings import (
    BLAND_AFTER_DEGENERATE_PIVOTS, DUALITY_TOL, FEASIBILITY_TOL, PIVOT_TOL, SIMPLEX_MAX_ITERATIONS,
)
from src.solver.lp_model import LinearProgram, LpSolution, LpStatus, Sense, SimplexBasis
from src.utils.errors import SolverError

logger = logging.getLogger(__name__)

AT_LOWER, AT_UPPER, FREE_ZERO, BASIC = 0, 1, 2, -1


class _State:
    """Working arrays of one simplex run"""

    def __init__(self, A, b, cost, lo, hi):
        self.A = A
        self.b = b
        self.cost = cost
        self.lo = lo
        self.hi = hi
        self.m, self.N = A.shape
        self.x = np.zeros(self.N)
        self.status = np.full(self.N, AT_LOWER, dtype=int)
        self.basic = np.zeros(self.m, dtype=int)
        self.Binv = np.eye(self.m)

    def place_nonbasic(self, j: int, prefer_upper: bool = False) -> None:
        if prefer_upper and math.isfinite(self.hi[j]):
            self.status[j], self.x[j] = AT_UPPER, self.hi[j]
        elif math.isfinite(self.lo[j]):
            self.status[j], self.x[j] = AT_LOWER, self.lo[j]
        elif math.isfinite(self.hi[j]):
            self.status[j], self.x[j] = AT_UPPER, self.hi[j]
        else:
            self.status[j], self.x[j] = FREE_ZERO, 0.0

    def refactor(self) -> None:
        try:
            self.Binv = np.linalg.inv(self.A[:, self.basic])
        except np.linalg.LinAlgError as exc:
            raise SolverError("basis matrix became singular") from exc
        nonbasic = self.status != BASIC
        rest = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basic] = self.Binv @ rest


class RevisedSimplex:
    """Dense revised simplex for small and medium LPs"""

    def __init__(self, feasibility_tol: float = FEASIBILITY_TOL, optimality_tol: float = DUALITY_TOL,
                 pivot_tol: float = PIVOT_TOL, max_iterations: int = SIMPLEX_MAX_ITERATIONS,
                 bland_after: int = BLAND_AFTER_DEGENERATE_PIVOTS, refactor_every: int = 100):
        self.feasibility_tol = feasibility_tol
        self.optimality_tol = optimality_tol
        self.pivot_tol = pivot_tol
        self.max_iterations = max_iterations
        self.bland_after = bland_after
        self.refactor_every = refactor_every

    def solve(self, lp: LinearProgram, warm_start: Optional[SimplexBasis] = None,
              lower: Optional[np.ndarray] = None, upper: Optional[np.ndarray] = None) -> LpSolution:
        """Solve lp, optionally with overriding column bounds and a warm-start basis"""
        m, n = lp.num_rows, lp.num_cols
        lo, hi = lp.bounds_arrays()
        if lower is not None:
            lo = np.asarray(lower, dtype=float).copy()
        if upper is not None:
            hi = np.asarray(upper, dtype=float).copy()
        c = np.array(lp.costs, dtype=float)
        b = np.array(lp.rhs, dtype=float)

        if np.any(lo > hi + self.feasibility_tol):
            return self._result(LpStatus.INFEASIBLE, n, m)
        if m == 0:
            return self._solve_unconstrained(lp, c, lo, hi)

        slack_lo = np.array([0.0 if s == Sense.LE else (-math.inf if s == Sense.GE else 0.0) for s in lp.senses])
        slack_hi = np.array([math.inf if s == Sense.LE else 0.0 for s in lp.senses])
        A = np.hstack([lp.dense_matrix(), np.eye(m)])
        cost = np.concatenate([c, np.zeros(m)])
        state = _State(A, b, cost, np.concatenate([lo, slack_lo]), np.concatenate([hi, slack_hi]))

        iterations = 0
        warm = warm_start is not None and self._warm_start(state, warm_start, n)
        if not warm:
            state, n_art = self._crash(state)
            if n_art:
                phase_one_cost = np.zeros(state.N)
                phase_one_cost[state.N - n_art:] = 1.0
                status, used = self._iterate(state, phase_one_cost)
                iterations += used
                infeasibility = float(np.sum(state.x[state.N - n_art:]))
                tolerance = 10 * self.feasibility_tol * (1.0 + float(np.max(np.abs(b), initial=0.0)))
                if infeasibility > tolerance:
                    logger.debug("phase one ended with infeasibility %.3g", infeasibility)
                    return self._result(LpStatus.INFEASIBLE, n, m, iterations=iterations)
                artificial = slice(state.N - n_art, state.N)
                state.lo[artificial] = 0.0
                state.hi[artificial] = 0.0
                state.cost[artificial] = 0.0
                nonbasic_art = [j for j in range(state.N - n_art, state.N) if state.status[j] != BASIC]
                for j in nonbasic_art:
                    state.status[j], state.x[j] = AT_LOWER, 0.0

        status, used = self._iterate(state, state.cost)
        iterations += used
        if status == LpStatus.UNBOUNDED:
            return self._result(LpStatus.UNBOUNDED, n, m, iterations=iterations)

        y = state.cost[state.basic] @ state.Binv
        x = state.x[:n].copy()
        x = np.minimum(np.maximum(x, lo), hi)
        return LpSolution(
            status=LpStatus.OPTIMAL,
            x=x,
            duals=np.asarray(y, dtype=float),
            objective=lp.objective_value(x),
            iterations=iterations,
            basis=self._labels(state, n, m),
        )

    def _solve_unconstrained(self, lp, c, lo, hi) -> LpSolution:
        x = np.zeros(len(c))
        for j, cj in enumerate(c):
            if cj > 0:
                target = lo[j]
            elif cj < 0:
                target = hi[j]
            else:
                target = lo[j] if math.isfinite(lo[j]) else (hi[j] if math.isfinite(hi[j]) else 0.0)
            if not math.isfinite(target):
                return self._result(LpStatus.UNBOUNDED, len(c), 0)
            x[j] = target
        return LpSolution(LpStatus.OPTIMAL, x, np.zeros(0), lp.objective_value(x), 0, SimplexBasis(()))

    @staticmethod
    def _result(status, n, m, iterations=0) -> LpSolution:
        return LpSolution(status, np.full(n, np.nan), np.full(m, np.nan), math.nan, iterations)

    def _crash(self, state: _State) -> Tuple[_State, int]:
        """Slack basis where the slack can absorb the residual, artificials elsewhere"""
        m, n_total = state.m, state.N
        for j in range(n_total):
            state.place_nonbasic(j)
        residual = state.b - state.A @ state.x
        n_orig = n_total - m
        needs_artificial = []
        for i in range(m):
            slack = n_orig + i
            value = state.x[slack] + residual[i]
            if state.lo[slack] - self.feasibility_tol <= value <= state.hi[slack] + self.feasibility_tol:
                state.basic[i] = slack
                state.status[slack] = BASIC
                state.x[slack] = value
            else:
                needs_artificial.append(i)
        if not needs_artificial:
            state.Binv = np.eye(m)
            return state, 0

        # Rebuild with one artificial column per uncovered row.
        k = len(needs_artificial)
        columns = np.zeros((m, k))
        signs = []
        for col, i in enumerate(needs_artificial):
            slack = n_orig + i
            state.place_nonbasic(slack)
            row_residual = state.b[i] - state.A[i] @ state.x
            sign = 1.0 if row_residual >= 0 else -1.0
            columns[i, col] = sign
            signs.append((i, sign, abs(row_residual)))
        grown = _State(
            np.hstack([state.A, columns]), state.b,
            np.concatenate([state.cost, np.zeros(k)]),
            np.concatenate([state.lo, np.zeros(k)]),
            np.concatenate([state.hi, np.full(k, math.inf)]),
        )
        grown.x[:n_total] = state.x
        grown.status[:n_total] = state.status
        grown.basic[:] = state.basic
        binv_diag = np.ones(m)
        for col, (i, sign, value) in enumerate(signs):
            j = n_total + col
            grown.basic[i] = j
            grown.status[j] = BASIC
            grown.x[j] = value
            binv_diag[i] = sign
        grown.Binv = np.diag(binv_diag)
        return grown, k

    def _warm_start(self, state: _State, basis: SimplexBasis, n: int) -> bool:
        m = state.m
        chosen = []
        for kind, index in basis.basic:
            j = index if kind == "c" else n + index
            if (kind == "c" and index < n) or (kind == "r" and index < m):
                chosen.append(j)
        # rows added since the basis was taken enter with their slack
        order = list(range(basis.num_rows, m)) + list(range(min(basis.num_rows, m)))
        for i in order:
            if len(chosen) >= m:
                break
            if n + i not in chosen:
                chosen.append(n + i)
        if len(chosen) != m or len(set(chosen)) != m:
            return False
        upper = {(n + index if kind == "r" else index) for kind, index in basis.at_upper
                 if (kind == "c" and index < n) or (kind == "r" and index < m)}
        for j in range(state.N):
            state.place_nonbasic(j, prefer_upper=j in upper)
        state.basic = np.array(chosen, dtype=int)
        state.status[state.basic] = BASIC
        try:
            state.refactor()
        except SolverError:
            return False
        x_b = state.x[state.basic]
        tol = self.feasibility_tol * 10
        feasible = np.all(x_b >= state.lo[state.basic] - tol) and np.all(x_b <= state.hi[state.basic] + tol)
        return bool(feasible)

    def _iterate(self, state: _State, cost: np.ndarray) -> Tuple[LpStatus, int]:
        degenerate_run = 0
        iterations = 0
        while True:
            iterations += 1
            if iterations > self.max_iterations:
                raise SolverError(f"simplex iteration limit {self.max_iterations} reached")
            if iterations % self.refactor_every == 0:
                state.refactor()

            y = cost[state.basic] @ state.Binv
            d = cost - y @ state.A
            movable = state.hi - state.lo > self.pivot_tol
            eligible = (
                ((state.status == AT_LOWER) & (d < -self.optimality_tol) & movable)
                | ((state.status == AT_UPPER) & (d > self.optimality_tol) & movable)
                | ((state.status == FREE_ZERO) & (np.abs(d) > self.optimality_tol))
            )
            if not eligible.any():
                return LpStatus.OPTIMAL, iterations

            bland = degenerate_run > self.bland_after
            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                q = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if d[q] < 0 else -1.0
            alpha = state.Binv @ state.A[:, q]
            delta = direction * alpha

            basic = state.basic
            x_b = state.x[basic]
            lo_b, hi_b = state.lo[basic], state.hi[basic]
            ratios = np.full(state.m, math.inf)
            down = (delta > self.pivot_tol) & np.isfinite(lo_b)
            up = (delta < -self.pivot_tol) & np.isfinite(hi_b)
            ratios[down] = (x_b[down] - lo_b[down]) / delta[down]
            ratios[up] = (hi_b[up] - x_b[up]) / (-delta[up])
            ratios = np.maximum(ratios, 0.0)
            theta_rows = float(np.min(ratios)) if state.m else math.inf
            span = state.hi[q] - state.lo[q]
            theta_flip = span if math.isfinite(span) else math.inf

            if math.isinf(theta_rows) and math.isinf(theta_flip):
                return LpStatus.UNBOUNDED, iterations

            if theta_flip <= theta_rows:
                theta = theta_flip
                state.x[q] += direction * theta
                state.x[basic] = x_b - theta * delta
                if state.status[q] == AT_LOWER:
                    state.status[q], state.x[q] = AT_UPPER, state.hi[q]
                else:
                    state.status[q], state.x[q] = AT_LOWER, state.lo[q]
            else:
                theta = theta_rows
                ties = np.flatnonzero(ratios <= theta + 1e-12)
                if bland:
                    leave = int(ties[np.argmin(basic[ties])])
                else:
                    leave = int(ties[np.argmax(np.abs(delta[ties]))])
                state.x[q] += direction * theta
                state.x[basic] = x_b - theta * delta
                outgoing = int(basic[leave])
                if delta[leave] > 0:
                    state.status[outgoing], state.x[outgoing] = AT_LOWER, state.lo[outgoing]
                else:
                    state.status[outgoing], state.x[outgoing] = AT_UPPER, state.hi[outgoing]
                if not math.isfinite(state.x[outgoing]):
                    state.status[outgoing], state.x[outgoing] = FREE_ZERO, 0.0
                pivot = alpha[leave]
                pivot_row = state.Binv[leave, :] / pivot
                state.Binv -= np.outer(alpha, pivot_row)
                state.Binv[leave, :] = pivot_row
                state.basic[leave] = q
                state.status[q] = BASIC

            degenerate_run = degenerate_run + 1 if theta <= 1e-12 else 0

    @staticmethod
    def _labels(state: _State, n: int, m: int) -> SimplexBasis:
        def label(j):
            return ("c", int(j)) if j < n else ("r", int(j - n))

        basic = tuple(label(j) for j in state.basic if j < n + m)
        at_upper = tuple(label(j) for j in range(n + m) if state.status[j] == AT_UPPER)
        return SimplexBasis(basic=basic, at_upper=at_upper, num_rows=m)
