"""
Incrementally built LP/MIP models and solution containers
"""

import copy
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from src.utils.errors import SolverError

INF = math.inf


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class MipStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    TIME_LIMIT = "time-limit"


@dataclass(frozen=True)
class SimplexBasis:
    """Basis labels that survive later column/row additions"""
    basic: Tuple[Tuple[str, int], ...]
    at_upper: Tuple[Tuple[str, int], ...] = ()
    num_rows: int = 0


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    duals: np.ndarray
    objective: float
    iterations: int = 0
    basis: Optional[SimplexBasis] = None

    @property
    def optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL


@dataclass
class MipSolution:
    status: MipStatus
    x: Optional[np.ndarray]
    objective: float
    best_bound: float
    nodes: int = 0
    bound_trace: List[float] = field(default_factory=list)

    @property
    def gap(self) -> float:
        if self.x is None or math.isinf(self.objective):
            return INF
        return max(0.0, (self.objective - self.best_bound) / max(1.0, abs(self.objective)))

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None


class LinearProgram:
    """
    Minimization LP built column by column and row by row.
    Rows keep their sense; bounds may be infinite; entries are stored sparsely.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.costs: List[float] = []
        self.lower: List[float] = []
        self.upper: List[float] = []
        self.integrality: List[bool] = []
        self.col_names: List[str] = []
        self.senses: List[Sense] = []
        self.rhs: List[float] = []
        self.row_names: List[str] = []
        self.entries: Dict[Tuple[int, int], float] = {}
        self.objective_offset = 0.0

    @property
    def num_rows(self) -> int:
        return len(self.rhs)

    @property
    def num_cols(self) -> int:
        return len(self.costs)

    def add_column(self, cost: float, lower: float = 0.0, upper: float = INF,
                   entries: Iterable[Tuple[int, float]] = (), name: Optional[str] = None,
                   integer: bool = False) -> int:
        """Append a column; entries are (row, coefficient) pairs for existing rows"""
        if lower > upper:
            raise SolverError(f"column {name}: lower bound {lower} exceeds upper bound {upper}")
        col = self.num_cols
        pending = list(entries)
        for row, _ in pending:
            self._check_row(row)
        self.costs.append(float(cost))
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        self.integrality.append(bool(integer))
        self.col_names.append(name or f"C{col}")
        for row, coef in pending:
            self._put(row, col, coef)
        return col

    def add_row(self, sense: Sense, rhs: float, entries: Iterable[Tuple[int, float]] = (),
                name: Optional[str] = None) -> int:
        """Append a row; entries are (column, coefficient) pairs for existing columns"""
        if not math.isfinite(rhs):
            raise SolverError(f"row {name}: right-hand side must be finite")
        pending = list(entries)
        for col, _ in pending:
            self._check_col(col)
        row = self.num_rows
        self.senses.append(Sense(sense))
        self.rhs.append(float(rhs))
        self.row_names.append(name or f"R{row}")
        for col, coef in pending:
            self._put(row, col, coef)
        return row

    def add_entry(self, row: int, col: int, coef: float) -> None:
        """Add coef to the (row, col) coefficient"""
        self._check_row(row)
        self._check_col(col)
        self._put(row, col, self.entries.get((row, col), 0.0) + coef)

    def set_rhs(self, row: int, rhs: float) -> None:
        self._check_row(row)
        if not math.isfinite(rhs):
            raise SolverError("right-hand side must be finite")
        self.rhs[row] = float(rhs)

    def set_cost(self, col: int, cost: float) -> None:
        self._check_col(col)
        self.costs[col] = float(cost)

    def set_bounds(self, col: int, lower: float, upper: float) -> None:
        self._check_col(col)
        if lower > upper:
            raise SolverError(f"column {col}: lower bound {lower} exceeds upper bound {upper}")
        self.lower[col] = float(lower)
        self.upper[col] = float(upper)

    def coefficient(self, row: int, col: int) -> float:
        return self.entries.get((row, col), 0.0)

    def _put(self, row: int, col: int, coef: float) -> None:
        if coef == 0.0:
            self.entries.pop((row, col), None)
        else:
            self.entries[(row, col)] = float(coef)

    def _check_row(self, row: int) -> None:
        if not 0 <= row < self.num_rows:
            raise SolverError(f"row {row} does not exist")

    def _check_col(self, col: int) -> None:
        if not 0 <= col < self.num_cols:
            raise SolverError(f"column {col} does not exist")

    def dense_matrix(self) -> np.ndarray:
        matrix = np.zeros((self.num_rows, self.num_cols))
        for (row, col), coef in self.entries.items():
            matrix[row, col] = coef
        return matrix

    def bounds_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.array(self.lower, dtype=float), np.array(self.upper, dtype=float)

    def objective_value(self, x: np.ndarray) -> float:
        return float(np.dot(self.costs, x)) + self.objective_offset

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return self.dense_matrix() @ np.asarray(x, dtype=float)

    def max_violation(self, x: np.ndarray) -> float:
        """Largest row or bound violation of a point"""
        x = np.asarray(x, dtype=float)
        activity = self.row_activity(x) if self.num_rows else np.zeros(0)
        worst = 0.0
        for i, sense in enumerate(self.senses):
            if sense == Sense.LE:
                worst = max(worst, activity[i] - self.rhs[i])
            elif sense == Sense.GE:
                worst = max(worst, self.rhs[i] - activity[i])
            else:
                worst = max(worst, abs(activity[i] - self.rhs[i]))
        lower, upper = self.bounds_arrays()
        if self.num_cols:
            worst = max(worst, float(np.max(lower - x, initial=0.0)), float(np.max(x - upper, initial=0.0)))
        return worst

    def copy(self) -> "LinearProgram":
        return copy.deepcopy(self)

    @property
    def is_mip(self) -> bool:
        return any(self.integrality)

    def summary(self) -> Dict:
        return {
            "name": self.name,
            "rows": self.num_rows,
            "columns": self.num_cols,
            "nonzeros": len(self.entries),
            "integer_columns": sum(self.integrality),
        }


class MipModel(LinearProgram):
    """LinearProgram whose flagged columns must take integer values"""

    @classmethod
    def binary_copy(cls, lp: LinearProgram, name: Optional[str] = None) -> "MipModel":
        """Copy of lp whose columns are all binary"""
        model = cls(name or lp.name)
        model.costs = list(lp.costs)
        model.lower = [max(0.0, lo) for lo in lp.lower]
        model.upper = [min(1.0, hi) for hi in lp.upper]
        model.integrality = [True] * lp.num_cols
        model.col_names = list(lp.col_names)
        model.senses = list(lp.senses)
        model.rhs = list(lp.rhs)
        model.row_names = list(lp.row_names)
        model.entries = dict(lp.entries)
        model.objective_offset = lp.objective_offset
        return model

    def add_binary(self, cost: float, entries: Iterable[Tuple[int, float]] = (),
                   name: Optional[str] = None) -> int:
        return self.add_column(cost, 0.0, 1.0, entries, name=name, integer=True)

    @property
    def integer_columns(self) -> List[int]:
        return [j for j, flag in enumerate(self.integrality) if flag]
