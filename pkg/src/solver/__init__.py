"""
Embedded LP/MIP engine
"""

from src.solver.backends import BundledBackend, HighsBackend, SolverBackend, get_backend
from src.solver.lp_model import (
    INF, LinearProgram, LpSolution, LpStatus, MipModel, MipSolution, MipStatus, Sense, SimplexBasis,
)
from src.solver.mps import to_mps, write_mps

__all__ = [
    "BundledBackend", "HighsBackend", "SolverBackend", "get_backend",
    "INF", "LinearProgram", "LpSolution", "LpStatus", "MipModel", "MipSolution", "MipStatus",
    "Sense", "SimplexBasis", "to_mps", "write_mps",
]
