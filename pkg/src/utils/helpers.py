"""
Helper utilities for the dispatching solver
"""

import math
import time
from typing import Dict, List

from src.config.settings import SPLITMIX_CONSTANTS

_EPS = 1e-9


def ceil_seconds(value: float) -> int:
    """Round a duration up to whole seconds, ignoring floating-point dust"""
    return int(math.ceil(value - _EPS))


def splitmix64(state: int) -> int:
    """One splitmix64 output for the given 64-bit state"""
    c = SPLITMIX_CONSTANTS
    z = (state + c["gamma"]) & c["mask"]
    z = ((z ^ (z >> 30)) * c["mix1"]) & c["mask"]
    z = ((z ^ (z >> 27)) * c["mix2"]) & c["mask"]
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Independent sub-seed for replication index under master_seed"""
    state = (master_seed & SPLITMIX_CONSTANTS["mask"]) + index * SPLITMIX_CONSTANTS["gamma"]
    return splitmix64(state & SPLITMIX_CONSTANTS["mask"])


class Stopwatch:
    """Accumulates wall-clock milliseconds per named phase"""

    def __init__(self):
        self.totals: Dict[str, float] = {}
        self._open: Dict[str, float] = {}

    def start(self, phase: str) -> None:
        self._open[phase] = time.perf_counter()

    def stop(self, phase: str) -> float:
        elapsed = (time.perf_counter() - self._open.pop(phase)) * 1000.0
        self.totals[phase] = self.totals.get(phase, 0.0) + elapsed
        return elapsed

    def take(self, phase: str) -> float:
        """Return and reset the accumulated time of phase"""
        return self.totals.pop(phase, 0.0)


def format_table(rows: List[List], headers: List[str]) -> str:
    """Plain fixed-width text table used by the debug dumps"""
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = ["  ".join(cell.rjust(width) for cell, width in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines) + "\n"
