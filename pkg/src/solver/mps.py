"""
Fixed-column MPS export for cross-checking models with external solvers

Field layout (1-based columns): 2-3 type, 5-12 name 1, 15-22 name 2, 25-36 value 1,
40-47 name 3, 50-61 value 2. Rows and columns are renamed R0000001.. / C0000001..
to fit the eight-character name fields; the original names are written as comment lines.
"""

import io
import math
from pathlib import Path
from typing import Union

from src.solver.lp_model import LinearProgram, Sense

_ROW_TYPE = {Sense.LE: "L", Sense.EQ: "E", Sense.GE: "G"}


def _number(value: float) -> str:
    text = f"{value:.12g}"
    return text if len(text) <= 12 else f"{value:.6e}"


def _line(code: str, name1: str, name2: str = "", value1: str = "", name3: str = "", value2: str = "") -> str:
    line = f" {code:<2} {name1:<8}  {name2:<8}  {value1:>12}"
    if name3:
        line += f"   {name3:<8}  {value2:>12}"
    return line.rstrip()


def to_mps(lp: LinearProgram) -> str:
    """Render lp in fixed MPS format"""
    row_id = [f"R{i + 1:07d}" for i in range(lp.num_rows)]
    col_id = [f"C{j + 1:07d}" for j in range(lp.num_cols)]
    by_column = {}
    for (row, col), coef in sorted(lp.entries.items(), key=lambda item: (item[0][1], item[0][0])):
        by_column.setdefault(col, []).append((row, coef))

    out = io.StringIO()
    out.write(f"* model {lp.name}: {lp.num_rows} rows, {lp.num_cols} columns\n")
    for i, name in enumerate(lp.row_names):
        out.write(f"* {row_id[i]} = {name}\n")
    for j, name in enumerate(lp.col_names):
        out.write(f"* {col_id[j]} = {name}\n")
    out.write(f"NAME          {lp.name[:8].upper()}\n")
    out.write("ROWS\n")
    out.write(" N  COST\n")
    for i, sense in enumerate(lp.senses):
        out.write(f" {_ROW_TYPE[sense]}  {row_id[i]}\n")

    out.write("COLUMNS\n")
    in_integer_block = False
    marker = 0
    for j in range(lp.num_cols):
        if lp.integrality[j] != in_integer_block:
            tag = "'INTORG'" if lp.integrality[j] else "'INTEND'"
            out.write(f"    MARKER{marker:02d}  'MARKER'                 {tag}\n")
            marker += 1
            in_integer_block = lp.integrality[j]
        if lp.costs[j] != 0.0:
            out.write(_line("", col_id[j], "COST", _number(lp.costs[j])) + "\n")
        for row, coef in by_column.get(j, []):
            out.write(_line("", col_id[j], row_id[row], _number(coef)) + "\n")
        if lp.costs[j] == 0.0 and j not in by_column:
            out.write(_line("", col_id[j], "COST", _number(0.0)) + "\n")
    if in_integer_block:
        out.write(f"    MARKER{marker:02d}  'MARKER'                 'INTEND'\n")

    out.write("RHS\n")
    if lp.objective_offset:
        out.write(_line("", "RHS", "COST", _number(-lp.objective_offset)) + "\n")
    for i, value in enumerate(lp.rhs):
        if value != 0.0:
            out.write(_line("", "RHS", row_id[i], _number(value)) + "\n")

    out.write("BOUNDS\n")
    for j in range(lp.num_cols):
        lo, hi = lp.lower[j], lp.upper[j]
        if lo == hi:
            out.write(_line("FX", "BND", col_id[j], _number(lo)) + "\n")
            continue
        if math.isinf(lo) and math.isinf(hi):
            out.write(_line("FR", "BND", col_id[j]) + "\n")
            continue
        if math.isinf(lo):
            out.write(_line("MI", "BND", col_id[j]) + "\n")
        elif lo != 0.0:
            out.write(_line("LO", "BND", col_id[j], _number(lo)) + "\n")
        if not math.isinf(hi):
            out.write(_line("UP", "BND", col_id[j], _number(hi)) + "\n")
    out.write("ENDATA\n")
    return out.getvalue()


def write_mps(lp: LinearProgram, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_mps(lp), encoding="utf-8")
    return path
