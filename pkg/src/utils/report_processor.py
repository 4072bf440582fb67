"""
Report writing: batch CSV/JSON, per-iteration traces, sweep tables and debug dumps
"""

import json
import logging
from pathlib import Path
from typing import Dict, Optional, Union

import pandas as pd

from src.config.settings import REPORT_COLUMNS, REPORT_FORMAT_VERSION, TIMING_COLUMNS
from src.data.models import BatchReport, CgReport

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class ReportWriter:
    """Writes every report of a run below one directory"""

    def __init__(self, directory: PathLike, deterministic: bool = False):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.deterministic = deterministic

    def path_for(self, name: str) -> Path:
        return self.directory / name

    def write_batch(self, batch: BatchReport, fmt: str = "csv") -> Path:
        """Per-replication rows in the fixed column order, or JSON with aggregates"""
        frame = batch_frame(batch, self.deterministic)
        if fmt == "csv":
            path = self.path_for(f"{batch.scenario}.csv")
            frame.to_csv(path, index=False, columns=REPORT_COLUMNS)
        elif fmt == "json":
            path = self.path_for(f"{batch.scenario}.json")
            document = {
                "format_version": REPORT_FORMAT_VERSION,
                "scenario": batch.scenario,
                "columns": REPORT_COLUMNS,
                "rows": frame.to_dict(orient="records"),
                "aggregates": batch.aggregates if not self.deterministic else _without_timing(batch.aggregates),
                "failures": [{"replication": r.replication, "seed": r.seed, "error": r.error}
                             for r in batch.failures],
            }
            path.write_text(json.dumps(document, indent=2, default=str), encoding="utf-8")
        else:
            raise ValueError(f"unknown report format '{fmt}'")
        if batch.failures and fmt == "csv":
            failures = pd.DataFrame([{"replication": r.replication, "seed": r.seed, "error": r.error}
                                     for r in batch.failures])
            failures.to_csv(self.path_for(f"{batch.scenario}.failures.csv"), index=False)
        logger.info("Wrote %s", path)
        return path

    def write_trace(self, report: CgReport, name: str) -> Path:
        path = self.path_for(f"{name}.trace.csv")
        trace_frame(report, self.deterministic).to_csv(path, index=False)
        return path

    def write_tables(self, tables: Dict[str, pd.DataFrame], prefix: str = "sweep") -> Dict[str, Path]:
        """One CSV per sweep metric"""
        written = {}
        for metric, table in tables.items():
            path = self.path_for(f"{prefix}.{metric}.csv")
            table.to_csv(path)
            written[metric] = path
        return written

    def write_text(self, text: str, name: str) -> Path:
        path = self.path_for(name)
        path.write_text(text, encoding="utf-8")
        return path


def batch_frame(batch: BatchReport, deterministic: bool = False) -> pd.DataFrame:
    frame = batch.to_frame()
    if deterministic:
        frame["cpu_s"] = 0.0
    return frame


def trace_frame(report: CgReport, deterministic: bool = False) -> pd.DataFrame:
    frame = report.trace_frame()
    if deterministic:
        for column in TIMING_COLUMNS:
            if column in frame.columns:
                frame[column] = 0.0
    return frame


def _without_timing(aggregates: Dict) -> Dict:
    return {key: (0.0 if key.startswith("cpu_") else value) for key, value in aggregates.items()}


def read_batch_csv(path: PathLike) -> Optional[pd.DataFrame]:
    """Read a batch CSV back; None when the columns do not match the report layout"""
    frame = pd.read_csv(path)
    if list(frame.columns) != REPORT_COLUMNS:
        logger.warning("%s does not have the report column layout", path)
        return None
    return frame
