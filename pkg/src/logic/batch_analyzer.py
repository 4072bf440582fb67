"""
Aggregation of batch results into experiment tables
"""

import logging
import math
from typing import Dict, List, Sequence

import pandas as pd

from src.config.settings import SWEEP_METRICS
from src.data.models import BatchReport

logger = logging.getLogger(__name__)


def parse_scenario_code(code: str) -> Dict:
    """Split an NN-n-k code; the network name may itself contain dashes"""
    name, n, k = code.rsplit("-", 2)
    return {"network": name, "n": int(n), "k": k if k == "all" else int(k)}


class BatchAnalyzer:
    """
    Builds the summary and pivot tables of one or more batches.
    Every figure is recomputed from the per-replication rows.
    """

    def summary(self, batches: Sequence[BatchReport]) -> pd.DataFrame:
        """One row per scenario with the batch aggregates"""
        rows = []
        for batch in batches:
            row = {"scenario": batch.scenario, **parse_scenario_code(batch.scenario)}
            row.update(batch.aggregates)
            row["failures"] = len(batch.failures)
            rows.append(row)
        return pd.DataFrame(rows)

    def pivot(self, batches: Sequence[BatchReport], metric: str) -> pd.DataFrame:
        """n as rows, k as columns, one aggregate metric as values"""
        if metric not in SWEEP_METRICS:
            raise KeyError(f"unknown sweep metric '{metric}'")
        summary = self.summary(batches)
        if summary.empty or metric not in summary.columns:
            return pd.DataFrame()
        summary["k"] = summary["k"].astype(str)
        table = summary.pivot_table(index="n", columns="k", values=metric, aggfunc="first")
        table.columns.name = "k"
        return table

    def pivot_tables(self, batches: Sequence[BatchReport]) -> Dict[str, pd.DataFrame]:
        return {metric: self.pivot(batches, metric) for metric in SWEEP_METRICS}

    def insights(self, batch: BatchReport) -> List[str]:
        """Short plain-text findings for the console summary"""
        frame = batch.to_frame()
        if frame.empty:
            return [f"{batch.scenario}: no successful replications"]
        lines = []
        improved = (frame["delay_quotient"] > 1.0).mean() * 100.0
        lines.append(f"delay quotient > 1 in {improved:.0f}% of replications")
        aggregates = batch.aggregates
        quotient = aggregates.get("delay_quotient_mean", math.inf)
        if math.isfinite(quotient):
            lines.append(f"mean delay quotient {quotient:.2f}")
        else:
            lines.append("no delay left after column generation in any replication")
        lines.append(f"{aggregates['integer_pct']:.0f}% integer after column generation")
        if aggregates["gap_mean"] > 0:
            lines.append(f"mean final gap {aggregates['gap_mean']:.4f}")
        if batch.failures:
            lines.append(f"{len(batch.failures)} replications failed")
        return lines
