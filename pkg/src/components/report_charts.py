"""
Report charts
Plotly figures for the per-iteration time decomposition and the disturbance distribution
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd
import plotly.express as px
import plotly.graph_objects as go

from src.config.settings import CHART_COLORS
from src.data.models import CgReport

logger = logging.getLogger(__name__)


class ReportCharts:
    """
    Figure builders for run reports. Each method takes prepared data and returns a figure;
    writing is left to write_html.
    """

    def __init__(self, colors: Optional[Dict[str, str]] = None):
        self.colors = colors or CHART_COLORS

    def iteration_times(self, report: CgReport, title: str = "Computation time per CG iteration") -> go.Figure:
        """Total, clique update, subproblem and master time of each iteration in seconds"""
        frame = report.trace_frame()
        fig = go.Figure()
        if frame.empty:
            return fig
        series = [
            ("total", "t_total_ms", "Total"),
            ("clique", "t_clique_ms", "Clique update"),
            ("pricing", "t_pricing_ms", "Subproblems"),
            ("master", "t_master_ms", "Master"),
        ]
        for key, column, label in series:
            fig.add_trace(go.Scatter(
                x=frame["iteration"], y=frame[column] / 1000.0, name=label,
                mode="lines+markers", line=dict(color=self.colors[key]),
            ))
        fig.update_layout(
            title=title,
            xaxis_title="Iteration",
            yaxis_title="Time (s)",
            legend_title="Phase",
        )
        return fig

    def bound_convergence(self, report: CgReport) -> go.Figure:
        frame = report.trace_frame()
        long = frame.melt(id_vars="iteration", value_vars=["z_rRMP", "lb"], var_name="value", value_name="objective")
        fig = px.line(long, x="iteration", y="objective", color="value", markers=True,
                      title="Relaxation objective and Lagrangian bound")
        return fig

    def disturbance_boxplot(self, samples: Dict[str, Sequence[int]],
                            title: str = "Entry disturbances") -> go.Figure:
        """One box per sample set, whiskers at 1.5 IQR"""
        frame = pd.concat(
            [pd.DataFrame({"sample": label, "delay_s": np.asarray(values, dtype=float)})
             for label, values in samples.items()],
            ignore_index=True,
        )
        fig = px.box(frame, x="sample", y="delay_s", title=title,
                     color_discrete_sequence=[self.colors["disturbance"]])
        fig.update_layout(xaxis_title="", yaxis_title="Delay (s)")
        return fig


def write_html(fig: go.Figure, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.write_html(str(path), include_plotlyjs="cdn")
    logger.info("Wrote chart %s", path)
    return path
