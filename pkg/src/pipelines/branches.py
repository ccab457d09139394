from typing import Any, Dict

import pandas as pd
import plotly.graph_objects as go
from loguru import logger

from src.ambrosetti_prodi.branches import (
    lower_branch_gaps,
    trace_branches,
    upper_branch_measure_fraction,
    upper_branch_pointwise,
)
from src.ambrosetti_prodi.calibration import bound_ratio
from src.ambrosetti_prodi.tstar import find_tstar
from src.pipelines.base_pipeline import BaseExperimentPipeline

DEFAULT_SAMPLES = (0.2, 0.5, 1.0, 2.0, 5.0)


class BranchesPipeline(BaseExperimentPipeline):
    """
    Lower and upper branches over ``t_samples``.

    Asserts ordering, strict decrease of the lower branch, the measure
    condition on the upper branch and the bound ratio with the configured
    (calibrated) constant. ``locate_tstar = true`` checks every sample lies
    above t* first.
    """

    kind = "branches"

    def _execute(self) -> None:
        ctx = self.context
        t_star = find_tstar(ctx).t_star if self.params.get("locate_tstar", False) else None
        samples = [float(t) for t in self.params.get("t_samples", DEFAULT_SAMPLES)]
        self.points = trace_branches(ctx, samples, t_star=t_star)

        self.tables["branches"] = pd.concat([p.to_frame() for p in self.points], ignore_index=True)
        self.ratios = [
            max(bound_ratio(ctx, p.t, p.u_low.sup_norm(), ctx.calibration.c_cal),
                bound_ratio(ctx, p.t, p.u_up.sup_norm(), ctx.calibration.c_cal) if p.complete else 0.0)
            for p in self.points
        ]
        self.tables["branch_summary"] = pd.DataFrame({
            "t": [p.t for p in self.points],
            "status": [p.status for p in self.points],
            "residual_low": [p.residual_low for p in self.points],
            "residual_up": [p.residual_up for p in self.points],
            "sup_low": [p.u_low.sup_norm() for p in self.points],
            "sup_up": [p.u_up.sup_norm() if p.complete else float("nan") for p in self.points],
            "bound_ratio": self.ratios,
        })
        self.gaps = lower_branch_gaps(self.points)
        complete = [p for p in self.points if p.complete]
        self.fractions = [
            (s.t, t.t, upper_branch_measure_fraction(s.u_up, t.u_up))
            for i, s in enumerate(complete) for t in complete[i + 1:]
        ]
        pointwise = upper_branch_pointwise(self.points)
        logger.info("Upper branch nodewise nondecreasing on the samples: {}", pointwise)
        self.summary.update({
            "t_star": t_star,
            "t_samples": samples,
            "lower_gaps": self.gaps,
            "upper_fractions": [list(f) for f in self.fractions],
            "upper_pointwise_monotone": pointwise,
            "max_bound_ratio": max(self.ratios),
        })

    def _check_invariants(self) -> None:
        incomplete = [p.t for p in self.points if not p.complete]
        self._expect("branches_complete", not incomplete, f"incomplete at t={incomplete}")
        self._expect("strictly_ordered", all(p.strictly_ordered for p in self.points if p.complete))
        self._expect("lower_strictly_decreasing", all(g > 0.0 for g in self.gaps),
                     f"smallest gap {min(self.gaps, default=float('inf')):.3e}")
        self._expect("upper_measure_half", all(f > 0.5 for _, _, f in self.fractions),
                     f"smallest fraction {min((f for _, _, f in self.fractions), default=1.0):.3f}")
        self._expect("bound_ratio", max(self.ratios) <= 1.0, f"max ratio {max(self.ratios):.4f}")

    def _generate_visualization_data(self) -> Dict[str, Any]:
        plots = {}
        df = self.tables["branch_summary"]
        fig = go.Figure()
        fig.add_trace(go.Scatter(x=df["t"].tolist(), y=(-df["sup_low"]).tolist(), mode="lines+markers",
                                 name="-|u_low|", line=dict(color="#e74c3c")))
        fig.add_trace(go.Scatter(x=df["t"].tolist(), y=df["sup_up"].tolist(), mode="lines+markers",
                                 name="|u_up|", line=dict(color="#2ecc71")))
        fig.update_layout(title="Solution branches", xaxis_title="t", yaxis_title="sup-norm",
                          template="plotly_white")
        plots["branch_norms"] = fig.to_json()

        if self.grid.dim == 1:
            long = self.tables["branches"]
            fig2 = go.Figure()
            for t, group in long.groupby("t"):
                fig2.add_trace(go.Scatter(x=group["x"].tolist(), y=group["u_low"].tolist(),
                                          name=f"u_low t={t:g}", line=dict(dash="dot")))
                fig2.add_trace(go.Scatter(x=group["x"].tolist(), y=group["u_up"].tolist(),
                                          name=f"u_up t={t:g}"))
            fig2.update_layout(title="Branch profiles", xaxis_title="x", yaxis_title="u",
                               template="plotly_white")
            plots["branch_profiles"] = fig2.to_json()
        return plots
