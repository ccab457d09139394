from typing import Any, Dict

import pandas as pd
import plotly.graph_objects as go

from src.ambrosetti_prodi.tstar import find_tstar
from src.pipelines.base_pipeline import BaseExperimentPipeline
from src.reporting.figures import profile_figure


class TStarPipeline(BaseExperimentPipeline):
    """Bisection for t*(h); ``expect_tstar`` / ``expect_tol`` pin an analytic value."""

    kind = "tstar"

    def _execute(self) -> None:
        self.result = find_tstar(self.context)
        self.summary.update(self.result.to_summary())
        self.summary["lambda_plus"] = self.context.lambda_plus
        self.summary["lambda_minus"] = self.context.lambda_minus

        rows = [v.to_summary() for _, v in sorted(self.result.verdicts.items())]
        self.tables["verdicts"] = pd.DataFrame(rows)
        self.tables["brackets"] = pd.DataFrame(self.result.bracket_history, columns=["t_lo", "t_hi"])

    def _check_invariants(self) -> None:
        lo, hi = self.result.final_bracket
        self._expect("tstar_width", hi - lo <= self.result.tol, f"width {hi - lo:.3e}")
        self._expect("bracket_validity", self.result.inside_calibrated_bracket,
                     f"t* = {self.result.t_star:.6f} vs calibrated {self.result.calibrated_bracket}")
        if "expect_tstar" in self.params:
            target = float(self.params["expect_tstar"])
            tol = float(self.params.get("expect_tol", 2e-3))
            self._expect("expect_tstar", abs(self.result.t_star - target) <= tol,
                         f"t* = {self.result.t_star:.6f} vs {target}")

    def _generate_visualization_data(self) -> Dict[str, Any]:
        plots = {}
        brackets = self.tables["brackets"]
        fig = go.Figure()
        steps = list(range(len(brackets)))
        fig.add_trace(go.Scatter(x=steps, y=brackets["t_lo"].tolist(), name="t_lo", mode="lines+markers",
                                 line=dict(color="#e74c3c")))
        fig.add_trace(go.Scatter(x=steps, y=brackets["t_hi"].tolist(), name="t_hi", mode="lines+markers",
                                 line=dict(color="#2ecc71")))
        fig.update_layout(title=f"t* bisection (t* = {self.result.t_star:.5f})", xaxis_title="step",
                          yaxis_title="t", template="plotly_white")
        plots["bisection"] = fig.to_json()
        plots["h"] = profile_figure([("h", self.context.h), ("phi", self.context.phi)], title="Inhomogeneity")
        return plots
