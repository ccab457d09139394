from typing import Any, Dict

import pandas as pd
import plotly.graph_objects as go

from src.ambrosetti_prodi.tstar import tstar_continuity_probe
from src.discretization.field import Field
from src.pipelines.base_pipeline import BaseExperimentPipeline

DEFAULT_SCALES = (1.0, 0.5, 0.25, 0.125)


class ContinuityProbePipeline(BaseExperimentPipeline):
    """
    t*(h + s·direction) against t*(h) for shrinking s.

    ``direction = "phi"`` shifts t* by exactly -s; any other expression
    only needs |Δt*| to decay with s.
    """

    kind = "continuity_probe"

    def _execute(self) -> None:
        ctx = self.context
        self.direction = str(self.params.get("direction", "sin(3*x)"))
        self.scales = [float(s) for s in self.params.get("scales", DEFAULT_SCALES)]
        base = ctx.phi if self.direction == "phi" else Field.from_expression(self.grid, self.direction)
        rows = tstar_continuity_probe(ctx, [s * base for s in self.scales])
        self.tables["continuity"] = pd.DataFrame(
            [{"scale": s, "perturbation_norm": n, "tstar_shift": dt} for s, (n, dt) in zip(self.scales, rows)]
        )
        self.summary.update({"direction": self.direction, "rows": [list(r) for r in rows]})

    def _check_invariants(self) -> None:
        df = self.tables["continuity"]
        tol = 2.0 * self.settings.tstar_tol
        if self.direction == "phi":
            error = float((df["tstar_shift"] - df["scale"]).abs().max())
            self._expect("exact_shift", error <= tol, f"largest error {error:.3e}")
        else:
            ordered = df.sort_values("scale", ascending=False)["tstar_shift"].tolist()
            self._expect("shift_decay", all(b <= a + tol for a, b in zip(ordered, ordered[1:])),
                         f"|dt*| = {ordered}")

    def _generate_visualization_data(self) -> Dict[str, Any]:
        df = self.tables["continuity"]
        fig = go.Figure(go.Scatter(x=df["perturbation_norm"].tolist(), y=df["tstar_shift"].tolist(),
                                   mode="lines+markers", line=dict(color="#1abc9c")))
        fig.update_layout(title=f"t* continuity along {self.direction}", xaxis_title="|dh|",
                          yaxis_title="|dt*|", template="plotly_white")
        return {"continuity": fig.to_json()}
