from typing import Any, Dict

import pandas as pd
import plotly.graph_objects as go

from src.ambrosetti_prodi.branches import asymptotic_floor, slope_deviations, trace_branches
from src.ambrosetti_prodi.tstar import find_tstar
from src.errors import PreconditionError
from src.pipelines.base_pipeline import BaseExperimentPipeline
from src.reporting.figures import profile_figure

DEFAULT_T_LARGE = (20.0, 200.0)


class AsymptoticsPipeline(BaseExperimentPipeline):
    """
    u_low/t → w_* and u_up/t → w* for large t.

    Deviations must shrink along ``t_large`` and stay below
    ``max_deviation`` at the largest sample; signs are checked on the whole
    interior.
    """

    kind = "asymptotics"

    def _execute(self) -> None:
        ctx = self.context
        self.t_star = find_tstar(ctx).t_star if self.params.get("locate_tstar", False) else None
        floor = asymptotic_floor(self.t_star)
        t_large = sorted(float(t) for t in self.params.get("t_large", DEFAULT_T_LARGE))
        if t_large[0] <= floor:
            raise PreconditionError(f"t_large={t_large[0]} must exceed {floor}")

        self.points = trace_branches(ctx, t_large, t_star=self.t_star)
        rows = []
        for point in self.points:
            dev_low, dev_up = slope_deviations(ctx, point)
            rows.append({
                "t": point.t,
                "dev_low": dev_low,
                "dev_up": dev_up,
                "max_low": point.u_low.max(),
                "min_up": point.u_up.min(),
            })
        self.tables["asymptotics"] = pd.DataFrame(rows)
        self.summary.update({"t_star": self.t_star, "floor": floor, "samples": rows})

    def _check_invariants(self) -> None:
        df = self.tables["asymptotics"]
        for column in ("dev_low", "dev_up"):
            values = df[column].tolist()
            # exact profiles give deviations at solver precision; they only need to stay there
            slack = 10.0 * self.settings.tol
            self._expect("deviation_decreasing", all(b <= a + slack for a, b in zip(values, values[1:])),
                         f"{column}: {values}")
        self._expect("lower_negative", bool((df["max_low"] < 0.0).all()), f"max u_low {df['max_low'].max():.3e}")
        self._expect("upper_positive", bool((df["min_up"] > 0.0).all()), f"min u_up {df['min_up'].min():.3e}")

        bound = float(self.params.get("max_deviation", 0.04))
        last = df.iloc[-1]
        worst = max(last["dev_low"], last["dev_up"])
        self._expect("max_deviation", worst <= bound, f"{worst:.4e} at t={last['t']:g}")

    def _generate_visualization_data(self) -> Dict[str, Any]:
        plots = {}
        df = self.tables["asymptotics"]
        fig = go.Figure()
        fig.add_trace(go.Scatter(x=df["t"].tolist(), y=df["dev_low"].tolist(), mode="lines+markers",
                                 name="|u_low/t - w_*|", line=dict(color="#e74c3c")))
        fig.add_trace(go.Scatter(x=df["t"].tolist(), y=df["dev_up"].tolist(), mode="lines+markers",
                                 name="|u_up/t - w*|", line=dict(color="#2ecc71")))
        fig.update_layout(title="Asymptotic slopes", xaxis_title="t", xaxis_type="log",
                          yaxis_title="deviation", template="plotly_white")
        plots["deviations"] = fig.to_json()

        last = self.points[-1]
        plots["profiles"] = profile_figure(
            [("u_low/t", last.u_low / last.t), ("w_*", self.context.w_lower),
             ("u_up/t", last.u_up / last.t), ("w*", self.context.w_star)],
            title=f"Rescaled branches at t={last.t:g}",
        )
        return plots
