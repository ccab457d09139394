from typing import Any, Dict

import numpy as np
import pandas as pd
import plotly.graph_objects as go
from loguru import logger

from src.discretization.field import Field
from src.discretization.grid import Grid
from src.discretization.scheme import apply_Fh
from src.errors import CertificateError
from src.operators.controlled import Sign
from src.pipelines.base_pipeline import BaseExperimentPipeline
from src.spectral.certificate import eigen_lower_bound_certificate
from src.spectral.eigen import principal_half_eigen


def sine_mode(grid: Grid, m: int) -> Field:
    """Product of sin(mπ(x - lo)/L) over the axes."""
    values = np.ones(grid.size)
    for axis, (lo, hi) in enumerate(grid.extents):
        values *= np.sin(m * np.pi * (grid.coordinates[:, axis] - lo) / (hi - lo))
    return Field(grid, values)


class CertificatePipeline(BaseExperimentPipeline):
    """
    Certified lower bounds for λ₁⁺ from perturbed eigenfunctions.

    Instance i uses w = φ + ζ_i·mode with ζ_i spread over (0, ``zeta_max``]
    and eps = (F_h[w])⁺. Every certificate must lie below the lower end of
    the Collatz-Wielandt bracket; on operators with δ = 0 it must vanish.
    """

    kind = "certificate"

    def _execute(self) -> None:
        d = self.discretization.homogeneous()
        self.delta = d.delta
        self.pair = principal_half_eigen(d, Sign.PLUS, **self.settings.eigen_options())
        instances = int(self.params.get("instances", 20))
        zeta_max = float(self.params.get("zeta_max", 0.3))
        modes = [int(m) for m in self.params.get("modes", (2, 3))]

        rows = []
        for i in range(instances):
            zeta = zeta_max * (i + 1) / instances
            m = modes[i % len(modes)]
            w = self.pair.phi + zeta * sine_mode(self.grid, m)
            eps = apply_Fh(d, w).positive_part
            try:
                bound = eigen_lower_bound_certificate(d, w, eps, p=self.settings.norm_p)
                status = "certified"
            except CertificateError as e:
                logger.warning("Instance {} (zeta={:.3f}, mode {}) rejected: {}", i, zeta, m, e)
                bound, status = float("nan"), "rejected"
            rows.append({"instance": i, "zeta": zeta, "mode": m, "eps_norm": eps.lp_norm(self.settings.norm_p),
                         "bound": bound, "status": status})

        self.tables["certificates"] = pd.DataFrame(rows)
        self.summary.update({
            "lambda_plus": self.pair.value,
            "bracket": list(self.pair.bracket),
            "delta": self.delta,
            "certified": sum(r["status"] == "certified" for r in rows),
            "instances": instances,
        })

    def _check_invariants(self) -> None:
        df = self.tables["certificates"]
        certified = df[df["status"] == "certified"]
        minimum = int(self.params.get("min_certified", len(df)))
        self._expect("certified_count", len(certified) >= minimum, f"{len(certified)} of {len(df)} certified")

        ceiling = self.pair.bracket[0] + self.settings.eigen_tol
        worst = certified["bound"].max() if len(certified) else float("-inf")
        self._expect("certificate_soundness", worst <= ceiling, f"largest bound {worst:.6f} vs {ceiling:.6f}")
        if self.delta == 0.0:
            self._expect("degenerate_zero", bool((certified["bound"] == 0.0).all()),
                         "delta = 0 must certify exactly 0")

    def _generate_visualization_data(self) -> Dict[str, Any]:
        df = self.tables["certificates"]
        certified = df[df["status"] == "certified"]
        fig = go.Figure()
        fig.add_trace(go.Scatter(x=certified["zeta"].tolist(), y=certified["bound"].tolist(), mode="markers",
                                 name="certificate", marker=dict(color="#3498db")))
        fig.add_hline(y=self.pair.value, line_dash="dash", line_color="#e74c3c", annotation_text="lambda_1^+")
        fig.update_layout(title="Certified lower bounds", xaxis_title="zeta", yaxis_title="bound",
                          template="plotly_white")
        return {"certificates": fig.to_json()}
