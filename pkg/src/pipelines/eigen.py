from typing import Any, Dict

import numpy as np
import pandas as pd
import plotly.graph_objects as go
import scipy.sparse.linalg as spla
from loguru import logger

from src.pipelines.base_pipeline import BaseExperimentPipeline
from src.reporting.figures import profile_figure
from src.spectral.eigen import principal_pair


def linear_principal_eigenvalue(d) -> float:
    """Smallest eigenvalue of -L for a single-control operator, by shift-invert."""
    L = d.matrices[0]
    sigma = -(d.delta + 1.0)
    if abs(L - L.T).max() < 1e-12:
        value = spla.eigsh(-L.tocsc(), k=1, sigma=sigma, which="LM", return_eigenvectors=False)[0]
    else:
        value = spla.eigs(-L.tocsc(), k=1, sigma=sigma, which="LM", return_eigenvectors=False)[0].real
    return float(value)


class EigenPipeline(BaseExperimentPipeline):
    """
    Principal half-eigenvalues of F∞ with their Collatz-Wielandt brackets.

    Optional parameters: ``expect_plus``, ``expect_minus``, ``expect_tol``
    (analytic values to match) and ``linear_check`` (compare with a sparse
    eigensolver when the operator has a single control).
    """

    kind = "eigen"

    def _execute(self) -> None:
        d_inf = self.discretization.homogeneous()
        self.plus, self.minus = principal_pair(d_inf, **self.settings.eigen_options())
        logger.info("lambda_1^+ = {:.10f}, lambda_1^- = {:.10f}", self.plus.value, self.minus.value)

        self.summary.update({
            "lambda_plus": self.plus.value,
            "lambda_minus": self.minus.value,
            "plus": self.plus.to_summary(),
            "minus": self.minus.to_summary(),
        })
        profiles = self.plus.phi.to_frame("phi_plus")
        profiles["phi_minus"] = self.minus.phi.values
        self.tables["eigen_profiles"] = profiles

        self.linear_value = None
        if self.params.get("linear_check", False) and d_inf.n_controls == 1:
            self.linear_value = linear_principal_eigenvalue(d_inf)
            self.summary["lambda_direct"] = self.linear_value

    def _check_invariants(self) -> None:
        tol = self.settings.eigen_tol
        self._expect("eigen_bracket_width", self.plus.width <= tol and self.minus.width <= tol,
                     f"widths {self.plus.width:.2e}, {self.minus.width:.2e}")
        self._expect("eigen_order", self.plus.value <= self.minus.value + tol)

        expect_tol = float(self.params.get("expect_tol", 1e-3))
        for key, pair in (("expect_plus", self.plus), ("expect_minus", self.minus)):
            if key in self.params:
                target = float(self.params[key])
                self._expect(key, abs(pair.value - target) <= expect_tol,
                             f"{pair.value:.6f} vs {target:.6f} (tol {expect_tol})")

        if self.linear_value is not None:
            gap = max(abs(self.plus.value - self.linear_value), abs(self.minus.value - self.linear_value))
            self._expect("linear_consistency", gap <= 1e-8, f"gap {gap:.3e} to the direct eigensolve")

    def _generate_visualization_data(self) -> Dict[str, Any]:
        plots = {}
        plots["eigenfunctions"] = profile_figure(
            [("phi_plus", self.plus.phi), ("phi_minus", self.minus.phi)],
            title=f"Principal half-eigenfunctions (lambda+ = {self.plus.value:.4f}, "
                  f"lambda- = {self.minus.value:.4f})",
            yaxis="phi",
        )

        fig = go.Figure()
        for pair, color in ((self.plus, "#2ecc71"), (self.minus, "#e74c3c")):
            lo, hi = pair.bracket
            fig.add_trace(go.Bar(x=[f"lambda{pair.sign.value}"], y=[hi - lo], base=[lo],
                                 marker_color=color, name=f"bracket {pair.sign.value}"))
        fig.update_layout(title="Collatz-Wielandt brackets", yaxis_title="lambda", template="plotly_white")
        plots["brackets"] = fig.to_json()
        return plots
