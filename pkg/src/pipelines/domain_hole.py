from typing import Any, Dict, Optional

import pandas as pd
import plotly.graph_objects as go
from loguru import logger

from src.discretization.grid import HoleSpec, restrict_domain
from src.errors import ConfigError, GridError
from src.pipelines.base_pipeline import BaseExperimentPipeline
from src.spectral.eigen import domain_monotonicity_gap


def hole_from_params(params, extents) -> Optional[HoleSpec]:
    """``hole`` (a hole table) or ``hole_fraction`` (centered box of that volume fraction)."""
    if "hole" in params:
        try:
            return HoleSpec.from_dict(params["hole"])
        except GridError as e:
            raise ConfigError(str(e), "experiment", "hole") from e
    if "hole_fraction" in params:
        fraction = float(params["hole_fraction"])
        if not 0.0 < fraction < 1.0:
            raise ConfigError(f"must lie in (0, 1), got {fraction}", "experiment", "hole_fraction")
        sides = [fraction ** (1.0 / len(extents)) * (hi - lo) for lo, hi in extents]
        return HoleSpec.centered_box(extents, sides)
    return None


class DomainHolePipeline(BaseExperimentPipeline):
    """λ₁⁺ on the domain and on the domain with a hole excised; the gap must be strictly positive."""

    kind = "domain_hole"

    def _execute(self) -> None:
        self.hole = hole_from_params(self.params, self.grid.extents)
        if self.hole is None:
            raise ConfigError("domain_hole needs 'hole' or 'hole_fraction'", "experiment", "hole")
        reduced = restrict_domain(self.grid, self.hole)
        connectivity = reduced.connectivity_report()
        logger.info("Excised {} node(s); components: {}", self.grid.size - reduced.size, connectivity)

        self.full, self.reduced = domain_monotonicity_gap(self.operator, self.grid, self.hole,
                                                          **self.settings.eigen_options())
        self.tables["domain_hole"] = pd.DataFrame([
            {"domain": "full", "lambda_plus": self.full, "unknowns": self.grid.size, "hole_area": 0.0},
            {"domain": "reduced", "lambda_plus": self.reduced, "unknowns": reduced.size,
             "hole_area": reduced.hole_area - self.grid.hole_area},
        ])
        self.summary.update({
            "lambda_full": self.full,
            "lambda_reduced": self.reduced,
            "gap": self.reduced - self.full,
            "connectivity": connectivity,
        })

    def _check_invariants(self) -> None:
        self._expect("strict_gap", self.reduced > self.full, f"gap {self.reduced - self.full:.3e}")
        tol = float(self.params.get("expect_tol", 2e-2))
        for key, value in (("expect_full", self.full), ("expect_reduced", self.reduced)):
            if key in self.params:
                target = float(self.params[key])
                self._expect(key, abs(value - target) <= tol, f"{value:.6f} vs {target}")

    def _generate_visualization_data(self) -> Dict[str, Any]:
        df = self.tables["domain_hole"]
        fig = go.Figure(go.Bar(x=df["domain"].tolist(), y=df["lambda_plus"].tolist(),
                               marker_color=["#3498db", "#e67e22"]))
        fig.update_layout(title="Principal eigenvalue with and without the hole", yaxis_title="lambda_1^+",
                          template="plotly_white")
        return {"gap": fig.to_json()}
