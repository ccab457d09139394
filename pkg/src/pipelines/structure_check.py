from typing import Any, Dict

import pandas as pd
import plotly.graph_objects as go

from src.ambrosetti_prodi.branches import trace_branches
from src.operators.structure import check_structure
from src.pipelines.base_pipeline import BaseExperimentPipeline
from src.discretization.scheme import comparison_probe
from src.solvers.convexity import convex_combination_check


class StructureCheckPipeline(BaseExperimentPipeline):
    """
    Sampled structure hypotheses of the operator, the discrete comparison
    principle and, when ``convex_t`` is given, the sign of F_h on convex
    combinations of the two branch solutions at that t.
    """

    kind = "structure_check"

    def _execute(self) -> None:
        samples = int(self.params.get("samples", 1000))
        self.tol = float(self.params.get("violation_tol", 1e-12))
        self.report = check_structure(self.operator, samples, seed=self.seed)
        self.probe = comparison_probe(self.discretization, samples=int(self.params.get("probe_samples", 200)),
                                      seed=self.seed)

        rows = [{"property": k, "violation": v, "source": "operator"} for k, v in self.report.violations.items()]
        rows += [{"property": k, "violation": v, "source": "scheme"} for k, v in self.probe.items()]

        self.convex = {}
        if "convex_t" in self.params:
            t = float(self.params["convex_t"])
            point = trace_branches(self.context, [t])[0]
            if point.complete:
                self.convex = convex_combination_check(self.discretization, point.u_low, point.u_up,
                                                       self.context.rhs(t))
                rows += [{"property": f"convex_combination[{a:g}]", "violation": v, "source": "branches"}
                         for a, v in self.convex.items()]
            else:
                self._expect("convex_combination", False, f"no upper solution at t={t}")

        self.tables["structure"] = pd.DataFrame(rows)
        self.summary["violations"] = {r["property"]: r["violation"] for r in rows}

    def _check_invariants(self) -> None:
        for name, value in self.report.violations.items():
            self._expect(f"structure_{name}", value <= self.tol, f"violation {value:.3e}")
        for name, value in self.probe.items():
            self._expect(f"scheme_{name}", value <= self.tol, f"violation {value:.3e}")
        # solutions carry the solver tolerance, amplified by the stencil
        convex_tol = float(self.params.get("convex_tol", 1e-6))
        for alpha, value in self.convex.items():
            self._expect("convex_combination", value <= convex_tol, f"alpha={alpha:g}: {value:.3e}")

    def _generate_visualization_data(self) -> Dict[str, Any]:
        df = self.tables["structure"]
        fig = go.Figure(go.Bar(
            x=df["property"].tolist(),
            y=[max(v, 1e-18) for v in df["violation"].tolist()],
            marker_color="#3498db",
        ))
        fig.update_layout(title="Largest sampled violation per property", yaxis_type="log",
                          yaxis_title="violation", template="plotly_white")
        return {"violations": fig.to_json()}
