from pathlib import Path
from typing import Dict, List, Optional

from jinja2 import Environment, FileSystemLoader, select_autoescape
from loguru import logger

from src.config import Config
from src.pipelines.base_pipeline import ExperimentOutcome


class HTMLGenerator:
    """Generates the run report from the collected Plotly JSON figures."""

    def __init__(self):
        self.template_dir = Path(__file__).parent / "templates"
        self.env = Environment(loader=FileSystemLoader(self.template_dir), autoescape=select_autoescape(["html"]))

    def generate_report(self, outcomes: List[ExperimentOutcome], run_id: str,
                        output_dir: Optional[Path] = None) -> Path:
        """
        Renders the Jinja template with one section per experiment.

        Args:
            outcomes: Experiment results, in execution order.
            run_id: Name of the run directory, used in the title and file name.
            output_dir: Defaults to ``Config.REPORT_DIR``.
        """
        template = self.env.get_template("report_template.html")
        sections: Dict[str, Dict] = {
            o.kind: {
                "status": o.status,
                "invariants": o.invariants,
                "details": o.details,
                "error": o.error,
                "plots": o.visualization,
            }
            for o in outcomes
        }
        html_content = template.render(run_id=run_id, all_data=sections)

        output_dir = Path(output_dir or Config.REPORT_DIR)
        output_dir.mkdir(parents=True, exist_ok=True)
        output_path = output_dir / f"{run_id}_report.html"
        output_path.write_text(html_content, encoding="utf-8")
        logger.success("Report generated at: {}", output_path)
        return output_path
