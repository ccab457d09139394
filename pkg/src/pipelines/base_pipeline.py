import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from loguru import logger

from src.ambrosetti_prodi.context import ProblemContext, prepare_problem
from src.config import ExperimentConfig, operator_from_config
from src.discretization.field import Field
from src.discretization.grid import Grid
from src.discretization.scheme import DiscreteHJB, discretize
from src.errors import HJBLabError, InvariantViolation
from src.operators.controlled import ControlledOperator


@dataclass
class ExperimentOutcome:
    """What one experiment reports back to the orchestrator and the manifest."""

    kind: str
    status: str
    invariants: Dict[str, bool] = field(default_factory=dict)
    details: Dict[str, str] = field(default_factory=dict)
    files: List[Path] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None
    visualization: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "passed"

    @property
    def failed_invariants(self) -> List[str]:
        return [name for name, ok in self.invariants.items() if not ok]


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class BaseExperimentPipeline(ABC):
    """
    Abstract Base Class implementing the Template Method pattern for experiments.

    Every experiment follows the same sequence
    (Build -> Execute -> Check Invariants -> Save -> Visualize) while concrete
    subclasses implement the numerical work and the invariants they assert.

    Attributes:
        kind (str): Experiment kind; also the name of the output subdirectory.
        config (ExperimentConfig): Parsed and validated run configuration.
        output_dir (Path): Per-experiment directory inside the run directory.
        tables (Dict[str, pd.DataFrame]): CSV tables written by ``_save_data``.
        summary (Dict[str, Any]): Values written to ``summary.json``.
        invariants (Dict[str, bool]): Named invariants and whether they held.
    """

    kind: str = ""

    def __init__(self, config: ExperimentConfig, run_dir: Path):
        """
        Initializes the experiment paths and result containers.

        Args:
            config: The run configuration shared by every experiment of the run.
            run_dir: Root directory of the current run.
        """
        self.config = config
        self.settings = config.solver
        self.params = config.experiment.params
        self.seed = config.seed
        self.output_dir = Path(run_dir) / self.kind
        self.tables: Dict[str, pd.DataFrame] = {}
        self.summary: Dict[str, Any] = {}
        self.invariants: Dict[str, bool] = {}
        self.details: Dict[str, str] = {}

    def run(self) -> ExperimentOutcome:
        """
        Executes the Template Method sequence.

        Library errors are caught here so one failing experiment never stops
        the rest of the run; they are recorded with status ``error``.

        Returns:
            ExperimentOutcome: status, invariants, emitted files and the
            serialized Plotly figures for the HTML report.
        """
        logger.info("--- Starting Experiment: {} ---", self.kind)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        error = None

        try:
            self._build()
            self._execute()
            self._check_invariants()
        except InvariantViolation as e:
            self._expect(e.invariant, False, str(e))
        except HJBLabError as e:
            error = f"{type(e).__name__}: {e}"
            logger.error("Experiment {} failed: {}", self.kind, error)

        if error is not None:
            status = "error"
        elif all(self.invariants.values()):
            status = "passed"
        else:
            status = "failed"
            logger.error("Experiment {} violated: {}", self.kind,
                         ", ".join(k for k, ok in self.invariants.items() if not ok))

        files = self._save_data(status, error)
        visualization = {}
        if error is None:
            try:
                visualization = self._generate_visualization_data()
            except (KeyError, ValueError) as e:
                logger.warning("Visualization for {} skipped: {}", self.kind, e)

        return ExperimentOutcome(kind=self.kind, status=status, invariants=dict(self.invariants),
                                 details=dict(self.details), files=files, summary=dict(self.summary),
                                 error=error, visualization=visualization)

    # Shared problem setup. Each property is computed on first use only.

    @cached_property
    def grid(self) -> Grid:
        return self.config.domain.build()

    @cached_property
    def operator(self) -> ControlledOperator:
        return operator_from_config(self.config.operator, self.grid)

    @cached_property
    def discretization(self) -> DiscreteHJB:
        return discretize(self.operator, self.grid)

    @cached_property
    def h(self) -> Field:
        return Field.from_expression(self.grid, str(self.params.get("h", "0")))

    @cached_property
    def context(self) -> ProblemContext:
        return prepare_problem(self.discretization, self.h, self.settings, self.config.calibration)

    def _build(self) -> None:
        """Builds the grid and the discretized operator; subclasses extend."""
        d = self.discretization
        logger.info("Operator '{}' ({} controls) on {}", self.operator.name, d.n_controls, self.grid.describe())

    def _expect(self, name: str, condition: bool, detail: str = "") -> bool:
        """Records a named invariant; a name that already failed stays failed."""
        ok = bool(condition) and self.invariants.get(name, True)
        self.invariants[name] = ok
        if detail:
            self.details[name] = detail
        if not condition:
            logger.error("[{}] invariant failed: {}", name, detail or "no detail")
        return ok

    def _save_data(self, status: str, error: Optional[str]) -> List[Path]:
        """
        Persists every table as CSV and the summary as JSON.

        Returns:
            List[Path]: The emitted files, in a stable order.
        """
        files = []
        for name in sorted(self.tables):
            path = self.output_dir / f"{name}.csv"
            self.tables[name].to_csv(path, index=False, float_format="%.12g")
            files.append(path)

        summary = {
            "kind": self.kind,
            "status": status,
            "error": error,
            "seed": self.seed,
            "invariants": self.invariants,
            "details": self.details,
            **self.summary,
        }
        path = self.output_dir / "summary.json"
        path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n",
                        encoding="utf-8")
        files.append(path)
        logger.info("Saved {} file(s) for {}", len(files), self.kind)
        return files

    @abstractmethod
    def _execute(self) -> None:
        """
        Abstract method for the numerical work of the experiment.

        Implementations fill ``self.tables`` and ``self.summary``.
        """
        pass

    @abstractmethod
    def _check_invariants(self) -> None:
        """
        Abstract method asserting the experiment's invariants through ``_expect``.
        """
        pass

    @abstractmethod
    def _generate_visualization_data(self) -> Dict[str, Any]:
        """
        Abstract method for generating reporting artifacts.

        Returns:
            Dict[str, Any]: A dictionary where keys are plot IDs and values are
            JSON strings of Plotly figures.
        """
        pass
