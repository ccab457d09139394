"""
Run manifest: sha256 of every emitted file, the config digest and the
status of each experiment.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from src import __version__
from src.config import ExperimentConfig
from src.errors import UpstreamOutputError
from src.pipelines.base_pipeline import ExperimentOutcome

MANIFEST_NAME = "manifest.json"


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def utc_compact() -> str:
    return datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")


def utc_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def make_run_dir(root: Path, prefix: str = "run_") -> Path:
    """Fresh ``<root>/<prefix><timestamp>_<attempt>`` directory."""
    for attempt in range(10000):
        run_dir = Path(root) / f"{prefix}{utc_compact()}_{attempt:04d}"
        if run_dir.exists():
            continue
        run_dir.mkdir(parents=True, exist_ok=False)
        return run_dir
    raise OSError(f"Unable to allocate a fresh run directory under {root}")


def write_json(path: Path, obj: Any) -> Path:
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


@dataclass
class ExperimentRecord:
    kind: str
    status: str
    invariants: Dict[str, bool]
    files: Dict[str, str]
    error: Optional[str] = None

    @classmethod
    def from_outcome(cls, outcome: ExperimentOutcome, run_dir: Path) -> "ExperimentRecord":
        files = {Path(p).relative_to(run_dir).as_posix(): sha256_file(p) for p in outcome.files}
        return cls(kind=outcome.kind, status=outcome.status, invariants=dict(outcome.invariants),
                   files=files, error=outcome.error)


@dataclass
class RunManifest:
    """Contents of ``manifest.json``; file paths are relative to the run directory."""

    version: str
    config_digest: str
    config_source: Optional[str]
    seed: int
    started: str
    finished: str
    experiments: List[ExperimentRecord] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.status == "passed" for e in self.experiments)

    @property
    def checksums(self) -> Dict[str, str]:
        return {path: digest for e in self.experiments for path, digest in e.files.items()}

    def experiment(self, kind: str) -> ExperimentRecord:
        for record in self.experiments:
            if record.kind == kind:
                return record
        raise UpstreamOutputError(f"Manifest has no '{kind}' experiment")

    def write(self, run_dir: Path) -> Path:
        return write_json(Path(run_dir) / MANIFEST_NAME, asdict(self))

    @classmethod
    def build(cls, config: ExperimentConfig, outcomes: List[ExperimentOutcome], run_dir: Path,
              started: str) -> "RunManifest":
        return cls(
            version=__version__,
            config_digest=config.digest(),
            config_source=config.source,
            seed=config.seed,
            started=started,
            finished=utc_iso(),
            experiments=[ExperimentRecord.from_outcome(o, Path(run_dir)) for o in outcomes],
            config=config.to_dict(),
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        if not path.exists():
            raise UpstreamOutputError(f"Manifest {path} not found")
        raw = json.loads(path.read_text(encoding="utf-8"))
        experiments = [ExperimentRecord(**e) for e in raw.pop("experiments", [])]
        return cls(experiments=experiments, **raw)
