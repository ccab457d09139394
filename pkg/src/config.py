import hashlib
import json
import os
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from types import MappingProxyType
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

from dotenv import load_dotenv

from src.discretization.grid import DomainSpec, Grid, HoleSpec, build_grid
from src.errors import ConfigError, HJBLabError
from src.operators.controlled import (
    ControlledOperator,
    fucik_operator,
    laplacian_operator,
    operator_from_controls,
    plateau_operator,
    pucci_operator,
)

# Load environment variables once at module level
load_dotenv()

EXPERIMENT_KINDS = (
    "structure_check", "eigen", "tstar", "branches", "census", "asymptotics",
    "domain_hole", "certificate", "continuity_probe", "full_suite",
)
OPERATOR_KINDS = ("fucik", "pucci", "laplacian", "plateau", "custom")


class Config:
    """Global configuration accessibility."""
    OUT_DIR = os.getenv("HJBLAB_OUT", "data/runs")
    REPORT_DIR = os.getenv("HJBLAB_REPORT_DIR", "data/reports")
    LOG_LEVEL = os.getenv("HJBLAB_LOG_LEVEL", "INFO")

    @classmethod
    def output_root(cls, configured: Optional[str] = None) -> Path:
        """HJBLAB_OUT wins over the config file, which wins over the default."""
        return Path(os.getenv("HJBLAB_OUT") or configured or cls.OUT_DIR)

    @classmethod
    def ensure_dirs(cls, configured: Optional[str] = None):
        """Ensures the output and report directories exist."""
        cls.output_root(configured).mkdir(parents=True, exist_ok=True)
        Path(cls.REPORT_DIR).mkdir(parents=True, exist_ok=True)


def _positive(section: str, **values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise ConfigError(f"must be positive, got {value}", section, name)


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and caps shared by every solver call of a run."""

    tol: float = 1e-8
    howard_cap: int = 500
    perron_cap: int = 10_000
    newton_cap: int = 200
    damping: float = 1.0
    damping_floor: float = 1.0 / 64.0
    shift: Optional[float] = None
    blowup_factor: float = 10.0
    eigen_tol: float = 1e-10
    eigen_cap: int = 2000
    ratio_floor: float = 1e-8
    cluster_radius: float = 1e-4
    census_tol: float = 1e-10
    tstar_tol: float = 1e-3
    norm_p: float = float("inf")
    subsolution_margin: float = 0.1
    n_starts: int = 12
    bracket_expansions: int = 4

    def __post_init__(self):
        object.__setattr__(self, "norm_p", float(self.norm_p))
        _positive("solver", tol=self.tol, howard_cap=self.howard_cap, perron_cap=self.perron_cap,
                  newton_cap=self.newton_cap, blowup_factor=self.blowup_factor,
                  eigen_tol=self.eigen_tol, eigen_cap=self.eigen_cap, ratio_floor=self.ratio_floor,
                  cluster_radius=self.cluster_radius, census_tol=self.census_tol,
                  tstar_tol=self.tstar_tol, subsolution_margin=self.subsolution_margin)
        if not (0.0 < self.damping <= 1.0):
            raise ConfigError(f"must lie in (0, 1], got {self.damping}", "solver", "damping")
        if not (0.0 < self.damping_floor <= self.damping):
            raise ConfigError("must lie in (0, damping]", "solver", "damping_floor")
        if self.norm_p < 1.0:
            raise ConfigError(f"must be >= 1 or inf, got {self.norm_p}", "solver", "norm_p")
        if self.n_starts < 8:
            raise ConfigError(f"needs at least 8 starts, got {self.n_starts}", "solver", "n_starts")
        if self.bracket_expansions < 0:
            raise ConfigError("must be nonnegative", "solver", "bracket_expansions")
        if self.blowup_factor <= 1.0:
            raise ConfigError("must exceed 1", "solver", "blowup_factor")

    def eigen_options(self) -> Dict[str, Any]:
        """Keyword arguments of the principal eigenvalue solvers."""
        return {"tol": self.eigen_tol, "cap": self.eigen_cap, "ratio_floor": self.ratio_floor,
                "howard_cap": self.howard_cap}


@dataclass(frozen=True)
class CalibrationSection:
    """Constants of the a-priori bound (C0) and of the t* bracket (T0)."""

    c_cal: float = 1.0
    t0_cal: float = 1.0
    safety: float = 2.0

    def __post_init__(self):
        _positive("calibration", c_cal=self.c_cal, t0_cal=self.t0_cal, safety=self.safety)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "CalibrationSection":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"calibration file {path} not found", "calibration", "file")
        raw = json.loads(path.read_text(encoding="utf-8"))
        return cls(c_cal=raw["c_cal"], t0_cal=raw["t0_cal"], safety=raw.get("safety", 2.0))


@dataclass(frozen=True)
class OperatorSection:
    kind: str = "fucik"
    dim: int = 1
    a: float = 0.5
    b: float = 1.5
    lambda_min: float = 1.0
    lambda_max: float = 1.0
    gamma: float = 0.0
    delta: float = 0.0
    c: float = 0.0
    slope: Union[float, str] = "auto"
    level: float = 1.0
    a0: Optional[float] = None
    controls: Tuple[Mapping[str, Any], ...] = ()
    domain: Optional[Tuple[Tuple[float, float], ...]] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in OPERATOR_KINDS:
            raise ConfigError(f"unknown operator kind '{self.kind}', expected one of {OPERATOR_KINDS}",
                              "operator", "kind")
        if self.dim not in (1, 2):
            raise ConfigError(f"only 1D and 2D are supported, got {self.dim}", "operator", "dim")
        if self.kind == "custom" and not self.controls:
            raise ConfigError("custom operators need [[operator.controls]] entries", "operator", "controls")
        if self.kind == "plateau" and self.dim != 1:
            raise ConfigError("plateau operators are one-dimensional", "operator", "dim")
        if isinstance(self.slope, str) and self.slope != "auto":
            raise ConfigError(f"expected a number or 'auto', got '{self.slope}'", "operator", "slope")
        object.__setattr__(self, "controls", tuple(dict(c) for c in self.controls))
        if self.domain is not None:
            object.__setattr__(self, "domain", tuple(tuple(float(v) for v in b) for b in self.domain))


@dataclass(frozen=True)
class DomainSection:
    extents: Tuple[Tuple[float, float], ...] = ((0.0, 3.141592653589793),)
    n: Tuple[int, ...] = (200,)
    holes: Tuple[HoleSpec, ...] = ()

    def __post_init__(self):
        try:
            extents = tuple((float(lo), float(hi)) for lo, hi in self.extents)
        except (TypeError, ValueError):
            raise ConfigError(f"expected a list of [lo, hi] pairs, got {self.extents}", "domain", "extents")
        n = (int(self.n),) * len(extents) if isinstance(self.n, int) else tuple(int(k) for k in self.n)
        try:
            holes = tuple(h if isinstance(h, HoleSpec) else HoleSpec.from_dict(h) for h in self.holes)
        except HJBLabError as e:
            raise ConfigError(str(e), "domain", "holes") from e
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "holes", holes)
        if len(n) != len(extents):
            raise ConfigError(f"need one node count per axis, got {n}", "domain", "n")

    def build(self) -> Grid:
        try:
            return build_grid(DomainSpec(extents=self.extents, n=self.n, holes=self.holes))
        except HJBLabError as e:
            raise ConfigError(str(e), "domain", "extents") from e


@dataclass(frozen=True)
class ExperimentSection:
    """
    Experiment kind plus its kind-specific parameters.

    Attributes:
        kind: One of EXPERIMENT_KINDS.
        seed: Single source of every random draw in the run.
        parallel: Run the full_suite members in a thread pool.
        kinds: Members of a full_suite run.
        params: Remaining keys of [experiment], read by the experiments.
    """

    kind: str
    seed: int = 0
    parallel: bool = False
    kinds: Tuple[str, ...] = ()
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind '{self.kind}'", "experiment", "kind")
        bad = [k for k in self.kinds if k not in EXPERIMENT_KINDS or k == "full_suite"]
        if bad:
            raise ConfigError(f"invalid suite members {bad}", "experiment", "kinds")
        if self.kind == "full_suite" and not self.kinds:
            object.__setattr__(self, "kinds", tuple(k for k in EXPERIMENT_KINDS if k != "full_suite"))
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    def param(self, name: str, default: Any = None) -> Any:
        return self.params.get(name, default)


@dataclass(frozen=True)
class ExperimentConfig:
    operator: OperatorSection
    domain: DomainSection
    experiment: ExperimentSection
    solver: SolverSettings = field(default_factory=SolverSettings)
    calibration: CalibrationSection = field(default_factory=CalibrationSection)
    output_dir: Optional[str] = None
    source: Optional[str] = None
    raw: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def seed(self) -> int:
        return self.experiment.seed

    def digest(self) -> str:
        """sha256 of the canonical JSON form of the parsed config."""
        canonical = json.dumps(_jsonable(self.raw), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "operator": _jsonable(asdict(self.operator)),
            "domain": _jsonable(asdict(self.domain)),
            "experiment": _jsonable({**asdict(self.experiment), "params": dict(self.experiment.params)}),
            "solver": _jsonable(asdict(self.solver)),
            "calibration": asdict(self.calibration),
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and value == float("inf"):
        return "inf"
    return value


def parse_override(text: str) -> Tuple[Tuple[str, ...], Any]:
    """``section.key=value``; the value is read as a TOML literal, else kept as a string."""
    if "=" not in text:
        raise ConfigError(f"override '{text}' is not of the form section.key=value")
    key, value = text.split("=", 1)
    path = tuple(part.strip() for part in key.strip().split("."))
    if len(path) < 2 or not all(path):
        raise ConfigError(f"override key '{key}' must name a section and a field")
    try:
        parsed = tomllib.loads(f"v = {value.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value.strip()
    return path, parsed


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    for text in overrides:
        path, value = parse_override(text)
        node = raw
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override target {'.'.join(path)} is not a table")
        node[path[-1]] = value
    return raw


def _locate(text: str, section: str, name: str) -> Optional[int]:
    """Line of ``name = ...`` inside ``[section]`` (or of the section header)."""
    if not text or not section:
        return None
    current, header_line = None, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r"^\[+([^\]]+)\]+", stripped)
        if header:
            current = header.group(1).strip()
            if current == section and header_line is None:
                header_line = lineno
            continue
        if current == section and name and re.match(rf"^{re.escape(name)}\s*=", stripped):
            return lineno
    return header_line


def _section(cls, raw: Any, name: str):
    if not isinstance(raw, Mapping):
        raise ConfigError("must be a table", name)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown field(s) {unknown}", name, unknown[0])
    try:
        return cls(**raw)
    except TypeError as e:
        raise ConfigError(str(e), name) from e


def build_config(raw: Dict[str, Any], text: str = "", source: Optional[str] = None) -> ExperimentConfig:
    """Validates a parsed TOML document; errors carry section, field and line."""
    try:
        for required in ("operator", "domain", "experiment"):
            if required not in raw:
                raise ConfigError("missing required section", required)

        experiment_raw = dict(raw["experiment"])
        if "kind" not in experiment_raw:
            raise ConfigError("missing required field", "experiment", "kind")
        head = {k: experiment_raw.pop(k) for k in ("kind", "seed", "parallel", "kinds") if k in experiment_raw}
        experiment = _section(ExperimentSection, {**head, "params": experiment_raw}, "experiment")

        calibration_raw = dict(raw.get("calibration", {}))
        if "file" in calibration_raw:
            calibration = CalibrationSection.from_file(calibration_raw.pop("file"))
        else:
            calibration = _section(CalibrationSection, calibration_raw, "calibration")

        return ExperimentConfig(
            operator=_section(OperatorSection, raw["operator"], "operator"),
            domain=_section(DomainSection, raw["domain"], "domain"),
            experiment=experiment,
            solver=_section(SolverSettings, raw.get("solver", {}), "solver"),
            calibration=calibration,
            output_dir=raw.get("output", {}).get("dir"),
            source=source,
            raw=raw,
        )
    except ConfigError as e:
        if e.line is not None:
            raise
        raise ConfigError(e.detail, e.section, e.field, _locate(text, e.section, e.field)) from e


def load_config(path: Union[str, Path], overrides: Sequence[str] = ()) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    text = path.read_text(encoding="utf-8")
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ConfigError(f"TOML syntax error: {e}", line=int(match.group(1)) if match else None) from e
    return build_config(apply_overrides(raw, overrides), text=text, source=str(path))


def plateau_slope(section: OperatorSection, grid: Grid) -> float:
    """Slope of the plateau; 'auto' picks the principal eigenvalue of -Δ_h on ``grid``."""
    if section.slope != "auto":
        return float(section.slope)
    from src.discretization.scheme import discretize
    from src.spectral.eigen import principal_half_eigen

    pair = principal_half_eigen(discretize(laplacian_operator(grid.dim), grid), "+")
    return pair.value


def operator_from_config(section: OperatorSection, grid: Optional[Grid] = None) -> ControlledOperator:
    """Builds the ControlledOperator described by an [operator] section."""
    try:
        if section.kind == "fucik":
            op = fucik_operator(section.a, section.b, dim=section.dim)
        elif section.kind == "pucci":
            op = pucci_operator(section.lambda_min, section.lambda_max, section.gamma, dim=section.dim)
        elif section.kind == "laplacian":
            op = laplacian_operator(section.dim, section.c)
        elif section.kind == "plateau":
            if section.slope == "auto" and grid is None:
                raise ConfigError("slope 'auto' needs the grid", "operator", "slope")
            op = plateau_operator(section.a, section.b, plateau_slope(section, grid), section.level)
        else:
            op = operator_from_controls(
                section.controls, dim=section.dim, lambda_min=section.lambda_min,
                lambda_max=section.lambda_max, gamma=section.gamma, delta=section.delta,
                a0=section.a0, domain=section.domain, name=section.name or "custom",
            )
    except ConfigError:
        raise
    except HJBLabError as e:
        raise ConfigError(str(e), "operator", "kind") from e

    if section.name and op.name != section.name:
        op = replace(op, name=section.name)
    return op


@dataclass(frozen=True)
class SuiteProblem:
    label: str
    operator: OperatorSection
    domain: DomainSection
    h: str = "0"
    offsets: Tuple[float, ...] = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class CalibrationSuite:
    """Problems of a ``[[problem]]`` calibration suite plus the shared solver settings."""

    problems: Tuple[SuiteProblem, ...]
    solver: SolverSettings = field(default_factory=SolverSettings)
    safety: float = 2.0
    output_file: str = "calibration.json"
    source: Optional[str] = None


def load_suite(path: Union[str, Path]) -> CalibrationSuite:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"suite file {path} not found")
    text = path.read_text(encoding="utf-8")
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ConfigError(f"TOML syntax error: {e}", line=int(match.group(1)) if match else None) from e

    try:
        entries = raw.get("problem", [])
        if not entries:
            raise ConfigError("needs at least one [[problem]] entry", "problem")
        problems = []
        for i, entry in enumerate(entries):
            entry = dict(entry)
            for required in ("operator", "domain"):
                if required not in entry:
                    raise ConfigError(f"problem {i} lacks [{required}]", "problem", required)
            problems.append(SuiteProblem(
                label=str(entry.get("label", f"problem{i}")),
                operator=_section(OperatorSection, entry["operator"], "problem.operator"),
                domain=_section(DomainSection, entry["domain"], "problem.domain"),
                h=str(entry.get("h", "0")),
                offsets=tuple(float(v) for v in entry.get("offsets", (0.5, 1.0, 2.0))),
            ))
        safety = float(raw.get("calibration", {}).get("safety", 2.0))
        _positive("calibration", safety=safety)
        return CalibrationSuite(
            problems=tuple(problems),
            solver=_section(SolverSettings, raw.get("solver", {}), "solver"),
            safety=safety,
            output_file=raw.get("output", {}).get("file", "calibration.json"),
            source=str(path),
        )
    except ConfigError as e:
        if e.line is not None:
            raise
        section, _, _ = e.section.partition(".")
        raise ConfigError(e.detail, e.section, e.field, _locate(text, section, e.field)) from e
