from typing import Any, Dict, Optional


class HJBLabError(Exception):
    """Base class for every failure raised by the laboratory."""


class OperatorError(HJBLabError):
    pass


class CoefficientError(OperatorError):
    pass


class DimensionError(OperatorError):
    pass


class GridError(HJBLabError):
    pass


class DiscretizationError(HJBLabError):
    pass


class SolverError(HJBLabError):
    pass


class SingularSystemError(SolverError):
    pass


class PolicyCycleError(SolverError):
    pass


class PreconditionError(SolverError):
    pass


class SupersolutionError(SolverError):
    """Raised when the a-posteriori supersolution check fails.

    Attributes:
        t_min: Smallest t for which the constructed field would pass the check.
    """

    def __init__(self, message: str, t_min: float):
        super().__init__(message)
        self.t_min = t_min


class InvariantViolation(HJBLabError):
    """A hard numerical invariant failed (e.g. Perron monotonicity)."""

    def __init__(self, invariant: str, message: str):
        super().__init__(f"[{invariant}] {message}")
        self.invariant = invariant


class SpectralError(HJBLabError):
    pass


class CertificateError(SpectralError):
    pass


class BracketError(HJBLabError):
    """The t* bracket could not be established or narrowed by decisive verdicts."""

    def __init__(self, message: str, diagnostic: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class ConfigError(HJBLabError):
    def __init__(self, message: str, section: str = "", field: str = "", line: Optional[int] = None):
        where = ".".join(part for part in (section, field) if part)
        prefix = f"[{where}] " if where else ""
        suffix = f" (line {line})" if line is not None else ""
        super().__init__(f"{prefix}{message}{suffix}")
        self.detail = message
        self.section = section
        self.field = field
        self.line = line


class UpstreamOutputError(HJBLabError):
    pass
