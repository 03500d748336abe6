from typing import Any, Dict, List, Optional


class SwingCertError(Exception):
    """
    Base class for every error the platform raises on purpose.
    ``details`` ends up in the CLI diagnostic JSON.
    """

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        payload = {"type": type(self).__name__, "message": self.message}
        payload.update(self.details)
        return payload


class ConfigurationError(SwingCertError):
    pass


class DimensionError(SwingCertError, ValueError):
    pass


class ParameterError(SwingCertError, ValueError):
    pass


# --- Case files ---

class CaseError(SwingCertError):
    pass


class CaseSyntaxError(CaseError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})", line=line, column=column)
        self.line = line
        self.column = column


class CaseFormatError(CaseError):
    pass


class DanglingReferenceError(CaseError):
    pass


class DuplicateBusError(CaseError):
    pass


class MissingDynamicsError(CaseError):
    pass


# --- Network ---

class NetworkError(SwingCertError):
    pass


class ZeroImpedanceBranchError(NetworkError):
    pass


class KronReductionError(NetworkError):
    def __init__(self, message: str, rcond: float):
        super().__init__(message, rcond=rcond)
        self.rcond = rcond


class PowerFlowError(NetworkError):
    pass


# --- Equilibrium / spectrum ---

class EquilibriumError(SwingCertError):
    pass


class EquilibriumNotConverged(EquilibriumError):
    def __init__(self, message: str, trace: Optional[List[float]] = None):
        trace = list(trace or [])
        super().__init__(message, trace=trace)
        self.trace = trace


class SingularNewtonMatrix(EquilibriumError):
    pass


class EigenSolverError(SwingCertError):
    pass


class ConsistencyError(SwingCertError):
    """A certified equilibrium produced an unstable spectrum."""
