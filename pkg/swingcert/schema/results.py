from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from swingcert.schema.arrays import ComplexVector, RealArray

REPORT_SCHEMA = 1


class _Result(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


class BoundUnits(str, Enum):
    THEOREM = "theorem"  # D_i^2 / (2 M_i)
    PROOF = "proof"      # D_i^2 / (2 M_i omega_s)


class StabilityVerdict(str, Enum):
    ASYMPTOTICALLY_STABLE_REDUCED = "asymptotically_stable_reduced"
    UNSTABLE = "unstable"
    INCONCLUSIVE_ZERO_CLUSTER = "inconclusive_zero_cluster"


class TrajectoryClass(str, Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    UNDECIDED = "undecided"


class SweepKind(str, Enum):
    DAMPING = "d"
    INERTIA = "m"
    LOADING = "load"


class Equilibrium(_Result):
    """
    Equilibrium point of the swing equations (omega identically zero).
    Solver output keeps angles unwrapped; reports carry them reduced into (-pi, pi].
    """
    delta_star: RealArray
    omega_star: RealArray
    residual_inf: float = Field(..., description="max |P_m - P_e| over non-reference machines")
    reference_index: int
    slack_adjustment: float = Field(..., description="P_m - P_e absorbed by the reference machine")
    iterations: int = 0
    trace: List[float] = Field(default_factory=list, description="Residual norm per Newton iterate")


class FlowJacobian(_Result):
    l: RealArray
    evaluated_at: RealArray


class InducedDigraph(_Result):
    """
    Weighted digraph whose Laplacian D+(G) - A(G) is the flow Jacobian.
    ``weights[i, j]`` is w_ij on arcs and 0 elsewhere; ``phi`` is wrapped into (-pi, pi].
    """
    n: int
    weights: RealArray
    phi: RealArray
    arcs: List[Tuple[int, int]] = Field(default_factory=list)

    def laplacian(self) -> np.ndarray:
        adjacency = self.weights.copy()
        np.fill_diagonal(adjacency, 0.0)
        return np.diag(adjacency.sum(axis=1)) - adjacency


class OmegaCheck(_Result):
    in_omega: bool
    omega_zero: bool
    phi_min: Optional[float] = None
    phi_max: Optional[float] = None
    violating_pairs: List[Tuple[int, int, float]] = Field(default_factory=list)


class LaplacianProperties(_Result):
    applicable: bool = Field(..., description="False when evaluated outside Omega")
    row_sum_inf: float
    sign_pattern_ok: bool
    gershgorin_ok: bool
    minors_checked: bool
    min_principal_minor: Optional[float] = None
    eigenvalues: ComplexVector
    min_real_eigenvalue: float
    zero_eigenvalue_count: int
    violations: List[str] = Field(default_factory=list)


class CertificateReport(_Result):
    """
    Per-node certificate: s_i = flow_sum_i - bound_i, certified iff max s_i <= 0.
    """
    s: RealArray
    flow_sum: RealArray
    bound: RealArray
    q: Optional[RealArray] = Field(default=None, description="Reactive power injected at each internal node")
    certified: bool
    worst_node: int
    bound_units: BoundUnits = BoundUnits.THEOREM

    @property
    def s_min(self) -> float:
        return float(self.s.min())

    @property
    def s_max(self) -> float:
        return float(self.s.max())


class SystemJacobian(_Result):
    j: RealArray
    n: int

    @property
    def top_left(self) -> np.ndarray:
        return self.j[: self.n, : self.n]

    @property
    def top_right(self) -> np.ndarray:
        return self.j[: self.n, self.n:]

    @property
    def bottom_left(self) -> np.ndarray:
        return self.j[self.n:, : self.n]

    @property
    def bottom_right(self) -> np.ndarray:
        return self.j[self.n:, self.n:]


class SpectrumReport(_Result):
    eigenvalues: ComplexVector
    zero_cluster: List[int] = Field(default_factory=list)
    lambda2: Optional[Tuple[float, float]] = Field(default=None, description="(re, im) of lambda_2")
    max_re_nonzero: Optional[float] = None
    pencil_residuals: Optional[RealArray] = None
    zero_tol: float
    re_tol: float
    norm_j: float


class Trajectory(_Result):
    times: RealArray
    states: RealArray = Field(..., description="One row per recorded time: delta then omega")
    classification: TrajectoryClass
    final_distance: float
    halt_time: Optional[float] = None

    @property
    def n(self) -> int:
        return self.states.shape[1] // 2


class ExperimentSummary(_Result):
    n_samples: int
    radius: float
    seed: int
    t_end: float
    dt: float
    fraction_converged: float
    counts: Dict[str, int]
    worst_index: Optional[int] = None
    worst_final_distance: float = 0.0
    worst_classification: Optional[TrajectoryClass] = None


class SweepPoint(_Result):
    kind: SweepKind
    sweep_param: float
    min_s: Optional[float] = None
    re_lambda2: Optional[float] = None
    certified: Optional[bool] = None
    error: Optional[str] = None


class CaseMetadata(_Result):
    name: str
    source: Optional[str] = None
    n_machines: int
    n_buses: int = 0
    omega_s: float
    bound_units: BoundUnits
    reference_index: int


class TableRow(_Result):
    """Dom(phi_ij / pi), Dom(S_i) and |Re(lambda_2)| for one case."""
    phi_min_over_pi: Optional[float] = None
    phi_max_over_pi: Optional[float] = None
    s_min: float
    s_max: float
    abs_re_lambda2: Optional[float] = None


class AnalysisReport(_Result):
    schema_version: int = Field(default=REPORT_SCHEMA, alias="schema", serialization_alias="schema")
    case: CaseMetadata
    equilibrium: Equilibrium
    omega_check: OmegaCheck
    strongly_connected: bool
    certificate: CertificateReport
    laplacian: LaplacianProperties
    spectrum: SpectrumReport
    verdict: StabilityVerdict
    theorem_applicable: bool
    units_sound: bool
    certificate_contradicted: bool = False
    table: TableRow
    sweep: Optional[List[SweepPoint]] = None
    simulation: Optional[ExperimentSummary] = None
    timings_ms: Optional[Dict[str, float]] = None

    model_config = ConfigDict(arbitrary_types_allowed=True, populate_by_name=True)
