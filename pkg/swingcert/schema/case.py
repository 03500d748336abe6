from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from swingcert.schema.arrays import RealArray


class CaseFormat(str, Enum):
    MATPOWER_SUBSET = "matpower_subset"
    NATIVE_JSON = "native_json"


class BusType(str, Enum):
    SLACK = "slack"
    PV = "pv"
    PQ = "pq"


class BusRecord(BaseModel):
    """
    One network bus. Powers are per-unit on the case base, angles in radians.
    """
    id: int = Field(..., description="Bus label as it appears in the case file")
    bus_type: BusType = Field(..., description="slack, pv or pq")
    p_load: float = Field(default=0.0, description="Real load in p.u.")
    q_load: float = Field(default=0.0, description="Reactive load in p.u.")
    g_shunt: float = Field(default=0.0, description="Shunt conductance in p.u. at V = 1")
    b_shunt: float = Field(default=0.0, description="Shunt susceptance in p.u. at V = 1")
    v_mag: float = Field(default=1.0, gt=0.0, description="Voltage magnitude (setpoint or solved)")
    v_ang: float = Field(default=0.0, description="Voltage angle in radians")
    base_kv: float = Field(default=0.0, ge=0.0)


class BranchRecord(BaseModel):
    from_bus: int
    to_bus: int
    r: float = Field(..., ge=0.0, description="Series resistance in p.u.")
    x: float = Field(..., description="Series reactance in p.u.")
    b_shunt: float = Field(default=0.0, description="Total line charging in p.u.")
    tap: float = Field(default=1.0, gt=0.0, description="Off-nominal turns ratio, 1 if none")
    status: bool = True

    @model_validator(mode="after")
    def _distinct_endpoints(self):
        if self.from_bus == self.to_bus:
            raise ValueError(f"branch {self.from_bus}-{self.to_bus} connects a bus to itself")
        if self.x == 0.0:
            raise ValueError(f"branch {self.from_bus}-{self.to_bus} has zero series reactance")
        return self


class GeneratorDynamics(BaseModel):
    """
    Classical-model machine data. M in seconds, D unitless (swing equation form).
    The dynamic fields stay empty for MATPOWER generators without a sidecar entry.
    """
    bus: int
    inertia_m: Optional[float] = Field(default=None, gt=0.0, description="Inertia constant M_i in seconds")
    damping_d: Optional[float] = Field(default=None, gt=0.0, description="Damping coefficient D_i")
    xd_prime: Optional[float] = Field(default=None, gt=0.0, description="Transient reactance x'_d in p.u.")
    p_mech: float = Field(default=0.0, description="Mechanical power (dispatch) in p.u.")

    @property
    def has_dynamics(self) -> bool:
        return None not in (self.inertia_m, self.damping_d, self.xd_prime)


class PowerFlowSolution(BaseModel):
    """
    Solved bus voltages, ordered like ``NetworkCase.buses``.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    v_mag: RealArray
    v_ang: RealArray
    iterations: int = 0
    mismatch: float = 0.0

    @property
    def voltages(self) -> np.ndarray:
        return self.v_mag * np.exp(1j * self.v_ang)


class ReducedSystem(BaseModel):
    """
    The n-machine classical model seen from the generator internal nodes.

    y_mag / y_ang are the polar entries Y_ij and theta_ij of the reduced
    admittance matrix; v_mag holds the internal EMF magnitudes V_i.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int = Field(..., ge=1)
    v_mag: RealArray
    y_mag: RealArray
    y_ang: RealArray
    m: RealArray = Field(..., description="Inertia constants M_i in seconds")
    d: RealArray = Field(..., description="Damping coefficients D_i")
    p_mech: RealArray
    omega_s: float = Field(..., gt=0.0, description="Synchronous speed in electrical rad/s")
    delta_init: Optional[RealArray] = Field(default=None, description="Internal EMF angles from the reduction")
    labels: Optional[List[int]] = Field(default=None, description="Bus label of each machine")

    @model_validator(mode="after")
    def _check_shapes(self):
        n = self.n
        for name in ("v_mag", "m", "d", "p_mech"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have length {n}")
        for name in ("y_mag", "y_ang"):
            if getattr(self, name).shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}")
        if self.delta_init is not None and self.delta_init.shape != (n,):
            raise ValueError(f"delta_init must have length {n}")
        if self.labels is not None and len(self.labels) != n:
            raise ValueError(f"labels must have length {n}")
        if np.any(self.y_mag < 0.0):
            raise ValueError("admittance magnitudes must be non-negative")
        if np.any(self.m <= 0.0) or np.any(self.d <= 0.0):
            raise ValueError("inertia and damping must be positive")
        return self

    @property
    def admittance(self) -> np.ndarray:
        return self.y_mag * np.exp(1j * self.y_ang)

    @property
    def coupling(self) -> np.ndarray:
        """V_i V_j Y_ij."""
        return np.outer(self.v_mag, self.v_mag) * self.y_mag

    @classmethod
    def from_admittance(cls, y: np.ndarray, v_mag, m, d, p_mech, omega_s: float, **extra) -> "ReducedSystem":
        y = np.asarray(y, dtype=complex)
        return cls(
            n=y.shape[0],
            v_mag=v_mag,
            y_mag=np.abs(y),
            y_ang=np.angle(y),
            m=m,
            d=d,
            p_mech=p_mech,
            omega_s=omega_s,
            **extra,
        )


class NetworkCase(BaseModel):
    """
    Native case document. A case holding only ``reduced`` skips parsing and reduction.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str = "case"
    base_mva: float = Field(default=100.0, gt=0.0)
    omega_s: Optional[float] = Field(default=None, gt=0.0)
    buses: List[BusRecord] = Field(default_factory=list)
    branches: List[BranchRecord] = Field(default_factory=list)
    generators: List[GeneratorDynamics] = Field(default_factory=list)
    reduced: Optional[ReducedSystem] = None
    solution: Optional[PowerFlowSolution] = None

    @property
    def is_reduced_only(self) -> bool:
        return self.reduced is not None and not self.buses

    def bus_index(self) -> dict:
        return {bus.id: k for k, bus in enumerate(self.buses)}
