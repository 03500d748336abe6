"""
Time-domain integration of the swing equations

    delta_dot_i = omega_i
    omega_dot_i = (omega_s / M_i) (P_m_i - P_e_i(delta)) - (D_i / M_i) omega_i

with classic fixed-step RK4. States are rows [delta_1..delta_n, omega_1..omega_n];
a batch of rows is advanced together.
"""
import logging
import math
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from swingcert.schema.case import ReducedSystem
from swingcert.schema.results import Trajectory, TrajectoryClass
from swingcert.src.core.errors import DimensionError, ParameterError
from swingcert.src.utils.tables import csv_text

logger = logging.getLogger(__name__)

# Below this distance a state counts as resting on the equilibrium
REST_DISTANCE = 1e-9


class SimulationOptions(BaseModel):
    t_end: float = Field(default=20.0, gt=0.0, description="Horizon in seconds")
    dt: float = Field(default=1e-3, gt=0.0, description="Step in seconds")
    divergence_factor: float = Field(default=1e3, gt=1.0)
    angle_limit: float = Field(default=1e3, gt=0.0, description="Largest |delta| in radians before halting")
    convergence_ratio: float = Field(default=0.1, gt=0.0, lt=1.0)
    record_stride: int = Field(default=10, ge=1, description="Keep every k-th step")

    @model_validator(mode="after")
    def _horizon(self):
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least one step")
        return self


def swing_rhs(sys: ReducedSystem, state) -> np.ndarray:
    """Derivative of one state (2n,) or a batch (k, 2n)."""
    state = np.asarray(state, dtype=float)
    n = sys.n
    if state.shape[-1] != 2 * n or state.ndim not in (1, 2):
        raise DimensionError(f"State must have trailing dimension {2 * n}, got shape {state.shape}")

    batch = np.atleast_2d(state)
    delta, omega = batch[:, :n], batch[:, n:]
    phi = sys.y_ang[None, :, :] - delta[:, :, None] + delta[:, None, :]
    p_e = np.sum(sys.coupling[None, :, :] * np.cos(phi), axis=2)

    out = np.empty_like(batch)
    out[:, :n] = omega
    out[:, n:] = (sys.omega_s / sys.m) * (sys.p_mech - p_e) - (sys.d / sys.m) * omega
    return out if state.ndim == 2 else out[0]


def rk4_step(sys: ReducedSystem, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = swing_rhs(sys, x)
    k2 = swing_rhs(sys, x + 0.5 * dt * k1)
    k3 = swing_rhs(sys, x + 0.5 * dt * k2)
    k4 = swing_rhs(sys, x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def equilibrium_distance(x: np.ndarray, x_star: np.ndarray, n: int) -> np.ndarray:
    """
    ||x - x*|| with the common angle offset removed; equilibria form the line x* + a (1, 0).
    """
    diff = np.atleast_2d(x) - x_star
    diff[:, :n] -= diff[:, :n].mean(axis=1, keepdims=True)
    return np.linalg.norm(diff, axis=1)


def integrate_batch(
    sys: ReducedSystem,
    states0,
    opts: Optional[SimulationOptions] = None,
    x_star=None,
    record: bool = False,
) -> List[Trajectory]:
    """
    Integrates k initial states together; samples halt independently.

    A sample diverges when ||x|| exceeds divergence_factor * max(||x(0)||, 1), when an
    angle leaves [-angle_limit, angle_limit] or when a step turns non-finite (the last
    finite state is kept). With ``x_star`` a sample converges if its final distance is
    at most convergence_ratio times the initial one. Without ``record`` a trajectory
    holds only its first and last state.
    """
    opts = opts or SimulationOptions()
    n = sys.n
    x = np.array(states0, dtype=float, ndmin=2)
    if x.ndim != 2 or x.shape[1] != 2 * n:
        raise DimensionError(f"Initial states must have shape (k, {2 * n}), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ParameterError("Initial states must be finite")
    if x_star is not None:
        x_star = np.asarray(x_star, dtype=float)
        if x_star.shape != (2 * n,):
            raise DimensionError(f"Equilibrium state must have length {2 * n}")

    k = x.shape[0]
    x0 = x.copy()
    limit = opts.divergence_factor * np.maximum(np.linalg.norm(x0, axis=1), 1.0)
    # Last step is shortened so the run ends exactly at t_end
    n_steps = max(1, math.ceil(opts.t_end / opts.dt - 1e-6))
    last_dt = opts.t_end - (n_steps - 1) * opts.dt

    active = np.ones(k, dtype=bool)
    diverged = np.zeros(k, dtype=bool)
    halt_step = np.full(k, n_steps)
    times = [[0.0] for _ in range(k)]
    states = [[x0[i].copy()] for i in range(k)]

    for step in range(1, n_steps + 1):
        idx = np.flatnonzero(active)
        h = last_dt if step == n_steps else opts.dt
        new = rk4_step(sys, x[idx], h)

        finite = np.all(np.isfinite(new), axis=1)
        x[idx[finite]] = new[finite]
        blown = ~finite
        blown[finite] = (
            (np.linalg.norm(new[finite], axis=1) > limit[idx[finite]])
            | (np.max(np.abs(new[finite, :n]), axis=1) > opts.angle_limit)
        )

        t = opts.t_end if step == n_steps else step * opts.dt
        for i in idx[blown]:
            active[i] = False
            diverged[i] = True
            halt_step[i] = step
            if not finite[np.searchsorted(idx, i)]:
                logger.warning("[Simulate] Non-finite state at t = %.4g s; halting sample", t)

        for i in idx:
            last = step == n_steps or diverged[i] and halt_step[i] == step
            if last or (record and step % opts.record_stride == 0):
                times[i].append(t)
                states[i].append(x[i].copy())

        if not active.any():
            break

    if x_star is not None:
        dist0 = equilibrium_distance(x0, x_star, n)
        dist = equilibrium_distance(x, x_star, n)
    else:
        dist0 = dist = np.linalg.norm(x, axis=1)

    trajectories = []
    for i in range(k):
        if diverged[i]:
            label = TrajectoryClass.DIVERGED
        elif x_star is not None and (dist[i] <= opts.convergence_ratio * dist0[i] or dist[i] <= REST_DISTANCE):
            label = TrajectoryClass.CONVERGED
        else:
            label = TrajectoryClass.UNDECIDED
        trajectories.append(Trajectory(
            times=np.array(times[i]),
            states=np.array(states[i]),
            classification=label,
            final_distance=float(dist[i]),
            halt_time=min(halt_step[i] * opts.dt, opts.t_end) if diverged[i] else None,
        ))

    counts = {c.value: sum(t.classification == c for t in trajectories) for c in TrajectoryClass}
    logger.debug("[Simulate] %d sample(s), %d steps: %s", k, n_steps, counts)
    return trajectories


def integrate(
    sys: ReducedSystem,
    state0,
    t_end: Optional[float] = None,
    dt: Optional[float] = None,
    x_star=None,
    opts: Optional[SimulationOptions] = None,
) -> Trajectory:
    """Single recorded run; ``t_end`` and ``dt`` override ``opts``."""
    opts = opts or SimulationOptions()
    update = {}
    if t_end is not None:
        update["t_end"] = t_end
    if dt is not None:
        update["dt"] = dt
    if update:
        try:
            opts = SimulationOptions(**{**opts.model_dump(), **update})
        except ValueError as e:
            raise ParameterError(f"Invalid integration horizon: {e}") from e
    state0 = np.asarray(state0, dtype=float)
    if state0.shape != (2 * sys.n,):
        raise DimensionError(f"State must have length {2 * sys.n}, got shape {state0.shape}")
    return integrate_batch(sys, state0[None, :], opts, x_star=x_star, record=True)[0]


def trajectory_csv(traj: Trajectory) -> str:
    n = traj.n
    header = ["t"] + [f"delta_{i + 1}" for i in range(n)] + [f"omega_{i + 1}" for i in range(n)]
    rows = ([float(t)] + [float(v) for v in row] for t, row in zip(traj.times, traj.states))
    return csv_text(header, rows)
