import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple

import numpy as np

from swingcert.schema.case import ReducedSystem
from swingcert.schema.results import Equilibrium, ExperimentSummary, Trajectory, TrajectoryClass
from swingcert.src.core.errors import ParameterError
from swingcert.src.core.settings import get_settings
from swingcert.src.simulate.swing import SimulationOptions, integrate, integrate_batch

logger = logging.getLogger(__name__)

# Samples per batch; fixed so results do not depend on the thread count
CHUNK_SIZE = 8

_SEVERITY = {TrajectoryClass.CONVERGED: 0, TrajectoryClass.UNDECIDED: 1, TrajectoryClass.DIVERGED: 2}


def angle_perturbation(n: int, radius: float, seed: int, index: int) -> np.ndarray:
    """
    Random angle offset of norm ``radius``, orthogonal to the all-ones direction.
    Sample ``index`` draws from its own generator seeded with (seed, index).

    Raises:
        ParameterError: negative or non-finite radius.
    """
    if radius < 0.0 or not np.isfinite(radius):
        raise ParameterError("radius must be a non-negative number")
    rng = np.random.default_rng([seed, index])
    v = rng.standard_normal(n)
    v -= v.mean()
    size = np.linalg.norm(v)
    if radius == 0.0 or size == 0.0:
        return np.zeros(n)
    return v * (radius / size)


def perturbation_experiment(
    sys: ReducedSystem,
    eq: Equilibrium,
    n_samples: int,
    radius: float,
    seed: int = 0,
    opts: Optional[SimulationOptions] = None,
    threads: Optional[int] = None,
) -> Tuple[ExperimentSummary, Optional[Trajectory]]:
    """
    Integrates ``n_samples`` angle perturbations of (delta*, 0) and aggregates the outcomes.

    ``sys`` should be balanced at ``eq`` (see ``rebalance``). Returns the summary and
    the recorded run of the worst sample: diverged before undecided before converged,
    then largest final distance, then lowest index.
    """
    if n_samples < 1:
        raise ParameterError("n_samples must be at least 1")
    if radius < 0.0 or not np.isfinite(radius):
        raise ParameterError("radius must be a non-negative number")
    opts = opts or SimulationOptions()
    threads = threads or get_settings().threads

    n = sys.n
    x_star = np.concatenate([eq.delta_star, np.zeros(n)])
    starts = np.array([
        np.concatenate([eq.delta_star + angle_perturbation(n, radius, seed, i), np.zeros(n)])
        for i in range(n_samples)
    ])

    chunks = [starts[k:k + CHUNK_SIZE] for k in range(0, n_samples, CHUNK_SIZE)]
    workers = max(1, min(threads, len(chunks)))
    logger.info("[Experiment] %d samples, radius %g, %d chunk(s) on %d thread(s)", n_samples, radius, len(chunks), workers)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda chunk: integrate_batch(sys, chunk, opts, x_star=x_star), chunks))
    outcomes = [traj for chunk in results for traj in chunk]

    counts = {c.value: 0 for c in TrajectoryClass}
    for traj in outcomes:
        counts[traj.classification.value] += 1

    worst = max(
        range(n_samples),
        key=lambda i: (_SEVERITY[outcomes[i].classification], outcomes[i].final_distance, -i),
    )
    worst_run = integrate(sys, starts[worst], x_star=x_star, opts=opts)

    summary = ExperimentSummary(
        n_samples=n_samples,
        radius=radius,
        seed=seed,
        t_end=opts.t_end,
        dt=opts.dt,
        fraction_converged=counts[TrajectoryClass.CONVERGED.value] / n_samples,
        counts=counts,
        worst_index=worst,
        worst_final_distance=outcomes[worst].final_distance,
        worst_classification=outcomes[worst].classification,
    )
    logger.info("[Experiment] fraction converged %.3f, counts %s", summary.fraction_converged, counts)
    return summary, worst_run
