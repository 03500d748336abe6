"""
RK4 integration of the swing equations and the perturbation experiment.
"""
import numpy as np
import pytest
from scipy.linalg import expm

from swingcert.schema.results import TrajectoryClass
from swingcert.src.core.errors import DimensionError, ParameterError
from swingcert.src.equilibrium.flow import flow_jacobian
from swingcert.src.equilibrium.solver import rebalance, solve_equilibrium
from swingcert.src.netmodel.parser import load_case
from swingcert.src.netmodel.reduction import reduce_case
from swingcert.src.simulate.experiment import angle_perturbation, perturbation_experiment
from swingcert.src.simulate.swing import (
    SimulationOptions,
    equilibrium_distance,
    integrate,
    integrate_batch,
    swing_rhs,
    trajectory_csv,
)
from swingcert.src.spectral.eigen import spectrum
from swingcert.src.spectral.jacobian import build_jacobian
from tests.factories import random_network, random_system, two_machine, with_damping_ratio

FAST = SimulationOptions(t_end=20.0, dt=1e-2)


def _at_rest(eq):
    return np.concatenate([eq.delta_star, np.zeros(len(eq.delta_star))])


@pytest.fixture
def unstable(cases_dir):
    sys = reduce_case(load_case(cases_dir / "three_machine_unstable.json"))
    eq = solve_equilibrium(sys)
    return rebalance(sys, eq), eq


def test_rhs_two_machine():
    sys = two_machine()
    out = swing_rhs(sys, [0.3, 0.0, 0.2, -0.1])
    np.testing.assert_allclose(out, [0.2, -0.1, -np.sin(0.3) - 0.2, np.sin(0.3) + 0.1], atol=1e-15)


def test_rhs_batch_matches_rows(rng):
    sys, delta = random_network(rng, 4)
    states = rng.normal(size=(5, 8))
    batch = swing_rhs(sys, states)
    for k in range(5):
        np.testing.assert_allclose(batch[k], swing_rhs(sys, states[k]), rtol=0, atol=1e-14)
    with pytest.raises(DimensionError):
        swing_rhs(sys, np.zeros(7))


def test_rhs_scales_with_synchronous_speed():
    sys = two_machine().model_copy(update={"omega_s": 10.0})
    out = swing_rhs(sys, [0.3, 0.0, 0.0, 0.0])
    assert out[2] == pytest.approx(-10.0 * np.sin(0.3))


def test_equilibrium_is_a_fixed_point(rng):
    sys, delta = random_network(rng, 5)
    x_star = np.concatenate([delta, np.zeros(5)])
    traj = integrate(sys, x_star, t_end=1.0, dt=1e-2, x_star=x_star)
    assert np.max(np.abs(traj.states - x_star)) <= 1e-12
    assert traj.classification == TrajectoryClass.CONVERGED


def test_damped_pair_converges():
    sys = two_machine(d=1.0)
    x_star = np.zeros(4)
    traj = integrate(sys, [0.1, -0.1, 0.0, 0.0], x_star=x_star, opts=FAST)
    assert traj.classification == TrajectoryClass.CONVERGED
    assert traj.final_distance < 1e-3
    assert traj.halt_time is None


def test_rk4_is_fourth_order():
    sys = two_machine(d=1.0)
    x0 = [0.5, 0.0, 0.0, 0.0]

    def final(dt):
        return integrate(sys, x0, t_end=2.0, dt=dt).states[-1]

    reference = final(0.02 / 8)
    coarse = np.linalg.norm(final(0.02) - reference)
    fine = np.linalg.norm(final(0.01) - reference)
    assert 8.0 <= coarse / fine <= 32.0


def test_small_perturbation_follows_linearization(rng):
    sys, delta = random_system(rng, 3)
    x_star = np.concatenate([delta, np.zeros(3)])
    jac = build_jacobian(sys, flow_jacobian(sys, delta)).j

    eps = 1e-4
    offset = np.concatenate([angle_perturbation(3, eps, 1, 0), np.zeros(3)])
    opts = SimulationOptions(t_end=0.5, dt=1e-3, record_stride=1)
    traj = integrate(sys, x_star + offset, x_star=x_star, opts=opts)

    for t, x in zip(traj.times[::50], traj.states[::50]):
        linear = expm(jac * t) @ offset
        assert np.linalg.norm(x - x_star - linear) <= 1e-2 * eps


def test_translation_is_neutral(rng):
    sys, delta = random_network(rng, 4)
    x_star = np.concatenate([delta, np.zeros(4)])
    shifted = x_star.copy()
    shifted[:4] += 0.4
    assert equilibrium_distance(shifted, x_star, 4)[0] == pytest.approx(0.0, abs=1e-15)
    traj = integrate(sys, shifted, t_end=1.0, dt=1e-2, x_star=x_star)
    assert traj.classification == TrajectoryClass.CONVERGED


def test_recording_stride():
    traj = integrate(two_machine(), [0.1, 0.0, 0.0, 0.0], opts=SimulationOptions(t_end=1.0, dt=1e-2, record_stride=10))
    np.testing.assert_allclose(traj.times, np.linspace(0.0, 1.0, 11), atol=1e-12)
    assert traj.states.shape == (11, 4)


def test_horizon_not_a_multiple_of_step():
    x0 = [0.1, 0.0, 0.0, 0.0]
    traj = integrate(two_machine(), x0, opts=SimulationOptions(t_end=0.25, dt=0.1, record_stride=1))
    np.testing.assert_allclose(traj.times, [0.0, 0.1, 0.2, 0.25], atol=1e-12)
    assert traj.times[-1] == 0.25

    fine = integrate(two_machine(), x0, t_end=0.25, dt=1e-3)
    np.testing.assert_allclose(traj.states[-1], fine.states[-1], atol=1e-4)


def test_unrecorded_batch_keeps_endpoints():
    trajs = integrate_batch(two_machine(), np.zeros((3, 4)), SimulationOptions(t_end=1.0, dt=0.1))
    assert len(trajs) == 3
    assert all(t.times.tolist() == [0.0, pytest.approx(1.0)] for t in trajs)


def test_without_equilibrium_nothing_converges():
    traj = integrate(two_machine(), [0.1, 0.0, 0.0, 0.0], t_end=1.0, dt=0.1)
    assert traj.classification == TrajectoryClass.UNDECIDED


def test_runaway_machine_diverges():
    # Mechanical input with no network to absorb it
    sys = two_machine(p_mech=(5.0, 0.0)).model_copy(update={"y_mag": np.zeros((2, 2))})
    opts = SimulationOptions(t_end=100.0, dt=1e-2, angle_limit=50.0)
    traj = integrate(sys, np.zeros(4), x_star=np.zeros(4), opts=opts)
    assert traj.classification == TrajectoryClass.DIVERGED
    assert traj.halt_time is not None and traj.halt_time < 100.0
    assert np.all(np.isfinite(traj.states))


def test_integrate_rejects_bad_horizon():
    with pytest.raises(ParameterError):
        integrate(two_machine(), np.zeros(4), t_end=1e-4, dt=1e-3)
    with pytest.raises(DimensionError):
        integrate(two_machine(), np.zeros(3))


def test_trajectory_csv():
    traj = integrate(two_machine(), [0.1, 0.0, 0.0, 0.0], opts=SimulationOptions(t_end=0.5, dt=0.1, record_stride=1))
    lines = trajectory_csv(traj).splitlines()
    assert lines[0] == "t,delta_1,delta_2,omega_1,omega_2"
    assert len(lines) == 1 + len(traj.times)
    assert lines[1] == "0.0,0.1,0.0,0.0,0.0"


def test_unstable_fixture_leaves_the_equilibrium(unstable):
    sys, eq = unstable
    x_star = _at_rest(eq)
    start = x_star.copy()
    start[:3] += angle_perturbation(3, 0.01, 0, 0)
    traj = integrate(sys, start, x_star=x_star, opts=SimulationOptions(t_end=20.0, dt=1e-3))
    assert traj.classification != TrajectoryClass.CONVERGED


# --- Experiment ---

def test_perturbation_is_orthogonal_to_translation():
    v = angle_perturbation(5, 0.01, 3, 7)
    assert abs(v.sum()) <= 1e-15
    assert np.linalg.norm(v) == pytest.approx(0.01)
    np.testing.assert_array_equal(v, angle_perturbation(5, 0.01, 3, 7))
    assert not np.array_equal(v, angle_perturbation(5, 0.01, 3, 8))
    with pytest.raises(ParameterError):
        angle_perturbation(5, -0.01, 3, 7)


def test_zero_radius_converges_everywhere():
    sys = two_machine()
    eq = solve_equilibrium(sys)
    summary, worst = perturbation_experiment(sys, eq, 8, 0.0, opts=SimulationOptions(t_end=2.0, dt=1e-2))
    assert summary.fraction_converged == 1.0
    assert summary.counts == {"converged": 8, "diverged": 0, "undecided": 0}
    assert worst.classification == TrajectoryClass.CONVERGED


def test_stable_pair_converges_from_every_sample():
    sys = two_machine(d=1.0)
    eq = solve_equilibrium(sys)
    summary, _ = perturbation_experiment(sys, eq, 32, 0.01, seed=5, opts=FAST)
    assert summary.fraction_converged == 1.0
    assert summary.n_samples == 32
    assert summary.t_end == 20.0


def test_unstable_fixture_does_not_fully_converge(unstable):
    sys, eq = unstable
    summary, worst = perturbation_experiment(sys, eq, 4, 0.01, opts=SimulationOptions(t_end=20.0, dt=1e-3))
    assert summary.fraction_converged < 1.0
    assert summary.worst_classification != TrajectoryClass.CONVERGED
    assert worst.classification == summary.worst_classification


def test_experiment_does_not_depend_on_thread_count(rng):
    sys, delta = random_system(rng, 3)
    eq = solve_equilibrium(sys, delta)
    opts = SimulationOptions(t_end=2.0, dt=1e-2)
    one, worst_one = perturbation_experiment(sys, eq, 20, 0.05, seed=11, opts=opts, threads=1)
    many, worst_many = perturbation_experiment(sys, eq, 20, 0.05, seed=11, opts=opts, threads=4)
    assert one.model_dump() == many.model_dump()
    np.testing.assert_array_equal(worst_one.states, worst_many.states)


def test_experiment_rejects_bad_arguments():
    sys = two_machine()
    eq = solve_equilibrium(sys)
    with pytest.raises(ParameterError):
        perturbation_experiment(sys, eq, 0, 0.01)
    with pytest.raises(ParameterError):
        perturbation_experiment(sys, eq, 4, -1.0)


def _well_damped_fixture(rng, attempts=200):
    """Certified system with a clear spectral margin, so 20 s suffices to decay by 10x."""
    for _ in range(attempts):
        n = int(rng.integers(2, 6))
        support = np.ones((n, n), dtype=bool)
        sys, delta = random_network(rng, n, support=support)
        sys = sys.model_copy(update={"m": rng.uniform(0.5, 3.0, n)})
        sys = with_damping_ratio(sys, delta, rng.uniform(1.0, 1.5, n))
        eq = solve_equilibrium(sys, delta)
        sp = spectrum(sys, flow_jacobian(sys, delta), pencil=False)
        if sp.max_re_nonzero < -0.25:
            return sys, eq
    raise AssertionError("no well-damped fixture found")


@pytest.mark.slow
def test_certified_fixtures_converge(rng):
    """
    Certified, fully coupled systems whose nonzero spectrum lies left of Re = -0.25
    all return to within 10% of their initial distance by t = 20 s. The margin
    filter is part of the claim: weakly damped certified systems can still be
    decaying at 20 s and end up undecided.
    """
    opts = SimulationOptions(t_end=20.0, dt=1e-3)
    for _ in range(20):
        sys, eq = _well_damped_fixture(rng)
        summary, _ = perturbation_experiment(sys, eq, 16, 0.01, opts=opts)
        assert summary.fraction_converged == 1.0
