"""
System Jacobian, eigenvalues, the quadratic pencil and the stability verdict.
"""
import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment
from scipy.stats import ortho_group

from swingcert.schema.results import StabilityVerdict
from swingcert.src.core.errors import DimensionError, EigenSolverError
from swingcert.src.equilibrium.flow import flow_jacobian
from swingcert.src.spectral.eigen import eigenvalues, spectrum, stability_verdict, summarize_spectrum
from swingcert.src.spectral.jacobian import build_jacobian
from swingcert.src.spectral.pencil import pencil_determinant_roots, pencil_residual
from tests.factories import random_network, random_system, two_machine


def test_jacobian_blocks():
    sys = two_machine(d=1.0, m=2.0)
    jac = build_jacobian(sys, flow_jacobian(sys, [0.0, 0.0]))
    np.testing.assert_array_equal(jac.top_left, np.zeros((2, 2)))
    np.testing.assert_array_equal(jac.top_right, np.eye(2))
    np.testing.assert_allclose(jac.bottom_left, [[-0.5, 0.5], [0.5, -0.5]], atol=1e-15)
    np.testing.assert_allclose(jac.bottom_right, -0.5 * np.eye(2))


def test_jacobian_uses_synchronous_speed():
    sys = two_machine().model_copy(update={"omega_s": 100.0})
    jac = build_jacobian(sys, flow_jacobian(sys, [0.0, 0.0]))
    assert jac.bottom_left[0, 0] == pytest.approx(-100.0)
    assert jac.bottom_right[0, 0] == pytest.approx(-1.0)


def test_jacobian_shape_mismatch():
    sys, delta = random_network(np.random.default_rng(3), 3)
    with pytest.raises(DimensionError):
        build_jacobian(two_machine(), flow_jacobian(sys, delta))


def test_eigenvalues_of_two_machine():
    sys = two_machine(d=1.0)
    eigs = eigenvalues(build_jacobian(sys, flow_jacobian(sys, [0.0, 0.0])).j)
    expected = np.sort_complex(np.array([0.0, -1.0, -0.5 + 1j * np.sqrt(7) / 2, -0.5 - 1j * np.sqrt(7) / 2]))
    np.testing.assert_allclose(eigs, expected, atol=1e-12)


def test_eigenvalues_recover_constructed_spectrum(rng):
    pairs = rng.uniform(-3.0, 1.0, 4) + 1j * rng.uniform(0.5, 4.0, 4)
    reals = rng.uniform(-5.0, 2.0, 4)
    blocks = np.zeros((12, 12))
    for k, z in enumerate(pairs):
        i = 2 * k
        blocks[i:i + 2, i:i + 2] = [[z.real, z.imag], [-z.imag, z.real]]
    for k, r in enumerate(reals):
        blocks[8 + k, 8 + k] = r
    q = ortho_group.rvs(12, random_state=rng)
    a = q @ blocks @ q.T

    expected = np.sort_complex(np.concatenate([pairs, pairs.conj(), reals]))
    got = eigenvalues(a)
    cost = np.abs(got[:, None] - expected[None, :])
    rows, cols = linear_sum_assignment(cost)
    assert np.max(cost[rows, cols] / np.maximum(np.abs(expected[cols]), 1.0)) <= 1e-8


def test_eigenvalues_input_checks():
    with pytest.raises(DimensionError):
        eigenvalues(np.zeros((2, 3)))
    with pytest.raises(EigenSolverError):
        eigenvalues([[np.nan, 0.0], [0.0, 1.0]])
    assert eigenvalues(np.zeros((0, 0))).size == 0


def test_eigenvalues_come_in_conjugate_pairs(rng):
    sys, delta = random_system(rng, 6)
    eigs = eigenvalues(build_jacobian(sys, flow_jacobian(sys, delta)).j)
    np.testing.assert_allclose(np.sort_complex(eigs.conj()), eigs, atol=1e-10)


def test_pencil_residual_vanishes_on_eigenvalues(rng):
    sys, delta = random_system(rng, 4, omega_s=50.0, proof_units=True)
    sp = spectrum(sys, flow_jacobian(sys, delta))
    assert np.max(sp.pencil_residuals) <= 1e-8


def test_pencil_residual_away_from_spectrum():
    sys = two_machine(d=1.0)
    # P(1) = [[3, -1], [-1, 3]], singular values 4 and 2
    assert pencil_residual(sys, flow_jacobian(sys, [0.0, 0.0]), 1.0) == pytest.approx(2.0 / np.sqrt(20.0))


def test_pencil_residual_of_zero_matrix():
    sys = two_machine().model_copy(update={"y_mag": np.zeros((2, 2))})
    assert pencil_residual(sys, flow_jacobian(sys, [0.0, 0.0]), 0.0) == 0.0


# --- Summary and verdict ---

def test_summary_two_machine():
    sys = two_machine(d=1.0)
    sp = spectrum(sys, flow_jacobian(sys, [0.0, 0.0]), pencil=False)
    assert len(sp.zero_cluster) == 1
    assert sp.lambda2 == pytest.approx((-0.5, np.sqrt(7) / 2))
    assert sp.max_re_nonzero == pytest.approx(-0.5)
    assert sp.zero_tol == pytest.approx(1e-7 * sp.norm_j)
    assert sp.pencil_residuals is None
    assert stability_verdict(sp) == StabilityVerdict.ASYMPTOTICALLY_STABLE_REDUCED


def test_lambda2_prefers_positive_imaginary_part():
    sp = summarize_spectrum([0.0, -1.0 + 2.0j, -1.0 - 2.0j, -3.0], norm_j=10.0)
    assert sp.lambda2 == (-1.0, 2.0)


def test_lambda2_prefers_smaller_imaginary_part():
    sp = summarize_spectrum([0.0, -1.0 + 2.0j, -1.0 - 2.0j, -1.0], norm_j=10.0)
    assert sp.lambda2 == (-1.0, 0.0)


def test_verdict_unstable():
    sp = summarize_spectrum([0.0, 0.5, -1.0], norm_j=5.0)
    assert stability_verdict(sp) == StabilityVerdict.UNSTABLE


def test_verdict_inconclusive_with_extra_zero():
    sp = summarize_spectrum([0.0, 1e-9, -1.0, -2.0], norm_j=5.0)
    assert len(sp.zero_cluster) == 2
    assert stability_verdict(sp) == StabilityVerdict.INCONCLUSIVE_ZERO_CLUSTER


def test_verdict_inconclusive_near_imaginary_axis():
    sp = summarize_spectrum([0.0, -1e-8 + 1j, -1e-8 - 1j], norm_j=1.0)
    assert stability_verdict(sp) == StabilityVerdict.INCONCLUSIVE_ZERO_CLUSTER


def test_verdict_inconclusive_when_only_zeros():
    sp = summarize_spectrum([0.0, 0.0], norm_j=1.0)
    assert sp.lambda2 is None
    assert stability_verdict(sp) == StabilityVerdict.INCONCLUSIVE_ZERO_CLUSTER


def test_disconnected_pair_has_two_zero_eigenvalues():
    sys = two_machine().model_copy(update={"y_mag": np.zeros((2, 2))})
    sp = spectrum(sys, flow_jacobian(sys, [0.0, 0.0]), pencil=False)
    assert len(sp.zero_cluster) == 2
    assert stability_verdict(sp) == StabilityVerdict.INCONCLUSIVE_ZERO_CLUSTER


# --- Pencil determinant ---

def _match(a, b):
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return cost[rows, cols], b[cols]


def test_determinant_roots_two_machine():
    sys = two_machine(d=1.0)
    roots = pencil_determinant_roots(sys, flow_jacobian(sys, [0.0, 0.0]))
    expected = np.array([0.0, -1.0, -0.5 + 1j * np.sqrt(7) / 2, -0.5 - 1j * np.sqrt(7) / 2])
    gaps, _ = _match(roots, expected)
    assert np.max(gaps) <= 1e-8


@pytest.mark.slow
def test_determinant_roots_match_eigenvalues(rng):
    for _ in range(500):
        n = int(rng.integers(2, 5))
        sys, delta = random_system(rng, n, certified=bool(rng.random() < 0.5))
        l = flow_jacobian(sys, delta)
        sp = spectrum(sys, l)
        roots = pencil_determinant_roots(sys, l)
        gaps, matched = _match(roots, sp.eigenvalues)
        assert np.all(gaps <= 1e-6 * np.maximum(1.0, np.abs(matched)))
        assert np.max(sp.pencil_residuals) <= 1e-8
