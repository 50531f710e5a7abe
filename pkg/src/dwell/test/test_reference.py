import numpy as np
import pytest

from ..controller import FilterRealization
from ..linalg import is_hurwitz
from ..model import ModeDefinition
from ..reference import (ReferenceState, build_closedloop_matrices, dc_gain,
                         ideal_deriv, ideal_filtered_transfer, loop_deriv,
                         reference_deriv, reference_output,
                         reference_transfer)


@pytest.fixture
def mode():
    return ModeDefinition(np.array([[0.0, 1.0], [-1.0, -2.0]]), np.array([[0.0], [1.0]]),
                          np.array([[1.0, 0.0]]), np.array([[1.0]]))


@pytest.fixture
def lowpass():
    return FilterRealization([[-10.0]], [[1.0]], [[10.0]], [[0.0]])


def test_matrix_shapes(mode, lowpass):
    matrices = build_closedloop_matrices(mode, np.zeros((2, 1)), np.eye(1), lowpass)
    assert matrices.size == 4
    assert matrices.Bbar.shape == (4, 1)
    assert matrices.Ebar.shape == (4, 1)
    np.testing.assert_allclose(matrices.Cbar, [[0.0, 0.0, 0.0, -1.0]])


def test_stacked_form_matches_feedback_form(mode, lowpass):
    rng = np.random.default_rng(3)
    theta = np.array([[0.3], [-0.2]])
    omega = np.array([[1.2]])
    matrices = build_closedloop_matrices(mode, theta, omega, lowpass)
    for _ in range(5):
        x, x_f, x_i = rng.normal(size=2), rng.normal(size=1), rng.normal(size=1)
        d, r = rng.normal(size=1), rng.normal(size=1)
        stacked = reference_deriv(np.concatenate([x, x_f, x_i]), matrices, d, r)
        direct = np.concatenate(loop_deriv(x, x_f, x_i, mode, theta, omega, d, r, lowpass))
        np.testing.assert_allclose(stacked, direct, atol=1e-12)


def test_reference_output_is_minus_integrator(mode, lowpass):
    matrices = build_closedloop_matrices(mode, np.zeros((2, 1)), np.eye(1), lowpass)
    xbar = np.array([0.0, 0.0, 0.0, 0.7])
    np.testing.assert_allclose(reference_output(xbar, matrices), [-0.7])
    state = ReferenceState(xbar, 2, 1)
    np.testing.assert_allclose(state.u_ref, [-0.7])
    np.testing.assert_allclose(state.x_ref, [0.0, 0.0])


def test_nominal_reference_is_stable_and_tracks_ideal(mode, lowpass):
    matrices = build_closedloop_matrices(mode, np.zeros((2, 1)), np.eye(1), lowpass)
    assert is_hurwitz(matrices.Abar)
    # steady state of x_ref equals the ideal steady state
    np.testing.assert_allclose(
        np.real(reference_transfer(matrices, 2, 0.0)),
        np.real(ideal_filtered_transfer(mode, lowpass, np.eye(1), 0.0)),
        atol=1e-10,
    )


def test_dc_gain_is_identity(lowpass):
    np.testing.assert_allclose(dc_gain(lowpass, np.array([[0.6]])), np.eye(1))


def test_ideal_deriv(mode):
    np.testing.assert_allclose(ideal_deriv([1.0, 0.0], mode, [2.0]), [0.0, 1.0])
