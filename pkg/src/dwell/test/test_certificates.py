import math

import numpy as np
import pytest

from ..certificates import (CONDITION_DWELL, CONDITION_MODE,
                            CONDITION_REFERENCE, CONDITION_SAMPLING,
                            CertificateReport, CertificateSettings,
                            alpha_bars, certify, dwell_time, extract_Q,
                            find_mode_lyapunov, lyapunov_at_switches,
                            sample_point_bound, switching_factor,
                            theorem1_report, ts_condition, ts_lhs,
                            verify_reference_lyapunov)
from ..controller import FilterRealization
from ..exceptions import DimensionError
from ..linalg import decay_rate
from ..model import ModeDefinition, ModeSet, SwitchingSignal, UncertaintySets
from ..reference import build_closedloop_matrices

B = np.array([[0.0], [1.0]])
C = np.array([[1.0, 0.0]])
K = np.array([[1.0]])


def make_mode(A):
    return ModeDefinition(np.array(A, dtype=float), B, C, K)


@pytest.fixture
def modes():
    return ModeSet((make_mode([[0.0, 1.0], [-1.0, -2.0]]),))


@pytest.fixture
def filt():
    return FilterRealization.constant(20.0, 1)


def run_certify(modes, sets, filt, signal=None, settings=None, Ts=0.005):
    return certify(modes, sets, filt, Ts, signal or SwitchingSignal(), np.zeros(modes.n), 1.0, settings)


def test_dwell_time_formula():
    assert dwell_time(0.5, math.e, 0.5) == pytest.approx(4.0)
    assert dwell_time(1.0, 1.0, 0.5) == 0.0
    with pytest.raises(DimensionError):
        dwell_time(0.0, 2.0, 0.5)
    with pytest.raises(DimensionError):
        dwell_time(1.0, 0.5, 0.5)
    with pytest.raises(DimensionError):
        dwell_time(1.0, 2.0, 1.0)


def test_switching_factor():
    factor, limit = switching_factor(4.0, 0.25, 0.5)
    assert not limit
    assert factor == pytest.approx(9.0)
    factor, limit = switching_factor(1.0, 0.25, 0.5, n_switches=3)
    assert limit
    assert factor == pytest.approx(4.0)
    # without a switch count the limit value stays large but finite
    factor, _ = switching_factor(1.0, 0.25, 0.5)
    assert math.isfinite(factor) and factor > 1e5


def test_alpha_bars_scalar():
    scalar = ModeSet((ModeDefinition([[-1.0]], [[1.0]], [[1.0]], [[1.0]]),))
    Ts = 0.1
    alpha = alpha_bars(scalar, Ts)
    assert alpha.alpha1 == pytest.approx(1.0)
    assert alpha.alpha2 == pytest.approx(math.exp(-Ts), rel=1e-4)
    assert alpha.alpha3 == pytest.approx(1.0 - math.exp(-Ts), rel=1e-4)
    with pytest.raises(DimensionError):
        alpha_bars(scalar, 0.0)


def test_alpha_bars_shrink_with_ts(modes):
    small = alpha_bars(modes, 0.001)
    large = alpha_bars(modes, 0.01)
    assert small.alpha3 < large.alpha3
    assert ts_lhs(small, 0.1, 0.2, 0.1, 1.0, 1.0) < ts_lhs(large, 0.1, 0.2, 0.1, 1.0, 1.0)


def test_extract_q_is_schur_complement():
    Pbar = np.array([[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]])
    Q, R, S = extract_Q(Pbar, 2)
    np.testing.assert_allclose(R, Pbar[:2, 2:])
    np.testing.assert_allclose(S, Pbar[2:, 2:])
    expected = Pbar[2:, 2:] - Pbar[2:, :2] @ np.linalg.solve(Pbar[:2, :2], Pbar[:2, 2:])
    np.testing.assert_allclose(Q, expected)
    assert np.all(np.linalg.eigvalsh(Q) > 0)


def test_mode_lyapunov(modes):
    result = find_mode_lyapunov(modes)
    assert result.feasible
    assert result.lam > 0
    assert result.mu == pytest.approx(1.0)
    P = result.P_list[0]
    assert np.linalg.eigvalsh(P)[0] == pytest.approx(1.0)
    A = modes[0].A
    residual = A.T @ P + P @ A + result.lam * P
    assert np.max(np.linalg.eigvalsh(0.5 * (residual + residual.T))) < 1e-8


def test_mode_lyapunov_not_hurwitz():
    result = find_mode_lyapunov(ModeSet((make_mode([[0.0, 1.0], [1.0, 0.0]]),)))
    assert not result.feasible
    assert result.violation == "mode 0 is not Hurwitz"
    assert result.index == 0


def test_reference_lyapunov(modes, filt):
    sets = UncertaintySets((np.array([[0.2], [0.1]]), np.array([[-0.2], [-0.1]])),
                           (np.array([0.1]), np.array([-0.1])),
                           (np.array([[0.9]]), np.array([[1.1]])))
    result = verify_reference_lyapunov(modes, sets, filt)
    assert result.feasible
    assert result.lam > 0
    assert np.linalg.eigvalsh(result.Pbar_list[0])[0] >= 1.0 - 1e-9


def test_reference_decay_holds_inside_the_polytope(modes, filt):
    sets = UncertaintySets((np.array([[0.2], [0.1]]), np.array([[0.2], [-0.1]]),
                            np.array([[-0.2], [0.1]]), np.array([[-0.2], [-0.1]])),
                           (np.array([0.1]), np.array([-0.1])),
                           (np.array([[0.9]]), np.array([[1.1]])))
    result = verify_reference_lyapunov(modes, sets, filt)
    assert result.feasible
    Pbar = result.Pbar_list[0]
    rng = np.random.default_rng(3)
    for _ in range(100):
        theta = np.tensordot(rng.dirichlet(np.ones(4)), np.array(sets.theta_vertices), axes=1)
        omega = np.tensordot(rng.dirichlet(np.ones(2)), np.array(sets.omega_vertices), axes=1)
        Abar = build_closedloop_matrices(modes[0], theta, omega, filt).Abar
        assert decay_rate(Abar, Pbar) >= result.lam - 1e-9


def test_reference_lyapunov_rejects_small_candidate(modes, filt):
    sets = UncertaintySets.nominal(2, 1)
    result = verify_reference_lyapunov(modes, sets, filt, Pbar_list=[0.5 * np.eye(3)])
    assert not result.feasible
    assert "not >= I" in result.violation


def test_certify_nominal(modes, filt):
    report = run_certify(modes, UncertaintySets.nominal(2, 1), filt)
    assert report.feasible, report.violation
    assert report.tau_d == pytest.approx(0.0)
    assert report.delta0 == pytest.approx(1e-6)
    assert report.ts_satisfied
    assert report.switch_factor == pytest.approx(1.0)
    assert "D_sigma in the sampling-time condition read as D_d" in report.flags
    assert "mu = 1: switching factor evaluated in the limit" in report.flags
    assert report.delta1 > 0 and report.delta2 > 0
    data = report.to_dict()
    assert "lambda" in data and "lam" not in data
    assert len(data["Q_list"]) == 1


def test_certify_filter_zero(modes):
    report = run_certify(modes, UncertaintySets.nominal(2, 1), FilterRealization.constant(0.0, 1))
    assert not report.feasible
    assert report.violation.startswith(CONDITION_REFERENCE)


def test_certify_not_hurwitz(filt):
    modes = ModeSet((make_mode([[0.0, 1.0], [1.0, 0.0]]),))
    report = run_certify(modes, UncertaintySets.nominal(2, 1), filt)
    assert not report.feasible
    assert report.violation.startswith(CONDITION_MODE)


def test_certify_dwell_violated(filt):
    modes = ModeSet((make_mode([[0.0, 1.0], [-1.0, -2.0]]), make_mode([[0.0, 1.0], [-10.0, -1.0]])))
    signal = SwitchingSignal(((0.0, 0), (0.01, 1)))
    report = run_certify(modes, UncertaintySets.nominal(2, 1), filt, signal)
    assert not report.feasible
    assert report.tau_d > 0.01
    assert report.violation.startswith(CONDITION_DWELL)


def test_certify_sampling_time(modes, filt):
    sets = UncertaintySets((np.zeros((2, 1)),), (np.array([0.1]), np.array([-0.1])), (np.eye(1),))
    report = run_certify(modes, sets, filt, settings=CertificateSettings(delta0=1e-9))
    assert not report.feasible
    assert report.violation.startswith(CONDITION_SAMPLING)
    assert report.ts_lhs > 1e-9
    assert report.max_Ts < 0.005


def test_certify_strict_norm_bounds(modes, filt):
    sets = UncertaintySets((np.zeros((2, 1)),), (np.zeros(1),), (np.array([[0.8]]), np.array([[1.2]])))
    report = run_certify(modes, sets, filt, settings=CertificateSettings(strict_norm_bounds=True))
    assert report.D_omega == pytest.approx(report.D_omega_norm)
    assert any(flag.startswith("strict norm bounds") for flag in report.flags)


def test_theorem1_report_is_strict_on_xtilde():
    report = CertificateReport(feasible=True, violation=None, delta0=1.0, rho=2.0, rho_u=2.0,
                               delta1=1.0, delta2=1.0, ts_satisfied=True)
    observed = {"xtilde": 1.0, "x": 2.0, "u": 1.0, "e": 0.5, "e_u": 0.5}
    theorem = theorem1_report(report, observed)
    assert not theorem.passed
    failed = [check.name for check in theorem.checks if not check.passed]
    assert failed == ["xtilde"]

    observed["xtilde"] = 0.5
    theorem = theorem1_report(report, observed)
    assert theorem.passed
    assert theorem.to_dict()["bounds"][1]["margin"] == pytest.approx(0.0)


def test_theorem1_report_flags_infeasible():
    report = CertificateReport(feasible=False, violation="dwell time: too fast")
    theorem = theorem1_report(report, {"xtilde": 0.0, "x": 0.0, "u": 0.0, "e": 0.0, "e_u": 0.0})
    assert not theorem.passed
    assert any("bounds not guaranteed" in flag for flag in theorem.flags)


def test_sample_point_bound():
    report = CertificateReport(feasible=True, violation=None, alpha_bars=(1.0, 0.5, 0.1),
                               D_theta=0.2, D_d=0.1, D_omega=0.3, rho=2.0, rho_u=1.0)
    assert sample_point_bound(report) == pytest.approx(0.1 * (0.3 + 0.4 + 0.1))


def test_lyapunov_at_switches():
    times = np.array([0.0, 0.1, 0.2, 0.3])
    xbar = np.array([[1.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.0, 0.1]])
    modes_active = np.array([0, 0, 1, 1])
    values = lyapunov_at_switches(times, xbar, modes_active, [0.2], [np.eye(2), 2.0 * np.eye(2)])
    assert values == pytest.approx([1.0, 0.5])


def test_ts_condition(modes):
    args = (0.1, 0.2, 0.05, 1.0, 1.5)
    delta0 = ts_lhs(alpha_bars(modes, 0.01), *args)
    at_5ms = ts_condition(alpha_bars(modes, 0.005), *args, delta0)
    assert at_5ms.satisfied
    assert math.isnan(at_5ms.max_Ts)

    searched = ts_condition(alpha_bars(modes, 0.02), *args, delta0, modes=modes)
    assert not searched.satisfied
    assert searched.max_Ts == pytest.approx(0.01, rel=1e-2)

    # without uncertainty every Ts works
    nominal = ts_condition(alpha_bars(modes, 0.02), 0.0, 0.0, 0.0, 1.0, 1.0, 1e-6, modes=modes)
    assert nominal.satisfied
    assert nominal.max_Ts == math.inf
