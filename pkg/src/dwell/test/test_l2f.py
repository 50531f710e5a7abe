import math
from dataclasses import replace

import numpy as np
import pytest

from ..controller import FilterRealization, L1Config
from ..exceptions import DimensionError, EnvelopeViolation, ScenarioError
from ..l2f.aircraft import (AircraftParams, AircraftState, aero_moments,
                            aircraft_deriv, check_envelope, full_deriv,
                            moment_coefficients, rate_derivative)
from ..l2f.flight import (DestabilizeConfig, FlightScenario, Guidance,
                          LearnerSettings, PublishSettings, ThrottleLoop,
                          destabilize_feedback, effective_static_margin,
                          flight_observables, identify_second_order,
                          model_publish,
                          pitch_gain_for_static_margin, roll_neutral_gain,
                          roll_subsidence, run_flight, second_order_step)
from ..l2f.learner import (LearnedModel, batch_least_squares,
                           observed_coefficients, rls_update)
from ..l2f.ndi import (NdiGains, allocate, gains_from_model,
                       natural_frequencies, ndi_inner, ndi_inner_augmented,
                       ndi_middle, ndi_outer, pitch_for_path_angle)
from ..l2f.pti import PtiConfig, pti_multisine, pti_signals
from ..model import CommandSignal
from ..sim import Schedule

QBAR = 500.0


@pytest.fixture
def params():
    return AircraftParams()


@pytest.fixture
def trim(params):
    return AircraftState.trimmed(params, QBAR)


def test_trim(params, trim):
    assert trim.V == pytest.approx(math.sqrt(2.0 * QBAR / 1.225))
    assert trim.alpha == pytest.approx(0.05)
    assert trim.theta == pytest.approx(trim.alpha)
    np.testing.assert_allclose(moment_coefficients(trim, np.zeros(3), np.zeros(2), params), 0.0, atol=1e-12)


def test_envelope():
    check_envelope(AircraftState(V=20.0, phi=1.0, theta=-1.0))
    with pytest.raises(EnvelopeViolation):
        check_envelope(AircraftState(V=20.0, phi=math.pi / 2))
    with pytest.raises(EnvelopeViolation):
        check_envelope(AircraftState(V=20.0, theta=-math.pi / 2))
    with pytest.raises(EnvelopeViolation):
        check_envelope(AircraftState(V=0.0))


def test_aircraft_deriv(params, trim):
    np.testing.assert_allclose(aircraft_deriv(trim, np.zeros(3), params).to_vector(), 0.0, atol=1e-12)

    pitching = aircraft_deriv(trim.with_omega([0.0, 0.1, 0.0]), [0.0, 1.2, 0.0], params)
    assert pitching.alpha == pytest.approx(0.1)
    assert pitching.theta == pytest.approx(0.1)
    assert pitching.q == pytest.approx(1.0)

    banked = aircraft_deriv(replace(trim, phi=0.2), np.zeros(3), params)
    assert banked.chi == pytest.approx(params.g / trim.V * math.tan(0.2))
    assert banked.beta == pytest.approx(params.g / trim.V * math.sin(0.2))


def test_velocity_hold(params, trim):
    loop = ThrottleLoop.trimmed(params, trim)
    assert loop.trim_thrust > 0
    derivative = full_deriv(trim, np.zeros(3), params, loop.thrust(trim.V, 0.0))
    assert derivative.V == pytest.approx(0.0, abs=1e-9)
    assert loop.thrust(trim.V - 1.0, 0.0) > loop.trim_thrust
    assert loop.integral_rate(trim.V - 1.0) == pytest.approx(1.0)


def test_destabilize_feedback(trim):
    config = DestabilizeConfig(2.0, 0.5, alpha0=0.05)
    hidden = destabilize_feedback(replace(trim, alpha=0.15, p=0.2), config)
    np.testing.assert_allclose(hidden, [0.2, 0.1])


def test_static_margin_calibration(params):
    assert effective_static_margin(params, 0.0) == pytest.approx(0.8 / 4.5)
    for margin in (-0.1, -0.164, 0.05):
        gain = pitch_gain_for_static_margin(params, margin)
        assert effective_static_margin(params, gain) == pytest.approx(margin)


def test_roll_neutral(params, trim):
    assert roll_subsidence(params, trim.V, 0.0) < 0
    gain = roll_neutral_gain(params, trim.V)
    assert roll_subsidence(params, trim.V, gain) == pytest.approx(0.0, abs=1e-12)


def test_pitch_for_path_angle(trim):
    theta, clamped = pitch_for_path_angle(0.1, trim)
    assert not clamped
    assert theta == pytest.approx(0.1 + trim.alpha)

    sideslip = AircraftState(V=trim.V, alpha=trim.alpha, beta=0.5)
    _, clamped = pitch_for_path_angle(1.2, sideslip)
    assert clamped


def test_pitch_for_path_angle_banked(trim):
    state = AircraftState(V=trim.V, alpha=0.08, beta=0.05, phi=0.4, theta=0.1)
    theta, clamped = pitch_for_path_angle(0.15, state)
    assert not clamped
    a1 = math.cos(state.alpha) * math.cos(state.beta)
    a2 = math.sin(state.phi) * math.sin(state.beta) + math.cos(state.phi) * math.sin(state.alpha) * math.cos(state.beta)
    assert a1 * math.sin(theta) - a2 * math.cos(theta) == pytest.approx(math.sin(0.15), abs=1e-12)
    # the small angle form gamma + alpha is off once banked with sideslip
    assert abs(theta - (0.15 + state.alpha)) > 1e-3


def test_guidance_and_attitude_loops(trim):
    phi_cmd, theta_cmd, clamped = ndi_outer(0.1, 0.0, trim, K_chi=0.5)
    assert not clamped
    assert phi_cmd == pytest.approx(math.atan(trim.V / 9.81 * 0.05))
    assert theta_cmd == pytest.approx(trim.alpha)

    gains = NdiGains.from_frequencies([2.0, 4.0, 6.0], zeta=0.8)
    omega_cmd = ndi_middle(phi_cmd, theta_cmd + 0.1, 0.0, trim, gains)
    np.testing.assert_allclose(omega_cmd, [gains.K_phi * phi_cmd, gains.K_theta * 0.1, 0.0], atol=1e-12)
    with pytest.raises(EnvelopeViolation):
        ndi_middle(0.0, 0.0, 0.0, replace(trim, phi=math.radians(89.99)), gains)


def test_gains(params):
    gains = NdiGains.from_frequencies([2.0, 4.0, 6.0], zeta=0.8)
    np.testing.assert_allclose(np.diag(gains.K_omega), [3.2, 6.4, 9.6])
    assert gains.K_phi == pytest.approx(1.25)
    scaled = NdiGains.from_frequencies([2.2, 4.4, 6.6], zeta=0.8)
    assert gains.relative_change(scaled) == pytest.approx(0.1)

    frequencies = natural_frequencies((0.15, -0.8, 0.06), QBAR, params)
    assert frequencies[1] == pytest.approx(math.sqrt(50.0))
    floored = gains_from_model((0.15, -0.8, 1e-6), QBAR, params)
    assert floored.flags == ("yaw",)
    assert floored.omega_n[2] == pytest.approx(0.5)
    with pytest.raises(DimensionError):
        NdiGains(0.5, 1.0, 1.0, 1.0, [1.0, -1.0, 1.0], [1.0, 1.0, 1.0])


def test_inner_loop_forms_agree(params):
    rng = np.random.default_rng(2)
    K_omega = np.diag([3.0, 5.0, 4.0])
    for _ in range(3):
        omega_cmd, omega, M_hat = rng.normal(size=3), rng.normal(size=3), rng.normal(size=3)
        np.testing.assert_allclose(
            ndi_inner_augmented(K_omega @ omega_cmd, omega, M_hat, params.inertia, K_omega),
            ndi_inner(omega_cmd, omega, M_hat, params.inertia, K_omega),
        )


def test_allocate_inverts_effectiveness(params):
    derivatives = params.aero.regression_matrix()[:, 6:9]
    M_delta = np.array([2.0, -5.0, 1.0])
    surfaces = allocate(M_delta, QBAR, params, derivatives)
    moments = QBAR * params.S * params.lengths * (derivatives @ surfaces)
    np.testing.assert_allclose(moments, M_delta)


def test_pti_multisine():
    config = PtiConfig.interleaved(10.0, 8, 0.02)
    assert config.total == 24
    assert config.harmonics["delta_a"][:3] == (1, 4, 7)
    times = np.linspace(0.0, 10.0, 4000, endpoint=False)
    signals = pti_signals(times, config)
    np.testing.assert_allclose(np.sqrt(np.mean(signals ** 2, axis=0)), 0.02, rtol=1e-6)
    np.testing.assert_allclose(np.mean(signals, axis=0), 0.0, atol=1e-12)
    # distinct harmonics are orthogonal over a base period
    assert abs(np.mean(signals[:, 0] * signals[:, 1])) < 1e-10

    delayed = PtiConfig(10.0, config.harmonics, config.amplitudes, start=5.0)
    np.testing.assert_array_equal(pti_multisine(4.0, delayed), np.zeros(3))


def test_pti_rejects_bad_designs():
    with pytest.raises(ScenarioError):
        PtiConfig(10.0, {"delta_a": (1, 2), "delta_e": (2,)}, {"delta_a": 0.1, "delta_e": 0.1})
    with pytest.raises(ScenarioError):
        PtiConfig(10.0, {"flaps": (1,)}, {"flaps": 0.1})
    with pytest.raises(ScenarioError):
        PtiConfig(0.0, {}, {})


def test_rls_matches_batch():
    rng = np.random.default_rng(4)
    Phi = rng.normal(size=(60, 9))
    weights = rng.normal(size=9)
    y = Phi @ weights + 0.01 * rng.normal(size=60)
    model = LearnedModel.empty(p0=1e6)
    for row, value in zip(Phi, y):
        model = rls_update(model, row, value, axis=1)
    np.testing.assert_allclose(model.coefficients[1], batch_least_squares(Phi, y, p0=1e6), atol=1e-6)
    np.testing.assert_array_equal(model.coefficients[0], np.zeros(9))
    assert model.samples == 60
    assert np.all(np.linalg.eigvalsh(model.covariance[1]) > 0)


def test_rls_skips_non_finite(caplog):
    model = LearnedModel.empty()
    assert rls_update(model, np.ones(9), float("nan"), axis=0) is model
    assert "Non finite learner sample" in caplog.text


def test_observed_coefficients_recover_truth(params, trim):
    state = trim.with_omega([0.1, -0.2, 0.05])
    surfaces = np.array([0.02, -0.01, 0.03])
    moments = aero_moments(state, surfaces, np.zeros(2), params)
    omega_dot = rate_derivative(state.omega, moments, params)
    np.testing.assert_allclose(observed_coefficients(state, omega_dot, params),
                               moment_coefficients(state, surfaces, np.zeros(2), params))


def test_moment_estimate_at_trim(params, trim):
    model = LearnedModel.from_truth(params)
    np.testing.assert_allclose(model.moment_estimate(trim, params), 0.0, atol=1e-9)
    assert not model.trusted(1e-2)


def _current_gains(params):
    return gains_from_model(LearnedModel.from_truth(params).gain_coefficients, QBAR, params)


def test_publish_misaligned(params):
    with pytest.raises(DimensionError):
        model_publish(LearnedModel.from_truth(params), 0.105, _current_gains(params), 0.0, QBAR, params, 0.01)


def test_publish_untrusted_keeps_gains(params):
    current = _current_gains(params)
    event = model_publish(LearnedModel.from_truth(params), 1.0, current, 0.0, QBAR, params, 0.01)
    assert not event.switched
    assert event.gains is current


def test_publish_switches_after_dwell(params):
    current = _current_gains(params)
    coefficients = params.aero.regression_matrix()
    coefficients[1, 1] = -1.6
    model = LearnedModel.with_prior(coefficients, p0=1e-6)
    assert model.trusted(1e-2)

    held = model_publish(model, 1.0, current, 0.0, QBAR, params, 0.01, PublishSettings(tau_d=5.0))
    assert not held.switched
    assert held.tau_d == 5.0
    np.testing.assert_array_equal(held.gains.K_omega, current.K_omega)
    assert held.change == pytest.approx(math.sqrt(2.0) - 1.0)

    event = model_publish(model, 6.0, current, 0.0, QBAR, params, 0.01, PublishSettings(tau_d=5.0))
    assert event.switched
    assert event.gains.K_omega[1, 1] == pytest.approx(math.sqrt(2.0) * current.K_omega[1, 1])

    same = model_publish(LearnedModel.from_truth(params, p0=1e-6), 1.0, current, 0.0, QBAR, params, 0.01)
    assert not same.switched
    assert same.change == pytest.approx(0.0)


def test_identify_second_order():
    t = np.linspace(0.0, 3.0, 300)
    response = 2.0 * second_order_step(t, 4.0, 0.6)
    omega_n, zeta = identify_second_order(t, response, 2.0)
    assert omega_n == pytest.approx(4.0, rel=1e-4)
    assert zeta == pytest.approx(0.6, rel=1e-4)


def _flight(params, trim, horizon, **kwargs):
    return FlightScenario(params=params, initial=trim, schedule=Schedule(0.001, 0.01, horizon), **kwargs)


def test_nominal_flight_holds_trim(params, trim):
    controller = L1Config(0.01, FilterRealization.constant(20.0, 3))
    trace = run_flight(_flight(params, trim, 0.5, controller=controller))
    np.testing.assert_allclose(trace.column("theta"), trim.theta, atol=1e-9)
    np.testing.assert_allclose(trace.block("eta1"), 0.0, atol=1e-9)
    values = flight_observables(trace)
    assert values["publishes"] == 2
    assert values["switches"] == 0
    assert values["duration"] == pytest.approx(0.5)


def test_full_truth_model_holds_trim(params, trim):
    trace = run_flight(_flight(params, trim, 0.5, truth_model="full"))
    np.testing.assert_allclose(trace.column("V"), trim.V, atol=1e-3)
    np.testing.assert_allclose(trace.column("gamma"), 0.0, atol=1e-3)


def test_unstable_baseline_leaves_envelope(params, trim):
    gain = pitch_gain_for_static_margin(params, -2.0)
    doublet = CommandSignal("doublet", [0.0, 0.05], start=0.1, width=0.2)
    scenario = _flight(params, trim, 2.0, guidance=Guidance("attitude", doublet),
                       destabilize=DestabilizeConfig(gain, 0.0, trim.alpha))
    with pytest.raises(EnvelopeViolation) as info:
        run_flight(scenario)
    assert info.value.exit_code == 2
    assert 0 < len(info.value.trace) < 2001


def test_flight_scenario_checks(params, trim):
    with pytest.raises(DimensionError):
        _flight(params, trim, 1.0, truth_model="exact")
    with pytest.raises(DimensionError):
        _flight(params, trim, 1.0, controller=L1Config(0.01, FilterRealization.constant(20.0, 1)))
    with pytest.raises(DimensionError):
        Guidance("roll")


def test_pitch_step_matches_design(params, trim):
    guidance = Guidance("attitude", CommandSignal("constant", [0.0, 0.05]))
    scenario = _flight(params, trim, 2.0, guidance=guidance, learner=LearnerSettings(enabled=False))
    trace = run_flight(scenario)
    design = gains_from_model(LearnedModel.from_truth(params).gain_coefficients, params.qbar(trim.V), params)
    omega_n, zeta = identify_second_order(trace.column("t"), trace.column("theta") - trim.theta, 0.05,
                                          guess=(design.omega_n[1], 0.7))
    assert omega_n == pytest.approx(design.omega_n[1], rel=0.1)
    assert zeta == pytest.approx(0.8, abs=0.1)


def test_empty_prior_learns_the_airframe(params, trim):
    scenario = _flight(params, trim, 10.0, pti=PtiConfig.interleaved(10.0, 8, 0.02),
                       learner=LearnerSettings(prior="empty", p0=1e9))
    last = run_flight(scenario).last
    aero = params.aero
    assert last["Cl_da_learned"] == pytest.approx(aero.Cl_da, rel=1e-4)
    assert last["Cm_alpha_learned"] == pytest.approx(aero.Cm_alpha, rel=1e-4)
    assert last["Cn_beta_learned"] == pytest.approx(aero.Cn_beta, rel=1e-4)


def test_empty_prior_flies_on_the_airframe_model(params, trim):
    scenario = _flight(params, trim, 0.5, learner=LearnerSettings(prior="empty"))
    assert np.all(scenario.initial_model().gain_coefficients == 0.0)
    trace = run_flight(scenario)
    np.testing.assert_allclose(trace.column("theta"), trim.theta, atol=1e-9)
    assert trace.column("Cm_alpha")[0] == pytest.approx(params.aero.Cm_alpha)


def test_adaptation_recovers_destabilized_pitch(params, trim):
    doublet = CommandSignal("doublet", [0.0, 0.05], start=0.5, width=0.5)
    scenario = _flight(params, trim, 10.0, guidance=Guidance("attitude", doublet),
                       destabilize=DestabilizeConfig(pitch_gain_for_static_margin(params, -0.164), 0.0, trim.alpha),
                       learner=LearnerSettings(enabled=False))
    try:
        baseline = run_flight(scenario)
    except EnvelopeViolation as exc:
        baseline = exc.trace
    adaptive = flight_observables(run_flight(replace(scenario, controller=L1Config(
        0.01, FilterRealization.constant(20.0, 3)))))
    assert flight_observables(baseline)["pitch_excursion"] >= 3.0 * adaptive["pitch_excursion"]
    assert adaptive["eta1_rms_last"] <= 0.5 * adaptive["eta1_rms_first"]
