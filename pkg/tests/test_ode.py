"""Tests for the integrator, dense output, crossings and quadrature."""

import math

import numpy as np
import pytest

from melnikov_lab.errors import DegenerateCrossing, NonFinite, StepFailure
from melnikov_lab.ode import (
    PerturbedField,
    Section,
    concatenate,
    cumulative_integral,
    detect_crossings,
    fd_jacobian,
    integrate,
    quadrature_along,
)

ZERO2 = lambda x: np.zeros(2)  # noqa: E731


def oscillator():
    return PerturbedField(2, lambda x: np.array([x[1], -x[0]]), ZERO2,
                          jac0=lambda x: np.array([[0.0, 1.0], [-1.0, 0.0]]))


def duffing_planar(delta=0.0):
    # a = 1, no forcing; X1 = (0, -delta x2)
    return PerturbedField(
        2,
        lambda x: np.array([x[1], x[0] - x[0] ** 3]),
        lambda x: np.array([0.0, -delta * x[1]]),
    )


def test_oscillator_closes_after_one_period():
    tr = integrate(oscillator(), [1.0, 0.0], 0.0, 2 * math.pi, 1e-10)
    assert np.max(np.abs(tr.states[-1] - [1.0, 0.0])) < 1e-8
    assert tr.t_min == 0.0 and tr.t_max == 2 * math.pi


def test_duffing_homoclinic_matches_closed_form():
    tr = integrate(duffing_planar(), [math.sqrt(2), 0.0], 0.0, 10.0, 1e-12)
    t = np.linspace(0.0, 10.0, 41)
    sech = 1 / np.cosh(t)
    exact = np.stack([math.sqrt(2) * sech, -math.sqrt(2) * sech * np.tanh(t)], axis=1)
    assert np.max(np.abs(tr(t) - exact)) < 1e-7


def test_empty_span_gives_single_sample():
    tr = integrate(oscillator(), [0.3, 0.1], 2.0, 2.0, 1e-10)
    assert tr.times.tolist() == [2.0]
    np.testing.assert_array_equal(tr(2.0), [0.3, 0.1])


def test_dense_output_reproduces_nodes_exactly_and_is_accurate_between():
    tr = integrate(oscillator(), [1.0, 0.0], 0.0, 20.0, 1e-10)
    np.testing.assert_array_equal(tr(tr.times), tr.states)
    mids = 0.5 * (tr.times[1:] + tr.times[:-1])
    exact = np.stack([np.cos(mids), -np.sin(mids)], axis=1)
    assert np.max(np.abs(tr(mids) - exact)) < 1e-8
    der = tr.derivative(mids)
    assert np.max(np.abs(der - np.stack([-np.sin(mids), -np.cos(mids)], axis=1))) < 1e-7


def test_backward_integration_and_reversibility():
    f = duffing_planar()
    x0 = np.array([0.4, 0.3])
    fwd = integrate(f, x0, 0.0, 7.0, 1e-10)
    back = integrate(f, fwd.states[-1], 7.0, 0.0, 1e-10)
    assert back.t_min == 0.0 and back.t_max == 7.0
    assert np.max(np.abs(back.states[0] - x0)) < 10 * 1e-10 * 7.0


def test_rk4_cross_check_agrees_with_adaptive():
    f = duffing_planar()
    a = integrate(f, [0.4, 0.3], 0.0, 5.0, 1e-11)
    b = integrate(f, [0.4, 0.3], 0.0, 5.0, 1e-11, method="rk4", h=2e-3)
    t = np.linspace(0, 5, 23)
    assert np.max(np.abs(a(t) - b(t))) < 1e-9


def test_nonfinite_rhs_raises():
    f = PerturbedField(1, lambda x: np.array([np.nan]), lambda x: np.zeros(1))
    with pytest.raises(NonFinite):
        integrate(f, [1.0], 0.0, 1.0, 1e-8)


def test_blow_up_raises():
    f = PerturbedField(1, lambda x: x ** 2, lambda x: np.zeros(1))
    with pytest.raises((StepFailure, NonFinite)):
        integrate(f, [1.0], 0.0, 2.0, 1e-10)


def test_crossings_harmonic_oscillator():
    sec = Section(lambda x: x[0], "both")
    tr = detect_crossings(oscillator(), [1.0, 0.0], sec, 0.0, 2 * math.pi, 1e-10)
    np.testing.assert_allclose(tr.event_times, [math.pi / 2, 3 * math.pi / 2], atol=1e-9)
    assert tr.event_directions == [-1, 1]
    for t, x in tr.events:
        assert abs(x[0]) < 1e-12


def test_crossing_direction_filter():
    up = Section(lambda x: x[0], +1)
    tr = detect_crossings(oscillator(), [1.0, 0.0], up, 0.0, 2 * math.pi, 1e-10)
    np.testing.assert_allclose(tr.event_times, [3 * math.pi / 2], atol=1e-9)


def test_crossings_of_uniform_angle_flow():
    omega0, theta0 = 1.3, 0.4
    f = PerturbedField(1, lambda x: np.array([omega0]), lambda x: np.zeros(1))
    sec = Section(lambda x: math.sin(x[0]), +1)
    tr = detect_crossings(f, [theta0], sec, 0.0, 30.0, 1e-10)
    expected = [(2 * math.pi * j - theta0) / omega0 for j in range(1, 7)]
    expected = [t for t in expected if t <= 30.0]
    np.testing.assert_allclose(tr.event_times, expected, atol=1e-10)


def test_constant_level_gives_no_events():
    tr = detect_crossings(oscillator(), [1.0, 0.0], Section(lambda x: 1.0), 0.0, 10.0, 1e-10)
    assert tr.events == []


def test_event_count_over_many_periods():
    sec = Section(lambda x: x[0], "both")
    tr = detect_crossings(oscillator(), [1.0, 0.0], sec, 0.0, 100 * 2 * math.pi, 1e-10)
    # x1 = cos t vanishes twice per period
    assert len(tr.events) == 200
    assert np.all(np.diff(tr.event_times) > 0)


def test_start_point_on_section_counts_once():
    sec = Section(lambda x: x[1], "both")
    tr = detect_crossings(oscillator(), [1.0, 0.0], sec, 0.0, 1.5 * math.pi, 1e-10)
    np.testing.assert_allclose(tr.event_times, [0.0, math.pi], atol=1e-10)


def test_tangential_crossing_is_rejected():
    # x1**3 changes sign at t = pi/2 but its time derivative vanishes there
    sec = Section(lambda x: x[0] ** 3, "both")
    with pytest.raises(DegenerateCrossing):
        detect_crossings(oscillator(), [1.0, 0.0], sec, 0.0, 3.0, 1e-10)


def test_quadrature_examples():
    assert quadrature_along(oscillator(), [1.0, 0.0], lambda t, x: 1.0, 0.0, 5.0, 1e-10) == \
        pytest.approx(5.0, abs=1e-10)
    val = quadrature_along(oscillator(), [1.0, 0.0], lambda t, x: x[0] ** 2, 0.0, 2 * math.pi, 1e-10)
    assert abs(val - math.pi) < 1e-8


def test_quadrature_of_damping_term_along_homoclinic():
    f = duffing_planar()
    # dH(X1) with delta = 1, beta = 0 is x2 * (-x2)
    fwd = quadrature_along(f, [math.sqrt(2), 0.0], lambda t, x: -x[1] ** 2, 0.0, 20.0, 1e-12)
    back = quadrature_along(f, [math.sqrt(2), 0.0], lambda t, x: -x[1] ** 2, 0.0, -20.0, 1e-12)
    assert abs((fwd - back) - (-4.0 / 3.0)) < 1e-5


def test_quadrature_of_exact_derivative():
    f = duffing_planar()
    H = lambda x: -0.5 * x[0] ** 2 + 0.25 * x[0] ** 4 + 0.5 * x[1] ** 2  # noqa: E731
    G = lambda x: x[0] * x[1]  # noqa: E731
    dG = lambda t, x: x[1] * x[1] + x[0] * (x[0] - x[0] ** 3)  # noqa: E731
    x0 = np.array([0.7, 0.2])
    tr = integrate(f, x0, 0.0, 6.0, 1e-10)
    val = quadrature_along(f, x0, dG, 0.0, 6.0, 1e-10)
    assert abs(val - (G(tr.states[-1]) - G(x0))) < 10 * 1e-10
    assert abs(H(tr.states[-1]) - H(x0)) < 1e-9


def test_vector_integrand():
    val = quadrature_along(oscillator(), [1.0, 0.0], lambda t, x: np.array([1.0, x[0] ** 2]),
                           0.0, 2 * math.pi, 1e-10)
    np.testing.assert_allclose(val, [2 * math.pi, math.pi], atol=1e-8)


def test_stitched_trajectory_and_cumulative_integral():
    f = duffing_planar()
    W = 12.0
    s2 = math.sqrt(2)

    def qh(t):
        return np.array([s2 / math.cosh(t), -s2 * math.tanh(t) / math.cosh(t)])

    # absolute tolerance scaled to the distance from the saddle at the ends
    atol = 1e-12 * np.abs(qh(W)).max()
    left = integrate(f, qh(-W), -W, 0.0, 1e-12, atol=atol)
    right = integrate(f, qh(W), W, 0.0, 1e-12, atol=atol)
    hom = concatenate([left, right])
    assert hom.t_min == -W and hom.t_max == W
    t = np.linspace(-W, W, 49)
    exact = np.array([qh(s) for s in t])
    assert np.max(np.abs(hom(t) - exact)) < 1e-9
    C = cumulative_integral(hom, lambda t, x: -x[1] ** 2)
    assert abs(C.between(-W, W) + 4 / 3) < 1e-8
    # int_0^t of -2 sech^2 tanh^2 is -(2/3) tanh^3
    for a in (-5.0, 0.0, 3.0):
        assert abs(C.between(0.0, a) + 2 / 3 * math.tanh(a) ** 3) < 1e-9


def test_fd_jacobian_matches_analytic():
    f = duffing_planar()
    x = np.array([0.3, -1.2])
    J = fd_jacobian(f.X0, x)
    np.testing.assert_allclose(J, [[0, 1], [1 - 3 * 0.09, 0]], atol=1e-8)
    np.testing.assert_allclose(f.jac0(x), J)


def test_field_validation():
    with pytest.raises(ValueError):
        PerturbedField(2, ZERO2, ZERO2, period=-1.0)
    f = duffing_planar(delta=0.5).with_epsilon(0.1)
    np.testing.assert_allclose(f.rhs([1.0, 2.0]), [2.0, 0.0 - 0.1 * 0.5 * 2.0])
