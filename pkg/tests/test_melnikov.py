import math

import numpy as np
import pytest

from melnikov_lab.errors import DomainError, ResonanceMismatch
from melnikov_lab.experiments import (
    beam_F_obstructions, beam_J_numeric, duffing_obstruction, duffing_scan, rigid_body_table,
)
from melnikov_lab.melnikov import (
    MelnikovCurve, TimeSequence, anchored_trajectory, find_zeros, homoclinic_melnikov,
    homoclinic_trajectory, obstruction_homoclinic, obstruction_periodic,
    sequence_independence_check, subharmonic_melnikov,
)
from melnikov_lab.ode import PerturbedField, integrate
from melnikov_lab.systems.beam import BeamConfig, beam_J_closed_form
from melnikov_lab.systems.duffing import (
    DuffingConfig, duffing_field, duffing_period, duffing_state, hamiltonian, homoclinic_window,
    resonant_modulus,
)
from melnikov_lab.systems.rigidbody import preset

TAUS = np.linspace(0.0, 2.0 * math.pi, 17)


def rel_err(num, ref):
    return float(np.max(np.abs(np.asarray(num) - ref)) / np.max(np.abs(ref)))


@pytest.fixture(scope="module")
def hom_setup():
    cfg = DuffingConfig(a=1, beta=1.0, delta=1.0, omega=1.0)
    f = duffing_field(cfg)
    W = homoclinic_window(1e-9)
    hom = anchored_trajectory(f, lambda t: duffing_state(cfg, "hom+", None, t), -W, W)
    return cfg, f, W, hom


# ---------------------------------------------------------------- time sequences

def test_time_sequence_constructors():
    s = TimeSequence.uniform(2.0, 3)
    assert s.K == 3 and s.window(2) == (-4.0, 4.0)
    a = TimeSequence.angle_zeros(1.0, 2, target=math.pi / 3)
    assert np.allclose(np.diff(a.times), 2 * math.pi)
    assert math.isclose(a.times[a.origin_index], math.pi / 3)
    with pytest.raises(DomainError):
        TimeSequence(np.array([0.0, 1.0, 1.0]), 1)
    with pytest.raises(DomainError):
        s.window(4)


# ---------------------------------------------------------------- Duffing homoclinic

def test_homoclinic_matches_closed_form(hom_setup):
    cfg, f, W, hom = hom_setup
    for sign in (1, -1):
        scan = duffing_scan(cfg, "homoclinic", TAUS, sign=sign, workers=1)
        assert rel_err(scan.curve.values, scan.reference) < 1e-9
        # last-octave contribution, roughly exp(-W/2)
        assert np.all(scan.curve.tail_estimates < 1e-4)


def test_homoclinic_csch_form_differs(hom_setup):
    cfg = hom_setup[0]
    scan = duffing_scan(cfg, "homoclinic", TAUS, workers=1)
    # csch(pi/2) and sech(pi/2) differ by a factor tanh(pi/2)
    assert rel_err(scan.curve.values, scan.csch_form) > 1e-2


def test_unforced_damped_energy_loss_is_minus_four_thirds(hom_setup):
    _, _, W, hom = hom_setup
    cfg = DuffingConfig(a=1, beta=0.0, delta=1.0, omega=1.0)
    f = duffing_field(cfg)
    res = obstruction_homoclinic(f, hamiltonian(cfg), hom, TimeSequence.uniform(W / 4, 4), tol=1e-6)
    value, converged = res
    assert converged
    assert abs(value + 4.0 / 3.0) < 1e-9


def test_outward_integration_is_less_accurate_than_anchoring(hom_setup):
    cfg, f, W, hom = hom_setup
    out = homoclinic_trajectory(f, duffing_state(cfg, "hom+", None, 0.0), -W, W)
    ref = duffing_scan(cfg, "homoclinic", TAUS[:3], workers=1).reference
    e_out = rel_err(homoclinic_melnikov(f, out, TAUS[:3]).values, ref)
    e_anc = rel_err(homoclinic_melnikov(f, hom, TAUS[:3]).values, ref)
    assert e_anc < 1e-9 and e_anc < e_out


def test_homoclinic_obstruction_matches_melnikov(hom_setup):
    cfg = hom_setup[0]
    taus = TAUS[:3]
    vals, conv = duffing_obstruction(cfg, "homoclinic", taus)
    scan = duffing_scan(cfg, "homoclinic", taus, workers=1)
    assert np.all(conv)
    assert np.max(np.abs(vals - scan.curve.values)) < 1e-9


def test_zero_perturbation_gives_zero(hom_setup):
    _, _, W, hom = hom_setup
    cfg = DuffingConfig(a=1, beta=0.0, delta=0.0, omega=1.0)
    curve = homoclinic_melnikov(duffing_field(cfg), hom, TAUS)
    assert np.max(np.abs(curve.values)) < 1e-14
    assert find_zeros(curve).status == "none-on-grid"


def test_melnikov_is_periodic_in_tau(hom_setup):
    cfg, f, W, hom = hom_setup
    c = homoclinic_melnikov(f, hom, [0.4, 0.4 + 2 * math.pi])
    assert abs(c.values[0] - c.values[1]) < 1e-10


# ---------------------------------------------------------------- Duffing subharmonic

@pytest.mark.parametrize("m", [1, 3])
def test_subharmonic_matches_closed_form(m):
    cfg = DuffingConfig(a=1, beta=1.0, delta=1.0, omega=1.0)
    scan = duffing_scan(cfg, "subharmonic", TAUS, m=m, workers=1)
    assert rel_err(scan.curve.values, scan.reference) < 1e-9


def test_subharmonic_l2_is_constant():
    cfg = DuffingConfig(a=1, beta=1.0, delta=1.0, omega=1.0)
    scan = duffing_scan(cfg, "subharmonic", TAUS, m=3, l=2, workers=1)
    v = scan.curve.values
    assert np.ptp(v) < 1e-9 * np.max(np.abs(v))
    assert rel_err(v, scan.reference) < 1e-9


def test_subharmonic_obstruction_matches_melnikov():
    cfg = DuffingConfig(a=1, beta=1.0, delta=0.5, omega=1.0)
    taus = TAUS[:4]
    vals, _ = duffing_obstruction(cfg, "subharmonic", taus, m=3)
    scan = duffing_scan(cfg, "subharmonic", taus, m=3, workers=1)
    assert np.max(np.abs(vals - scan.curve.values)) < 1e-9 * np.max(np.abs(vals))


def test_resonance_mismatch_is_rejected():
    cfg = DuffingConfig(a=1, beta=1.0, delta=1.0, omega=1.0)
    f = duffing_field(cfg)
    k = resonant_modulus(cfg, "q+", 1, 1)
    T = duffing_period(cfg, "q+", k)
    with pytest.raises(ResonanceMismatch):
        subharmonic_melnikov(f, [1.0, 0.0], T * 1.01, 1, 1, TAUS)
    with pytest.raises(DomainError):
        subharmonic_melnikov(f, [1.0, 0.0], T, 2, 2, TAUS)


def test_single_run_orbit_agrees_for_moderate_modulus():
    cfg = DuffingConfig(a=1, beta=1.0, delta=1.0, omega=1.0)
    f = duffing_field(cfg)
    k = resonant_modulus(cfg, "q+", 1, 1)
    T = duffing_period(cfg, "q+", k)
    q0 = duffing_state(cfg, "q+", k, 0.0)[:2]
    a = subharmonic_melnikov(f, q0, T, 1, 1, TAUS)
    b = duffing_scan(cfg, "subharmonic", TAUS, m=1, workers=1)
    assert rel_err(a.values, b.reference) < 1e-7


# ---------------------------------------------------------------- zeros

def _subharmonic_zero_curve(delta):
    cfg = DuffingConfig(a=-1, beta=1.0, delta=delta, omega=2.0)
    return cfg, duffing_scan(cfg, "subharmonic", np.linspace(0.0, cfg.T, 33), workers=1)


def test_find_zeros_undamped_gives_zeros_at_half_periods():
    cfg, scan = _subharmonic_zero_curve(0.0)
    rep = find_zeros(scan.curve)
    params = sorted(z.param for z in rep.simple)
    # sin(omega tau) vanishes at 0, pi/omega and 2 pi/omega on [0, T]
    assert np.allclose(params, [0.0, math.pi / 2, math.pi], atol=1e-9)
    assert all(z.classification == "simple" for z in rep.zeros)


def test_find_zeros_strong_damping_gives_none():
    cfg, scan = _subharmonic_zero_curve(5.0)
    rep = find_zeros(scan.curve)
    assert rep.status == "none-on-grid" and rep.zeros == []


def test_find_zeros_constant_curve_gives_none():
    x = np.linspace(0, 1, 5)
    c = MelnikovCurve(x, ("tau",), np.full(5, 2.0), np.ones(5, bool), np.zeros(5, int),
                      np.zeros(5), evaluator=lambda t: 2.0)
    assert find_zeros(c).status == "none-on-grid"


def test_find_zeros_flags_touching_zero_as_degenerate():
    x = np.linspace(-1, 1, 9)
    fn = lambda t: (t - 0.25) ** 2  # noqa: E731
    c = MelnikovCurve(x, ("tau",), fn(x), np.ones(9, bool), np.zeros(9, int), np.zeros(9),
                      evaluator=fn)
    rep = find_zeros(c)
    assert [z.classification for z in rep.zeros] == ["degenerate"]


# ---------------------------------------------------------------- sequence independence

def test_sequence_independence_on_absolutely_convergent_integral(hom_setup):
    _, _, W, hom = hom_setup
    cfg = DuffingConfig(a=1, beta=0.0, delta=1.0, omega=1.0)
    f = duffing_field(cfg)
    H = hamiltonian(cfg)

    def evaluate(seq):
        return obstruction_homoclinic(f, H, hom, seq, tol=1e-6)

    rep = sequence_independence_check(evaluate, TimeSequence.uniform(W / 4, 4),
                                      TimeSequence.uniform(W / 3, 3), 1e-6)
    assert rep.passed and rep.difference < 1e-9


def test_conditionally_convergent_integral_depends_on_sequence():
    # int sin(t) dt over [-T, T] is 0 on symmetric windows but not otherwise
    f = PerturbedField(2, lambda x: np.array([1.0, 0.0]), lambda x: np.array([0.0, math.sin(x[0])]))
    orb = integrate(f, [-20.0, 0.0], -20.0, 20.0)

    class F:
        @staticmethod
        def gradient(x):
            return np.array([0.0, 1.0])

    seq_sym = TimeSequence(np.array([-3.0, 0.0, 3.0]) * math.pi, 1)
    seq_off = TimeSequence(np.array([-math.pi / 2, 0.0, math.pi]), 1)
    a = obstruction_homoclinic(f, F, orb, seq_sym).value
    b = obstruction_homoclinic(f, F, orb, seq_off).value
    assert abs(a) < 1e-9 and abs(b - 1.0) < 1e-9


# ---------------------------------------------------------------- rigid body and beam

def test_rigid_body_zero_mean_forcing_gives_zero():
    rows = rigid_body_table(preset("zero-mean"))
    assert max(abs(r["value"]) for r in rows) < 1e-9


def test_rigid_body_nonzero_mean_matches_oracle():
    for name in ("one-plus-sin", "cos-squared"):
        for integral in ("F", "F~"):
            for r in rigid_body_table(preset(name), c=0.7, integral=integral):
                assert abs(r["value"] - r["oracle"]) < 1e-8 * abs(r["oracle"])


def test_rigid_body_periodic_orbit_identity():
    cfg = preset("one-plus-sin")
    from melnikov_lab.systems.rigidbody import equilibrium_state, rigid_body_field, rigid_body_integrals
    f = rigid_body_field(cfg)
    F, _ = rigid_body_integrals(cfg)
    orb = integrate(f.unperturbed(), equilibrium_state(cfg, 1, 1, 1.0), 0.0, 1e-3)
    assert math.isclose(obstruction_periodic(f, F, orb, cfg.T), math.sqrt(2.0) * 2 * math.pi,
                        rel_tol=1e-8)


def test_beam_first_integral_obstructions_vanish():
    assert max(abs(r["value"]) for r in beam_F_obstructions(BeamConfig())) < 1e-9


@pytest.mark.parametrize("case", [(2, 3, 1), (4, 5, 2), (1, 3, 1), (2, 4, 1), (3, 5, 2)])
def test_beam_J_matches_closed_form(case):
    cfg = BeamConfig(omega1=1.0, omega2=1.7, beta1=0.8, beta2=1.3)
    j, k, ell = case
    num = beam_J_numeric(cfg, j, k, ell, c=0.9)
    assert abs(num - beam_J_closed_form(cfg, j, k, ell, 0.9)) < 1e-9


def test_pendula_cvf_homoclinic_matches_cotangent_lift():
    """J along a separatrix with Z the Hamiltonian field of F2 and omega = dF2
    equals the obstruction of h_Z = <p, Z> on the cotangent lift."""
    from scipy.integrate import quad

    from melnikov_lab.experiments import lifted_integral
    from melnikov_lab.melnikov import TimeSequence, anchored_trajectory, obstruction_cvf_homoclinic
    from melnikov_lab.systems.pendula import PendulaConfig, pendula_field, pendula_homoclinic
    from melnikov_lab.variational import CommutingField, cotangent_lift

    cfg = PendulaConfig(omega0=1.0)
    f = pendula_field(cfg)
    lift = cotangent_lift(f)

    def state(t):
        return pendula_homoclinic(cfg, (1, 1), 0.4, t, 1.0, 0.3)

    def dF2(x):
        return np.array([math.sin(x[0]), 0.0, x[2], 0.0, 0.0, 0.0])

    Z = CommutingField(lambda x: np.array([x[2], 0.0, -math.sin(x[0]), 0.0, 0.0, 0.0]),
                       lambda x: np.array([[0, 0, 1, 0, 0, 0], [0] * 6,
                                           [-math.cos(x[0]), 0, 0, 0, 0, 0]] + [[0] * 6] * 3,
                                          dtype=float), "X_F2")
    hZ = lifted_integral(Z, 6)
    seq = TimeSequence.uniform(2.0, 5)
    lo, hi = seq.span
    orb = anchored_trajectory(f, state, lo - 1e-9, hi + 1e-9, tol=1e-12)
    J, conv = obstruction_cvf_homoclinic(f, Z, lambda t: dF2(orb(t)), orb, seq, tol=1e-6)

    def lifted(t):
        x = state(t)
        z = np.concatenate([x, dF2(x)])
        return float(hZ.gradient(z) @ lift.X1(z))

    ref = sum(quad(lifted, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
              for a, b in zip(np.linspace(lo, hi, 9)[:-1], np.linspace(lo, hi, 9)[1:]))
    assert conv
    assert abs(J) > 1e-3
    assert J == pytest.approx(ref, abs=1e-7)
