import json
import math
import warnings

import numpy as np
import pytest

from melnikov_lab.errors import NewtonDiverged, SingularJacobianWarning
from melnikov_lab.experiments import duffing_drift_slope, duffing_persistence
from melnikov_lab.ode import PerturbedField
from melnikov_lab.systems.duffing import (
    DuffingConfig, duffing_field, duffing_state, hamiltonian, resonant_modulus, subharmonic_J,
)
from melnikov_lab.systems.rigidbody import (
    equilibrium_state, preset, rigid_body_field, rigid_body_integrals,
    rigid_body_obstruction_oracle,
)
from melnikov_lab.verify import drift_slope, integral_drift, persistence_scan, shoot_periodic


def soft_config():
    """a = -1 at omega = 2 with damping set so that M^{1/1} has two simple zeros."""
    base = DuffingConfig(a=-1, beta=1.0, delta=1.0, omega=2.0)
    k = resonant_modulus(base, "gamma", 1, 1)
    J1, J2 = subharmonic_J(base, "gamma", k, 1, 1)
    return DuffingConfig(a=-1, beta=1.0, delta=0.5 * J2 / J1, omega=2.0), k


def test_unperturbed_orbit_converges_without_iterations():
    cfg, k = soft_config()
    seed = duffing_state(cfg, "gamma", k, 0.0, 0.3)
    res = shoot_periodic(duffing_field(cfg), seed, cfg.T)
    assert res.converged and res.newton_iters == 0
    assert res.distance_to_seed < 1e-12


def test_persistence_from_simple_zero():
    cfg, _ = soft_config()
    eps = 1e-3
    out = duffing_persistence(cfg, eps)
    assert len(out["zeros"]) == 2
    for res in out["results"]:
        assert res.converged
        assert res.distance_to_seed < out["radius"]
        assert res.residual < 1e-9


def test_shooting_result_serializes():
    cfg, k = soft_config()
    res = shoot_periodic(duffing_field(cfg), duffing_state(cfg, "gamma", k, 0.0), cfg.T)
    d = json.loads(res.to_json())
    assert set(d) >= {"converged", "residual", "newton_iters", "distance_to_seed"}
    assert d["converged"] is True


def test_period_must_be_multiple_of_forcing_period():
    cfg, k = soft_config()
    with pytest.raises(ValueError):
        shoot_periodic(duffing_field(cfg, 1e-3), duffing_state(cfg, "gamma", k, 0.0), 1.3)


def test_neutral_family_warns_and_uses_truncated_step():
    # shear flow x' = y, y' = eps cos(theta): every (x, 0) closes up, so
    # DP - I has an exact null direction along x
    def x0(x):
        return np.array([x[1], 0.0, 1.0])

    def x1(x):
        return np.array([0.0, math.cos(x[2]), 0.0])

    f = PerturbedField(3, x0, x1, period=2 * math.pi, epsilon=1e-2, angle_index=2)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        res = shoot_periodic(f, [0.5, 0.1, 0.0], 2 * math.pi)
    assert res.converged and res.singular
    assert any(issubclass(x.category, SingularJacobianWarning) for x in w)
    # the truncated step leaves the neutral coordinate untouched
    assert abs(res.state[0] - 0.5) < 1e-9


def test_resonantly_forced_center_reports_failure():
    # x'' = -x + eps cos(t) has no 2 pi periodic solution
    def x0(x):
        return np.array([x[1], -x[0], 1.0])

    def x1(x):
        return np.array([0.0, math.cos(x[2]), 0.0])

    f = PerturbedField(3, x0, x1, period=2 * math.pi, epsilon=1e-2, angle_index=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingularJacobianWarning)
        res = shoot_periodic(f, [1.0, 0.0, 0.0], 2 * math.pi, max_iters=5)
        assert not res.converged and res.message
        with pytest.raises(NewtonDiverged):
            shoot_periodic(f, [1.0, 0.0, 0.0], 2 * math.pi, max_iters=5,
                           raise_on_divergence=True)


def test_persistence_scan_reports_no_nearby_orbit_for_strong_damping():
    cfg = DuffingConfig(a=-1, beta=1.0, delta=20.0, omega=2.0)
    k = resonant_modulus(cfg, "gamma", 1, 1)
    f = duffing_field(cfg, 1e-3)
    seeds = [duffing_state(cfg, "gamma", k, 0.0, tau) for tau in np.linspace(0, cfg.T, 4)[:-1]]
    found, results = persistence_scan(f, seeds, cfg.T, scale=1.0, max_iters=4)
    assert not found
    assert len(results) == 3


def test_drift_slope_is_one():
    cfg, _ = soft_config()
    slope, drifts = duffing_drift_slope(cfg)
    assert abs(slope - 1.0) < 0.1
    assert all(abs(d) > 0 for d in drifts)


def test_drift_matches_first_order_prediction():
    cfg, k = soft_config()
    f = duffing_field(cfg, 1e-4)
    d = integral_drift(f, hamiltonian(cfg), duffing_state(cfg, "gamma", k, 0.0, 0.3), cfg.T)
    drift, predicted = d
    assert abs(drift - predicted) < 1e-2 * abs(predicted)


def test_rigid_body_drift_over_epsilon_matches_obstruction():
    cfg = preset("one-plus-sin")
    F, _ = rigid_body_integrals(cfg)
    x0 = equilibrium_state(cfg, 1, 1, 1.0)
    oracle = rigid_body_obstruction_oracle(cfg, 1, 1, 1.0)
    for eps in (1e-4, 1e-3):
        d = integral_drift(rigid_body_field(cfg, eps), F, x0, cfg.T)
        assert abs(d.drift / eps - oracle) < 0.1 * abs(oracle)
    slope, _ = drift_slope(rigid_body_field(cfg), F, x0, cfg.T)
    assert abs(slope - 1.0) < 0.1
