"""Ready-made evaluations on the bundled systems.

Each function builds the unperturbed orbit, evaluates the numerical
Melnikov function or obstruction integral, and returns it next to the
closed-form reference.  The command-line front end and the acceptance suite
are thin layers over these functions.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, SingularJacobianWarning
from .integrals import ScalarIntegral
from .melnikov import (
    MelnikovCurve,
    TimeSequence,
    anchored_trajectory,
    find_zeros,
    homoclinic_melnikov,
    melnikov_vector,
    obstruction_cvf_periodic,
    obstruction_homoclinic,
    obstruction_periodic,
    sequence_independence_check,
    subharmonic_melnikov,
)
from .ode import integrate
from .systems import beam as _beam
from .systems import duffing as _duff
from .systems import pendula as _pend
from .systems import rigidbody as _rb
from .variational import CommutingField, cotangent_lift
from .verify import ShootingResult, drift_slope, shoot_periodic

__all__ = [
    "worker_count",
    "ordered_map",
    "DuffingScan",
    "duffing_scan",
    "duffing_obstruction",
    "duffing_persistence",
    "duffing_drift_slope",
    "PendulaScan",
    "pendula_scan",
    "pendula_independence",
    "rigid_body_table",
    "beam_J_numeric",
    "beam_J_table",
    "beam_F_obstructions",
    "beam_lifted_identity",
]

ORBIT_TOL = 1e-12


def worker_count() -> int:
    """Size of the worker pool, capped by ``MELNIKOV_LAB_THREADS``."""
    raw = os.environ.get("MELNIKOV_LAB_THREADS", "").strip()
    cpu = os.cpu_count() or 1
    if not raw:
        return max(1, min(cpu, 4))
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"MELNIKOV_LAB_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("MELNIKOV_LAB_THREADS must be at least 1")
    return n


def ordered_map(fn: Callable, items: Sequence, workers: Optional[int] = None) -> list:
    """``[fn(x) for x in items]`` on a thread pool; results keep input order."""
    items = list(items)
    n = worker_count() if workers is None else workers
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


CHUNK = 16


def _chunks(a: np.ndarray, size: int = CHUNK) -> List[np.ndarray]:
    """Fixed-size pieces, so results do not depend on the worker count."""
    return [a[i:i + size] for i in range(0, a.size, size)]


# --------------------------------------------------------------------------
# Duffing
# --------------------------------------------------------------------------

@dataclass
class DuffingScan:
    """Numerical Melnikov curve with its closed-form reference.

    ``reference`` uses the derivation-consistent closed form; ``csch_form`` is
    the alternative csch-based form (homoclinic case only, ``None`` otherwise).
    """

    curve: MelnikovCurve
    reference: np.ndarray
    csch_form: Optional[np.ndarray]
    modulus: Optional[object]
    orbit_period: float
    info: Dict[str, object] = dc_field(default_factory=dict)


def default_family(cfg: _duff.DuffingConfig) -> str:
    return "q+" if cfg.a > 0 else "gamma"


def _merge_curves(parts: List[MelnikovCurve], taus: np.ndarray, evaluator, meta) -> MelnikovCurve:
    return MelnikovCurve(
        taus, ("tau",),
        np.concatenate([p.values for p in parts]),
        np.concatenate([p.converged for p in parts]),
        np.concatenate([p.truncation_levels for p in parts]),
        np.concatenate([p.tail_estimates for p in parts]),
        evaluator=evaluator, meta=meta)


def _homoclinic_orbit(cfg, f, family, W):
    return anchored_trajectory(f, lambda t: _duff.duffing_state(cfg, family, None, t),
                               -W, W, tol=ORBIT_TOL)


def _periodic_orbit(cfg, f, family, k, span):
    return anchored_trajectory(f, lambda t: _duff.duffing_state(cfg, family, k, t),
                               0.0, span, tol=ORBIT_TOL)


def duffing_scan(cfg: _duff.DuffingConfig, kind: str, taus, family: Optional[str] = None,
                 sign: int = 1, m: int = 1, l: int = 1, decay_tol: float = 1e-9,
                 workers: Optional[int] = None) -> DuffingScan:
    """Melnikov curve of the forced Duffing oscillator.

    Parameters
    ----------
    cfg : DuffingConfig
    kind : {"homoclinic", "subharmonic"}
    taus : array_like
        Time shifts.
    family : str, optional
        Periodic family for ``kind="subharmonic"`` (``q+``, ``q-``,
        ``outer`` or ``gamma``); defaults to ``q+`` for ``a = 1`` and
        ``gamma`` for ``a = -1``.
    sign : {1, -1}
        Branch of the homoclinic pair.
    m, l : int
        Resonance ``l T(k) = m T``.
    decay_tol : float
        The homoclinic window is ``[-W, W]`` with the orbit within
        ``decay_tol`` of the saddle at ``|t| = W``.
    workers : int, optional
        Thread count for splitting the grid.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    f = _duff.duffing_field(cfg)
    nw = worker_count() if workers is None else workers
    if kind == "homoclinic":
        if cfg.a != 1:
            raise DomainError("homoclinic orbits exist only for a = 1")
        if sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")
        fam = "hom+" if sign > 0 else "hom-"
        W = _duff.homoclinic_window(decay_tol)
        orb = _homoclinic_orbit(cfg, f, fam, W)
        parts = ordered_map(lambda c: homoclinic_melnikov(f, orb, c, window=W),
                            _chunks(taus), nw)
        curve = _merge_curves(parts, taus, parts[0].evaluator,
                              {"kind": "homoclinic", "window": W, "sign": sign})
        ref = np.asarray(_duff.duffing_melnikov_oracle(cfg, f"homoclinic{'+' if sign > 0 else '-'}",
                                                       tau=taus), dtype=float)
        csch = np.asarray(_duff.duffing_homoclinic_csch_form(cfg, sign, taus), dtype=float)
        return DuffingScan(curve, ref, csch, None, math.inf,
                           {"system": "duffing", "kind": kind, "sign": sign, "window": W})
    if kind != "subharmonic":
        raise DomainError(f"unknown Melnikov kind {kind!r}; expected homoclinic or subharmonic")
    family = default_family(cfg) if family is None else family
    k = _duff.resonant_modulus(cfg, family, m, l)
    T_orb = _duff.duffing_period(cfg, family, k)
    orb = _periodic_orbit(cfg, f, family, k, m * cfg.T)
    parts = ordered_map(lambda c: subharmonic_melnikov(f, orb, T_orb, m, l, c),
                        _chunks(taus), nw)
    curve = _merge_curves(parts, taus, parts[0].evaluator,
                          {"kind": "subharmonic", "m": m, "l": l, "family": family})
    okind = {"q+": "subharmonic+", "q-": "subharmonic-", "outer": "subharmonic-outer",
             "gamma": "subharmonic-gamma"}[family]
    ref = np.asarray(_duff.duffing_melnikov_oracle(cfg, okind, k, m, l, taus), dtype=float)
    return DuffingScan(curve, ref, None, k, T_orb,
                       {"system": "duffing", "kind": kind, "family": family, "m": m, "l": l,
                        "k": k.k, "kprime": k.kprime})


def duffing_obstruction(cfg: _duff.DuffingConfig, kind: str, taus, family: Optional[str] = None,
                        sign: int = 1, m: int = 1, l: int = 1, decay_tol: float = 1e-9,
                        tol: float = 1e-6):
    """Obstruction integral ``I_{H, gamma}`` of the energy along the
    autonomized orbit started at phase ``tau``, for each ``tau``.

    This evaluates the same quantity as :func:`duffing_scan` through the
    general first-integral route.

    Returns
    -------
    values : ndarray
    converged : ndarray of bool
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    f = _duff.duffing_field(cfg)
    H = _duff.hamiltonian(cfg)
    vals = np.empty(taus.size)
    conv = np.ones(taus.size, bool)
    if kind == "homoclinic":
        fam = "hom+" if sign > 0 else "hom-"
        W = _duff.homoclinic_window(decay_tol)
        seq = TimeSequence.uniform(W / 4.0, 4)
        for i, tau in enumerate(taus):
            orb = anchored_trajectory(
                f, lambda t, tau=tau: _duff.duffing_state(cfg, fam, None, t, tau), -W, W,
                tol=ORBIT_TOL)
            res = obstruction_homoclinic(f, H, orb, seq, tol=tol)
            vals[i], conv[i] = res.value, res.converged
        return vals, conv
    family = default_family(cfg) if family is None else family
    k = _duff.resonant_modulus(cfg, family, m, l)
    for i, tau in enumerate(taus):
        orb = anchored_trajectory(
            f, lambda t, tau=tau: _duff.duffing_state(cfg, family, k, t, tau), 0.0, m * cfg.T,
            tol=ORBIT_TOL)
        vals[i] = obstruction_periodic(f, H, orb, m * cfg.T)
    return vals, conv


def duffing_persistence(cfg: _duff.DuffingConfig, epsilon: float, m: int = 1, l: int = 1,
                        family: Optional[str] = None, n_tau: int = 33, tol: float = 1e-9,
                        max_iters: int = 25):
    """Shoot for ``mT``-periodic orbits from every simple zero of ``M^{m/l}``.

    Returns
    -------
    dict
        ``zeros`` (list of phases), ``results`` (list of
        :class:`ShootingResult`), ``scale`` (sup-norm of the resonant orbit)
        and ``radius`` (``10 epsilon scale``).
    """
    family = default_family(cfg) if family is None else family
    taus = np.linspace(0.0, cfg.T, n_tau)
    scan = duffing_scan(cfg, "subharmonic", taus, family=family, m=m, l=l, workers=1)
    k = scan.modulus
    zeros = find_zeros(scan.curve).simple
    f_eps = _duff.duffing_field(cfg, epsilon)
    pts = _duff.duffing_orbit(cfg, family, k, np.linspace(0.0, scan.orbit_period, 257))
    scale = float(np.max(np.abs(pts)))
    results: List[ShootingResult] = []
    q0 = _duff.duffing_orbit(cfg, family, k, 0.0)
    for z in zeros:
        tau0 = z.param
        seed = np.array([q0[0], q0[1], tau0])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SingularJacobianWarning)
            res = shoot_periodic(
                f_eps, seed, m * cfg.T, tol=tol, max_iters=max_iters,
                seed_orbit=lambda t, tau0=tau0: _duff.duffing_state(cfg, family, k, t, tau0))
        results.append(res)
    return {"zeros": [z.param for z in zeros], "results": results, "scale": scale,
            "radius": 10.0 * epsilon * scale, "modulus": k, "family": family}


def duffing_drift_slope(cfg: _duff.DuffingConfig, m: int = 1, l: int = 1,
                        family: Optional[str] = None, tau: float = 0.3,
                        epsilons: Sequence[float] = (1e-5, 1e-4, 1e-3)):
    """Log-log slope of the energy drift over ``m T`` along the resonant orbit
    started at phase ``tau``."""
    family = default_family(cfg) if family is None else family
    k = _duff.resonant_modulus(cfg, family, m, l)
    x0 = _duff.duffing_state(cfg, family, k, 0.0, tau)
    return drift_slope(_duff.duffing_field(cfg, epsilons[0]), _duff.hamiltonian(cfg), x0,
                       m * cfg.T, epsilons)


# --------------------------------------------------------------------------
# coupled pendula
# --------------------------------------------------------------------------

@dataclass
class PendulaScan:
    curve: MelnikovCurve
    reference: np.ndarray
    m1_cubic_form: np.ndarray
    info: Dict[str, object] = dc_field(default_factory=dict)


def _pendula_family(cfg, f, K, rate, target, signs):
    lo, hi = TimeSequence.angle_zeros(rate, K, target).span
    pad = 1e-9 * max(1.0, abs(lo), abs(hi))

    def fam(I, alpha):
        return anchored_trajectory(
            f, lambda t: _pend.pendula_homoclinic(cfg, signs, alpha, t, I, 0.0),
            lo - pad, hi + pad, tol=ORBIT_TOL)

    return fam


def pendula_scan(cfg: _pend.PendulaConfig, grid, K: int = 3, target: float = 0.0,
                 signs=(1, 1), tol: float = 1e-4, workers: Optional[int] = None) -> PendulaScan:
    """Melnikov vector ``(M1, M2)`` on rows ``(I, theta0, alpha)``.

    The nested windows end at the times where the action-angle variable
    equals ``target`` modulo ``2 pi``.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    f = _pend.pendula_field(cfg)
    F2 = _pend.pendulum_integral(cfg, 2)
    fam = _pendula_family(cfg, f, K, cfg.omega0, target, signs)
    nw = worker_count() if workers is None else workers
    # split by (I, alpha) so that each trajectory is built once
    keys: Dict[tuple, List[int]] = {}
    for i, (I, _, al) in enumerate(grid):
        keys.setdefault((I, al), []).append(i)
    groups = list(keys.values())

    def run(rows):
        return rows, melnikov_vector(f, fam, [F2], grid[rows], K=K, rate=cfg.omega0,
                                     target=target, tol=tol)

    parts = ordered_map(run, groups, nw)
    n = grid.shape[0]
    values = np.empty((n, 2))
    conv = np.zeros(n, bool)
    levels = np.zeros(n, int)
    tails = np.zeros(n)
    for rows, c in parts:
        values[rows] = c.values
        conv[rows] = c.converged
        levels[rows] = c.truncation_levels
        tails[rows] = c.tail_estimates
    curve = MelnikovCurve(grid, ("I", "theta0", "alpha"), values, conv, levels, tails,
                          value_names=("M1", "M2"),
                          meta={"kind": "vector", "K": K, "target": target})
    ref = np.column_stack([
        _pend.pendula_melnikov_oracle(cfg, c, grid[:, 0], grid[:, 1], grid[:, 2])
        for c in (1, 2)])
    cubic = np.asarray(_pend.pendula_m1_cubic_form(cfg, grid[:, 0], grid[:, 1], grid[:, 2]))
    return PendulaScan(curve, ref, cubic, {"system": "pendula", "K": K, "target": target})


def pendula_independence(cfg: _pend.PendulaConfig, grid, targets=(0.0, math.pi / 3), K: int = 3,
                         tol: float = 1e-4):
    """Compare the Melnikov vector along two angle-zero time sequences."""
    def evaluate(seq):
        target = cfg.omega0 * seq.times[seq.origin_index]
        return pendula_scan(cfg, grid, K=K, target=target, tol=tol).curve.values

    seq_a, seq_b = (TimeSequence.angle_zeros(cfg.omega0, K, tg) for tg in targets)
    return sequence_independence_check(evaluate, seq_a, seq_b, tol)


# --------------------------------------------------------------------------
# rigid body
# --------------------------------------------------------------------------

def rigid_body_table(cfg: _rb.RigidBodyConfig, c: float = 1.0, integral: str = "F"):
    """Obstruction integral at each of the six equilibria ``p_{j+-}``.

    Returns
    -------
    list of dict
        Keys ``j``, ``sign``, ``value``, ``oracle``.
    """
    f = _rb.rigid_body_field(cfg)
    F, Ft = _rb.rigid_body_integrals(cfg)
    G = F if integral == "F" else Ft
    rows = []
    for j in (1, 2, 3):
        for sign in (1, -1):
            x0 = _rb.equilibrium_state(cfg, j, sign, c)
            orb = integrate(f.unperturbed(), x0, 0.0, 1e-3)
            val = obstruction_periodic(f, G, orb, cfg.T)
            ref = _rb.rigid_body_obstruction_oracle(cfg, j, sign, c, integral)
            rows.append({"j": j, "sign": sign, "value": float(val), "oracle": float(ref)})
    return rows


# --------------------------------------------------------------------------
# buckled beam
# --------------------------------------------------------------------------

def _beam_orbit(cfg, ell, c):
    f = _beam.beam_field(cfg)
    x0 = _beam.beam_orbits(cfg, ell, c, 0.0)
    return f, integrate(f.unperturbed(), x0, 0.0, 1e-3, tol=ORBIT_TOL)


def beam_J_numeric(cfg: _beam.BeamConfig, j: int, k: int, ell: int, c: float = 1.0) -> float:
    """``int_0^{2 pi / w_ell} g_j(t) . [X1, Z_k](gamma_{ell,c}(t)) dt``."""
    if k not in range(1, 7):
        raise DomainError("k must be in 1..6")
    f, orb = _beam_orbit(cfg, ell, c)
    Z = _beam.beam_cvfs(cfg)[k - 1]
    return float(obstruction_cvf_periodic(
        f, Z, lambda t: _beam.beam_adjoint_solutions(cfg, j, t), orb, cfg.period(ell)))


def beam_J_table(cfg: _beam.BeamConfig, c: float = 1.0):
    """All 48 combinations ``(j, k, ell)`` with ``j`` in 1..4, ``k`` in 1..6
    and ``ell`` in 1, 2.

    Returns
    -------
    list of dict
        Keys ``j``, ``k``, ``ell``, ``value``, ``oracle`` (reference table) and
        ``closed_form`` (value under the bracket convention used here).
    """
    rows = []
    for ell in (1, 2):
        f, orb = _beam_orbit(cfg, ell, c)
        Zs = _beam.beam_cvfs(cfg)
        for j in (1, 2, 3, 4):
            for k in range(1, 7):
                v = obstruction_cvf_periodic(
                    f, Zs[k - 1], lambda t, j=j: _beam.beam_adjoint_solutions(cfg, j, t), orb,
                    cfg.period(ell))
                rows.append({
                    "j": j, "k": k, "ell": ell, "value": float(v),
                    "oracle": _beam.beam_J_oracle(j, k, ell, cfg.beta(ell), c),
                    "closed_form": _beam.beam_J_closed_form(cfg, j, k, ell, c)})
    return rows


def beam_F_obstructions(cfg: _beam.BeamConfig, c: float = 1.0):
    """``I_{F_j, gamma_{ell,c}}`` for ``j`` in 1..3 and ``ell`` in 1, 2."""
    rows = []
    Fs = _beam.beam_integrals(cfg)
    for ell in (1, 2):
        f, orb = _beam_orbit(cfg, ell, c)
        for j, F in enumerate(Fs, start=1):
            rows.append({"j": j, "ell": ell,
                         "value": float(obstruction_periodic(f, F, orb, cfg.period(ell)))})
    return rows


def lifted_integral(Z: CommutingField, n: int) -> ScalarIntegral:
    """``h_Z(x, p) = <p, Z(x)>`` with gradient ``(DZ^T p, Z(x))``."""
    def h(z):
        z = np.asarray(z, dtype=float)
        return float(z[n:] @ Z(z[:n]))

    def grad(z):
        z = np.asarray(z, dtype=float)
        return np.concatenate([Z.jacobian(z[:n]).T @ z[n:], Z(z[:n])])

    return ScalarIntegral(h, grad, f"h_{Z.name}")


def beam_lifted_identity(cfg: _beam.BeamConfig, j: int, k: int, ell: int, c: float = 1.0):
    """``I_{h_Z, lifted orbit}`` on the cotangent lift against ``J``.

    The lifted orbit starts at ``(gamma_{ell,c}(0), g_j(0))``.

    Returns
    -------
    lifted : float
    direct : float
    """
    f = _beam.beam_field(cfg)
    lift = cotangent_lift(f)
    z0 = np.concatenate([_beam.beam_orbits(cfg, ell, c, 0.0),
                         _beam.beam_adjoint_solutions(cfg, j, 0.0)])
    orb = integrate(lift.unperturbed(), z0, 0.0, 1e-3, tol=ORBIT_TOL)
    Z = _beam.beam_cvfs(cfg)[k - 1]
    lifted = obstruction_periodic(lift, lifted_integral(Z, f.dim), orb, cfg.period(ell))
    return float(lifted), beam_J_numeric(cfg, j, k, ell, c)
