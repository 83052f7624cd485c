"""Checks at positive epsilon: periodic-orbit shooting and first-integral drift.

:func:`shoot_periodic` continues a periodic orbit of the perturbed field by
Newton iteration on ``P(x) - x``, where ``P`` is the flow map over the
(sub)harmonic period.  :func:`integral_drift` measures how much a first
integral of the unperturbed flow changes along the perturbed flow and
compares it with ``epsilon`` times the obstruction integral.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Sequence

import numpy as np

from .errors import NewtonDiverged, SingularJacobianWarning
from .integrals import ScalarIntegral
from .ode import PerturbedField, Trajectory, integrate, quadrature_along
from .variational import solve_ve

__all__ = [
    "ShootingResult",
    "shoot_periodic",
    "DriftResult",
    "integral_drift",
    "drift_slope",
    "persistence_scan",
]

Array = np.ndarray

_SVD_RTOL = 1e-10
_SINGULAR_NORM = 1e12
_LINE_SEARCH_HALVINGS = 8


@dataclass
class ShootingResult:
    """Outcome of :func:`shoot_periodic`.

    Attributes
    ----------
    converged : bool
    orbit : Trajectory or None
        One period of the converged orbit.
    residual : float
        ``|P(x) - x|`` (sup norm, angle taken modulo its period).
    newton_iters : int
    distance_to_seed : float
        Sup-norm distance between the final orbit and the seed orbit over one
        period (``nan`` if no seed orbit is available).
    state : ndarray
        Final initial condition.
    period : float
    singular : bool
        True when ``|(DP - I)^-1|`` exceeded ``1e12`` at some iteration.
    message : str
    residual_history : list of float
    """

    converged: bool
    orbit: Optional[Trajectory]
    residual: float
    newton_iters: int
    distance_to_seed: float
    state: Array
    period: float
    singular: bool = False
    message: str = ""
    residual_history: List[float] = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "converged": bool(self.converged),
            "residual": float(self.residual),
            "newton_iters": int(self.newton_iters),
            "distance_to_seed": float(self.distance_to_seed),
            "state": [float(v) for v in self.state],
            "period": float(self.period),
            "singular": bool(self.singular),
            "message": self.message,
            "residual_history": [float(v) for v in self.residual_history],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _closure(field: PerturbedField, x0: Array, x1: Array) -> Array:
    d = np.asarray(x1, dtype=float) - np.asarray(x0, dtype=float)
    if field.angle_index is not None and field.period is not None:
        T = field.period
        a = d[field.angle_index]
        d[field.angle_index] = a - T * np.round(a / T)
    return d


def _sup(v: Array) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def _seed_states(seed_orbit, field: PerturbedField, seed: Array, period: float,
                 times: Array, tol: float) -> Array:
    if seed_orbit is None:
        tr = integrate(field.unperturbed(), seed, 0.0, period, tol=tol)
        return tr(times)
    if isinstance(seed_orbit, Trajectory):
        return seed_orbit(times)
    return np.array([np.asarray(seed_orbit(t), dtype=float) for t in times])


def _distance(field: PerturbedField, orbit: Trajectory, seed_states: Array, times: Array) -> float:
    X = orbit(times)
    D = X - seed_states
    if field.angle_index is not None:
        D = np.delete(D, field.angle_index, axis=1)
    return _sup(D)


def shoot_periodic(field: PerturbedField, seed, period: float, tol: float = 1e-9,
                   max_iters: int = 25, seed_orbit=None, integ_tol: float = 1e-11,
                   n_compare: int = 400, raise_on_divergence: bool = False) -> ShootingResult:
    """Newton shooting for a periodic orbit of ``field`` (at its ``epsilon``).

    Parameters
    ----------
    field : PerturbedField
        Autonomized time-periodic field; the angle component is held fixed
        and excluded from the unknowns.
    seed : array_like
        Initial guess, typically a point of the unperturbed orbit.
    period : float
        Return time, a multiple ``m T`` of the forcing period.
    tol : float
        Convergence threshold on ``|P(x) - x|``.
    max_iters : int
    seed_orbit : Trajectory or callable, optional
        Seed orbit for the distance report; defaults to the unperturbed
        orbit through ``seed``.
    integ_tol : float
        Integrator tolerance.
    n_compare : int
        Samples per period for the distance report.
    raise_on_divergence : bool
        Raise :class:`NewtonDiverged` instead of returning an unconverged
        result.

    Notes
    -----
    Each step solves ``(DP - I) dx = -(P(x) - x)`` in the least-squares
    sense with singular values below ``1e-10 sigma_max`` truncated, and is
    damped by halving (up to 8 times) until the residual decreases.
    ``DP`` comes from the variational equation of the full field.  A
    :class:`SingularJacobianWarning` is issued when
    ``|(DP - I)^-1| > 1e12``.
    """
    x = np.array(seed, dtype=float)
    n = x.size
    if field.period is not None:
        m = period / field.period
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise ValueError("shooting period must be a multiple of the forcing period")
    free = [i for i in range(n) if i != field.angle_index]
    times = np.linspace(0.0, period, n_compare + 1)
    seed_states = _seed_states(seed_orbit, field, x, period, times, integ_tol)

    def residual_at(y):
        tr = integrate(field, y, 0.0, period, tol=integ_tol)
        return tr, _closure(field, y, tr.states[-1])

    tr, r = residual_at(x)
    res = _sup(r)
    history = [res]
    singular = False
    iters = 0
    message = ""
    while res >= tol:
        if iters >= max_iters:
            message = f"no convergence after {max_iters} Newton iterations"
            break
        U = solve_ve(field, tr, tol=integ_tol).final
        A = (U - np.eye(n))[np.ix_(free, free)]
        u, s, vh = np.linalg.svd(A)
        if s[-1] == 0.0 or 1.0 / s[-1] > _SINGULAR_NORM:
            singular = True
            warnings.warn(
                f"|(DP - I)^-1| = {math.inf if s[-1] == 0 else 1.0 / s[-1]:.3e} exceeds 1e12; "
                "using a truncated least-squares step", SingularJacobianWarning, stacklevel=2)
        keep = s > _SVD_RTOL * s[0]
        rhs = -(u.T @ r[free])
        step_free = vh[keep].T @ (rhs[keep] / s[keep])
        step = np.zeros(n)
        step[free] = step_free
        lam = 1.0
        accepted = False
        for _ in range(_LINE_SEARCH_HALVINGS + 1):
            y = x + lam * step
            try:
                tr_y, r_y = residual_at(y)
            except (ArithmeticError, RuntimeError) as exc:  # blow-up along a bad trial
                tr_y, r_y = None, None
                message = str(exc)
            if r_y is not None and _sup(r_y) < res:
                accepted = True
                break
            lam *= 0.5
        iters += 1
        if not accepted:
            message = "line search failed to reduce the residual"
            break
        x, tr, r = y, tr_y, r_y
        res = _sup(r)
        history.append(res)
    converged = res < tol
    if not converged and raise_on_divergence:
        raise NewtonDiverged(message or "shooting did not converge")
    dist = _distance(field, tr, seed_states, times) if tr is not None else math.nan
    return ShootingResult(converged, tr if converged else None, res, iters, dist, x, period,
                          singular, message if not converged else "", history)


@dataclass
class DriftResult:
    """``drift = F(x(span)) - F(x0)`` along the perturbed flow and
    ``predicted = epsilon * int_0^span dF(X1)`` along the unperturbed flow.

    Unpacks as ``(drift, predicted)``.
    """

    drift: float
    predicted: float
    epsilon: float

    def __iter__(self):
        yield self.drift
        yield self.predicted


def integral_drift(field: PerturbedField, F: ScalarIntegral, x0, span: float,
                   tol: float = 1e-12) -> DriftResult:
    """Change of ``F`` over ``span`` along the perturbed flow, with its
    first-order prediction."""
    x0 = np.asarray(x0, dtype=float)
    tr = integrate(field, x0, 0.0, span, tol=tol)
    drift = F(tr.states[-1]) - F(x0)

    def integrand(t, x):
        return float(F.gradient(x) @ field.X1(x))

    first = quadrature_along(field.unperturbed(), x0, integrand, 0.0, span, tol=tol)
    return DriftResult(float(drift), float(field.epsilon * first), field.epsilon)


def drift_slope(field: PerturbedField, F: ScalarIntegral, x0, span: float,
                epsilons: Sequence[float] = (1e-5, 1e-4, 1e-3), tol: float = 1e-12):
    """Least-squares slope of ``log |drift|`` against ``log epsilon``.

    Returns
    -------
    slope : float
    drifts : list of float
    """
    eps = np.asarray(epsilons, dtype=float)
    drifts = [integral_drift(field.with_epsilon(float(e)), F, x0, span, tol).drift for e in eps]
    d = np.abs(np.asarray(drifts))
    if np.any(d == 0):
        return math.nan, drifts
    slope = float(np.polyfit(np.log(eps), np.log(d), 1)[0])
    return slope, drifts


def persistence_scan(field: PerturbedField, seeds: Sequence[Array], period: float,
                     scale: float, radius_factor: float = 10.0, tol: float = 1e-9,
                     max_iters: int = 25, seed_orbits: Optional[Sequence] = None):
    """Shoot from every seed and report whether any converged orbit lies
    within ``radius_factor * epsilon * scale`` of its seed orbit.

    This is an empirical certificate over the given seeds only.

    Returns
    -------
    found : bool
    results : list of ShootingResult
    """
    radius = radius_factor * field.epsilon * scale
    results = []
    for i, s in enumerate(seeds):
        so = None if seed_orbits is None else seed_orbits[i]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SingularJacobianWarning)
            results.append(shoot_periodic(field, s, period, tol=tol, max_iters=max_iters,
                                          seed_orbit=so))
    found = any(r.converged and r.distance_to_seed < radius for r in results)
    return found, results
