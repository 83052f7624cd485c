"""Obstruction integrals, Melnikov functions and their zeros.

Every quantity here is an integral of a first-order (in ``epsilon``) term
along an orbit of the unperturbed field:

* ``I_{F,gamma}  = int_0^T dF(X1)(gamma(t)) dt`` along a periodic orbit,
* the same along a homoclinic orbit, as a limit over nested windows
  ``[T_-k, T_k]``,
* ``J_{omega,Z,gamma} = int omega([X1, Z])(gamma(t)) dt`` for a commuting
  field ``Z`` and an adjoint solution ``omega``,
* the subharmonic and homoclinic Melnikov functions of planar time-periodic
  systems, and the Melnikov vector of systems with an action-angle pair.

Conditionally convergent integrals are only ever evaluated on windows whose
endpoints belong to a :class:`TimeSequence`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ResonanceMismatch
from .integrals import ScalarIntegral
from .ode import (
    PerturbedField, Section, Trajectory, concatenate, cumulative_integral, find_crossings,
    integrate, quadrature_along,
)
from .variational import CommutingField, CovectorPath, lie_bracket

__all__ = [
    "TimeSequence",
    "WindowedIntegral",
    "MelnikovCurve",
    "ZeroReport",
    "Zero",
    "IndependenceReport",
    "homoclinic_trajectory",
    "anchored_trajectory",
    "obstruction_periodic",
    "obstruction_homoclinic",
    "obstruction_cvf_periodic",
    "obstruction_cvf_homoclinic",
    "subharmonic_melnikov",
    "homoclinic_melnikov",
    "melnikov_vector",
    "sequence_independence_check",
    "find_zeros",
]

Array = np.ndarray


# --------------------------------------------------------------------------
# time sequences and windowed integrals
# --------------------------------------------------------------------------

@dataclass
class TimeSequence:
    """Strictly increasing times ``T_-k .. T_k`` used as window endpoints.

    Attributes
    ----------
    times : ndarray
        The times, increasing.
    origin_index : int
        Position of ``T_0`` in ``times``.
    source : str
        ``"section-crossings"``, ``"uniform"`` or ``"angle-zeros"``.
    """

    times: Array
    origin_index: int
    source: str = "uniform"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or self.times.size < 3:
            raise DomainError("a time sequence needs at least T_-1, T_0, T_1")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("time sequence must be strictly increasing")
        if not 0 < self.origin_index < self.times.size - 1:
            raise DomainError("origin index must leave at least one time on each side")
        if self.source not in ("section-crossings", "uniform", "angle-zeros"):
            raise DomainError(f"unknown time-sequence source {self.source!r}")

    @property
    def K(self) -> int:
        """Largest ``k`` with both ``T_-k`` and ``T_k`` available."""
        return min(self.origin_index, self.times.size - 1 - self.origin_index)

    def window(self, k: int):
        """``(T_-k, T_k)``."""
        if not 1 <= k <= self.K:
            raise DomainError(f"window index {k} outside 1..{self.K}")
        return float(self.times[self.origin_index - k]), float(self.times[self.origin_index + k])

    @property
    def span(self):
        return self.window(self.K)

    @classmethod
    def uniform(cls, spacing: float, K: int, t0: float = 0.0) -> "TimeSequence":
        """``T_j = t0 + j spacing``, for integrals that converge absolutely."""
        if not spacing > 0 or K < 1:
            raise DomainError("spacing must be positive and K >= 1")
        return cls(t0 + spacing * np.arange(-K, K + 1), K, "uniform")

    @classmethod
    def angle_zeros(cls, rate: float, K: int, target: float = 0.0,
                    phase_at_zero: float = 0.0) -> "TimeSequence":
        """Times where a uniformly rotating angle ``phase_at_zero + rate t``
        equals ``target`` modulo ``2 pi``.

        ``T_0`` is the solution closest to ``t = 0``.
        """
        if rate == 0 or K < 1:
            raise DomainError("rate must be nonzero and K >= 1")
        period = 2.0 * math.pi / abs(rate)
        t_first = (target - phase_at_zero) / rate
        t0 = t_first - period * round(t_first / period)
        return cls(t0 + period * np.arange(-K, K + 1), K, "angle-zeros")

    @classmethod
    def from_crossings(cls, traj: Trajectory, section: Section,
                       origin_time: float = 0.0) -> "TimeSequence":
        """Refined crossings of ``section`` along ``traj``; ``T_0`` is the
        crossing closest to ``origin_time``."""
        hits = find_crossings(traj, section)
        times = np.array([h[0] for h in hits])
        if times.size < 3:
            raise DomainError("fewer than three section crossings on the trajectory")
        origin = int(np.argmin(np.abs(times - origin_time)))
        return cls(times, origin, "section-crossings")


@dataclass
class WindowedIntegral:
    """Result of a nested-window evaluation.

    Unpacks as ``(value, converged)``.  ``partials[k-1]`` is the integral over
    ``[T_-k, T_k]``.
    """

    value: Union[float, Array]
    converged: bool
    partials: Array
    level: int
    tail_estimate: float

    def __iter__(self):
        yield self.value
        yield self.converged


def _convergence_threshold(partials: Array, tol: float) -> float:
    scale = float(np.max(np.abs(partials))) if partials.size else 0.0
    return max(tol, 1e-10 * scale)


def _nested(cum, seq: TimeSequence, tol: float, K: Optional[int] = None) -> WindowedIntegral:
    K = seq.K if K is None else min(K, seq.K)
    los = np.array([seq.window(k)[0] for k in range(1, K + 1)])
    his = np.array([seq.window(k)[1] for k in range(1, K + 1)])
    partials = np.asarray(cum(his)) - np.asarray(cum(los))
    return _judge(partials, tol)


def _judge(partials: Array, tol: float) -> WindowedIntegral:
    """Convergence when the last two partial values differ by less than
    ``max(tol, 1e-10 * scale)`` (componentwise for vectors)."""
    partials = np.asarray(partials, dtype=float)
    thresh = _convergence_threshold(partials, tol)
    if partials.shape[0] >= 2:
        tail = float(np.max(np.abs(partials[-1] - partials[-2])))
        converged = tail < thresh
    else:
        tail = math.inf
        converged = False
    last = partials[-1]
    value = float(last) if np.ndim(last) == 0 else last
    return WindowedIntegral(value, converged, partials, partials.shape[0], tail)


# --------------------------------------------------------------------------
# orbits
# --------------------------------------------------------------------------

def homoclinic_trajectory(field: PerturbedField, x_center, t_lo: float, t_hi: float,
                          tol: float = 1e-12, decay_rate: float = 1.0) -> Trajectory:
    """Integrate a homoclinic orbit forward and backward from ``x_center``.

    Near a hyperbolic saddle an absolute error ``atol`` becomes a phase error
    of order ``atol / |x - saddle|``.  The absolute tolerance of the
    non-angle components is therefore scaled by ``exp(-decay_rate * W)``
    with ``W = max(|t_lo|, |t_hi|)``, the expected distance to the saddle at
    the window ends.  The two halves are joined at ``t = 0``.

    Errors committed near ``x_center`` still grow like ``exp(|t|)`` along
    the unstable direction, so for long windows prefer
    :func:`anchored_trajectory` when the orbit is known in closed form.
    """
    x_center = np.asarray(x_center, dtype=float)
    f0 = field.unperturbed()
    W = max(abs(t_lo), abs(t_hi))
    atol = np.full(x_center.size, tol * math.exp(-decay_rate * W))
    if field.angle_index is not None:
        atol[field.angle_index] = tol
    pieces = []
    if t_lo < 0:
        pieces.append(integrate(f0, x_center, 0.0, t_lo, tol=tol, atol=atol))
    if t_hi > 0:
        pieces.append(integrate(f0, x_center, 0.0, t_hi, tol=tol, atol=atol))
    if not pieces:
        raise DomainError("window must contain more than the single time 0")
    return pieces[0] if len(pieces) == 1 else concatenate(pieces)


def _speed_excluding_angle(field: PerturbedField, x: Array) -> float:
    v = field.X0(x)
    if field.angle_index is not None:
        v = np.delete(v, field.angle_index)
    return float(np.max(np.abs(v))) if v.size else 0.0


def anchored_trajectory(field: PerturbedField, state_fn: Callable[[float], Array],
                        t_lo: float, t_hi: float, spacing: float = 1.0,
                        tol: float = 1e-12) -> Trajectory:
    """Stored orbit built from short integration runs anchored on a known orbit.

    The interval ``[t_lo, t_hi]`` is cut into pieces of length at most
    ``spacing``; each piece is integrated with the unperturbed field from
    the exact state ``state_fn(t_i)`` and the pieces are joined.  This keeps
    the error amplification of saddle passages bounded by the growth over
    one piece.  Each piece uses an absolute tolerance of
    ``tol * min(1, speed)`` with ``speed`` the smallest non-angle velocity at
    its two ends, which is proportional to the distance to a nearby saddle.
    """
    if not t_hi > t_lo:
        raise DomainError("need t_hi > t_lo")
    if not spacing > 0:
        raise DomainError("spacing must be positive")
    f0 = field.unperturbed()
    n = int(math.ceil((t_hi - t_lo) / spacing - 1e-12))
    knots = np.linspace(t_lo, t_hi, n + 1)
    pieces = []
    for a, b in zip(knots[:-1], knots[1:]):
        xa = np.asarray(state_fn(a), dtype=float)
        xb = np.asarray(state_fn(b), dtype=float)
        speed = min(1.0, _speed_excluding_angle(f0, xa), _speed_excluding_angle(f0, xb))
        atol = np.full(xa.size, tol * max(speed, 1e-300))
        if f0.angle_index is not None:
            atol[f0.angle_index] = tol
        pieces.append(integrate(f0, xa, float(a), float(b), tol=tol, atol=atol))
    return pieces[0] if len(pieces) == 1 else concatenate(pieces)


def _covers(orbit: Trajectory, period: float) -> bool:
    """True when a multi-piece stored orbit spans a full period from its start."""
    return (len(orbit.segments) > 1
            and orbit.t_max - orbit.t_min >= period * (1.0 - 1e-12))


def _periodic_quadrature(field: PerturbedField, orbit: Trajectory, integrand, period: float,
                         tol: float) -> float:
    """``int_{t0}^{t0+T}`` of ``integrand`` along ``orbit``.

    A stored multi-piece orbit covering the period is used as is; otherwise
    the orbit is re-integrated from its anchor together with the integrand.
    """
    if _covers(orbit, period):
        t0 = orbit.t_min
        cum = cumulative_integral(orbit, integrand, tol=tol)
        return float(cum(t0 + period) - cum(t0))
    t0, x0, atol = _start_of(orbit)
    return quadrature_along(field.unperturbed(), x0, integrand, t0, t0 + period, tol=tol,
                            atol=atol)


def _start_of(orbit: Trajectory):
    """Anchor time and state of a single-run trajectory (or its start)."""
    if len(orbit.segments) == 1:
        seg = orbit.segments[0]
        return seg.t_anchor, np.asarray(seg.x_anchor, dtype=float), seg.atol
    return orbit.t_min, np.asarray(orbit(orbit.t_min), dtype=float), None


def _x1_field(field: PerturbedField) -> CommutingField:
    return CommutingField(field.X1, field.jac1, "X1")


# --------------------------------------------------------------------------
# obstruction integrals
# --------------------------------------------------------------------------

def obstruction_periodic(field: PerturbedField, F: ScalarIntegral, orbit: Trajectory,
                         period: float, tol: float = 1e-11) -> float:
    """``I_{F,gamma} = int_0^T dF(X1)(gamma(t)) dt`` along a closed orbit.

    A stored orbit built from several pieces (see
    :func:`anchored_trajectory`) that spans a full period is integrated
    along directly.  Otherwise the orbit is re-integrated from its anchor
    over one period together with the integrand ``<grad F(x), X1(x)>``.
    """
    def integrand(t, x):
        return float(F.gradient(x) @ field.X1(x))

    return _periodic_quadrature(field, orbit, integrand, period, tol)


def obstruction_homoclinic(field: PerturbedField, F: ScalarIntegral, hom_orbit: Trajectory,
                           seq: TimeSequence, tol: float = 1e-10,
                           K: Optional[int] = None) -> WindowedIntegral:
    """``lim_k int_{T_-k}^{T_k} dF(X1)(gamma_h(t)) dt`` over nested windows.

    Returns
    -------
    WindowedIntegral
        Unpacks as ``(value, converged)``; ``converged`` is false (and the
        last partial value is returned) when the final two windows still
        differ by more than ``max(tol, 1e-10 * scale)``.
    """
    lo, hi = seq.span
    if lo < hom_orbit.t_min - 1e-12 or hi > hom_orbit.t_max + 1e-12:
        raise DomainError("homoclinic trajectory does not cover the time sequence")

    def integrand(t, x):
        return float(F.gradient(x) @ field.X1(x))

    cum = cumulative_integral(hom_orbit, integrand)
    return _nested(cum, seq, tol, K)


def _covector_fn(omega):
    if isinstance(omega, CovectorPath):
        return omega
    if callable(omega):
        return lambda t: np.asarray(omega(t), dtype=float)
    raise TypeError("omega must be a CovectorPath or a callable of t")


def obstruction_cvf_periodic(field: PerturbedField, Z: CommutingField, omega, orbit: Trajectory,
                             period: float, tol: float = 1e-11):
    """``J = int_0^T omega(t) . [X1, Z](gamma(t)) dt``.

    ``omega`` is a :class:`CovectorPath`, a callable ``t -> covector`` on the
    orbit's time axis, or a list of either (one value per entry is then
    returned).
    """
    if isinstance(omega, (list, tuple)):
        return [obstruction_cvf_periodic(field, Z, w, orbit, period, tol) for w in omega]
    w = _covector_fn(omega)
    X1 = _x1_field(field)

    def integrand(t, x):
        return float(w(t) @ lie_bracket(X1, Z, x))

    return _periodic_quadrature(field, orbit, integrand, period, tol)


def obstruction_cvf_homoclinic(field: PerturbedField, Z: CommutingField, omega_h,
                               hom_orbit: Trajectory, seq: TimeSequence, tol: float = 1e-10,
                               K: Optional[int] = None) -> WindowedIntegral:
    """``lim_k int_{T_-k}^{T_k} omega_h(t) . [X1, Z](gamma_h(t)) dt``."""
    w = _covector_fn(omega_h)
    X1 = _x1_field(field)

    def integrand(t, x):
        return float(w(t) @ lie_bracket(X1, Z, x))

    cum = cumulative_integral(hom_orbit, integrand)
    return _nested(cum, seq, tol, K)


# --------------------------------------------------------------------------
# Melnikov functions of planar time-periodic systems
# --------------------------------------------------------------------------

@dataclass
class MelnikovCurve:
    """A Melnikov function (or vector) sampled on a parameter grid.

    Attributes
    ----------
    params : ndarray
        Shape ``(n,)`` or ``(n, d)``.
    param_names : tuple of str
    values : ndarray
        Shape ``(n,)`` or ``(n, c)``.
    converged : ndarray of bool
    truncation_levels : ndarray of int
        Window index at which each value was taken (0 for fixed windows).
    tail_estimates : ndarray
    value_names : tuple of str
    evaluator : callable, optional
        Re-evaluates the (scalar) function at a parameter; used by
        :func:`find_zeros`.
    """

    params: Array
    param_names: tuple
    values: Array
    converged: Array
    truncation_levels: Array
    tail_estimates: Array
    value_names: tuple = ("value",)
    evaluator: Optional[Callable[[float], float]] = dc_field(default=None, repr=False)
    meta: dict = dc_field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def rows(self):
        """Rows ``params..., values..., converged, tail_estimate``."""
        P = self.params.reshape(len(self), -1)
        V = self.values.reshape(len(self), -1)
        for i in range(len(self)):
            yield (list(P[i]) + list(V[i]) + [bool(self.converged[i]),
                                              float(self.tail_estimates[i])])

    def header(self):
        return list(self.param_names) + list(self.value_names) + ["converged", "tail_estimate"]


def _planar_integrand(field: PerturbedField, taus: Array):
    """Vector of ``DH(x) . g(x, theta + tau_i)`` for a planar Hamiltonian part.

    With ``x' = J DH(x) = (H_x2, -H_x1)`` the gradient is
    ``DH = (-X0_2, X0_1)``.
    """
    ai = field.angle_index
    if ai is None or field.dim != 3 or ai != 2:
        raise DomainError("expected an autonomized planar field with state (x1, x2, theta)")

    def integrand(t, x):
        f0 = field.X0(x)
        dh = np.array([-f0[1], f0[0]])
        out = np.empty(taus.size)
        y = x.copy()
        for i, tau in enumerate(taus):
            y[2] = x[2] + tau
            g = field.X1(y)
            out[i] = dh[0] * g[0] + dh[1] * g[1]
        return out

    return integrand


def subharmonic_melnikov(field: PerturbedField, orbit, orbit_period: float, m: int, l: int,
                         tau_grid, tol: float = 1e-11) -> MelnikovCurve:
    """``M^{m/l}(tau) = int_0^{mT} DH(q(t)) . g(q(t), t + tau) dt``.

    Parameters
    ----------
    field : PerturbedField
        Autonomized planar field on ``(x1, x2, theta)`` with ``theta' = 1``
        and forcing period ``field.period``.
    orbit : Trajectory or array_like
        Stored resonant orbit spanning ``[0, mT]`` with ``theta(0) = 0``
        (see :func:`anchored_trajectory`), or just the planar point ``q(0)``,
        in which case the orbit is integrated in a single run.
    orbit_period : float
        Period of the orbit; must satisfy ``l * orbit_period = m * T``.
    m, l : int
    tau_grid : array_like
        Time shifts.

    Raises
    ------
    ResonanceMismatch
        If ``|l orbit_period - m T| > 1e-6 T``.
    """
    T = field.period
    if T is None:
        raise DomainError("field carries no forcing period")
    if m <= 0 or l <= 0:
        raise DomainError("m and l must be positive")
    if math.gcd(int(m), int(l)) != 1:
        raise DomainError("m and l must be relatively prime")
    if abs(l * orbit_period - m * T) > 1e-6 * T:
        raise ResonanceMismatch(
            f"l T_orbit = {l * orbit_period:.12g} but m T = {m * T:.12g}")
    taus = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    span = m * T
    if isinstance(orbit, Trajectory):
        if orbit.t_min > 1e-12 or orbit.t_max < span - 1e-9 * span:
            raise DomainError("stored orbit does not cover [0, m T]")

        def integral(tgrid):
            cum = cumulative_integral(orbit, _planar_integrand(field, tgrid), tol=tol)
            return np.atleast_1d(cum(span) - cum(0.0))
    else:
        q0 = np.asarray(orbit, dtype=float)
        x0 = np.array([q0[0], q0[1], 0.0])

        def integral(tgrid):
            return np.atleast_1d(quadrature_along(field.unperturbed(), x0,
                                                  _planar_integrand(field, tgrid),
                                                  0.0, span, tol=tol))

    vals = integral(taus)

    def evaluator(tau):
        return float(integral(np.array([tau]))[0])

    n = taus.size
    return MelnikovCurve(taus, ("tau",), vals, np.ones(n, bool), np.zeros(n, int),
                         np.zeros(n), evaluator=evaluator,
                         meta={"kind": "subharmonic", "m": m, "l": l})


def homoclinic_melnikov(field: PerturbedField, hom_orbit: Trajectory, tau_grid,
                        window: Optional[float] = None, tol: float = 1e-12) -> MelnikovCurve:
    """``M(tau) = int DH(q(t)) . g(q(t), t + tau) dt`` over ``[-W, W]``.

    ``hom_orbit`` is a trajectory of the autonomized planar field spanning
    at least ``[-W, W]`` with ``theta(0) = 0`` (see
    :func:`homoclinic_trajectory`).  The reported tail estimate is the
    contribution of the last octave ``W/2 <= |t| <= W``.
    """
    W = min(-hom_orbit.t_min, hom_orbit.t_max) if window is None else float(window)
    if W <= 0 or -W < hom_orbit.t_min - 1e-12 or W > hom_orbit.t_max + 1e-12:
        raise DomainError("window must lie inside the homoclinic trajectory")
    taus = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    cum = cumulative_integral(hom_orbit, _planar_integrand(field, taus), tol=tol)
    vals = np.atleast_1d(cum(W) - cum(-W))
    tail = np.abs(cum(W) - cum(W / 2)) + np.abs(cum(-W / 2) - cum(-W))
    tail = np.atleast_1d(tail)

    def evaluator(tau):
        c = cumulative_integral(hom_orbit, _planar_integrand(field, np.array([tau])), tol=tol)
        return float((c(W) - c(-W))[0])

    n = taus.size
    return MelnikovCurve(taus, ("tau",), vals, np.ones(n, bool), np.zeros(n, int), tail,
                         evaluator=evaluator, meta={"kind": "homoclinic", "window": W})


# --------------------------------------------------------------------------
# Melnikov vector
# --------------------------------------------------------------------------

def melnikov_vector(field: PerturbedField, hom_family: Callable[[float, float], Trajectory],
                    F_list: Sequence[ScalarIntegral], grid, K: int = 3,
                    action_index: int = 4, angle_index: int = 5, rate: float = 1.0,
                    target: float = 0.0, tol: float = 1e-4) -> MelnikovCurve:
    """Melnikov vector ``(M1, M2, ..., Mm)`` for a system with an action-angle pair.

    ``M1`` integrates ``D_theta H1 = -X1_I`` and ``Mk`` integrates
    ``dF_k(X1)`` (which equals ``D_x F_k . J D_x H1 - D_I F_k . D_theta H1``
    in the split form) along the homoclinic orbit, over nested windows whose
    endpoints are the angle-zero times ``theta(T_j) - theta0 = target mod 2 pi``.

    Parameters
    ----------
    field : PerturbedField
    hom_family : callable
        ``(I, alpha) -> Trajectory`` of the unperturbed homoclinic orbit with
        angle ``theta(0) = 0`` spanning the time sequence.
    F_list : sequence of ScalarIntegral
        Unperturbed integrals ``F_2 .. F_m``.
    grid : array_like
        Rows ``(I, theta0, alpha)``.
    K : int
        Number of nested windows.
    rate : float
        Angular velocity of the angle (``omega0``).
    target : float
        Angle value defining the time sequence.
    tol : float
        Convergence tolerance for the nested windows.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[1] != 3:
        raise DomainError("grid rows must be (I, theta0, alpha)")
    seq = TimeSequence.angle_zeros(rate, K, target)
    ncomp = 1 + len(F_list)
    values = np.empty((grid.shape[0], ncomp))
    conv = np.zeros(grid.shape[0], bool)
    levels = np.zeros(grid.shape[0], int)
    tails = np.zeros(grid.shape[0])
    # one trajectory per (I, alpha); theta0 only shifts the angle
    keys = {}
    for i, (I, th0, al) in enumerate(grid):
        keys.setdefault((I, al), []).append(i)
    for (I, al), rows in keys.items():
        traj = hom_family(I, al)
        th0s = grid[rows, 1]
        integrand = _vector_integrand(field, F_list, th0s, action_index, angle_index)
        cum = cumulative_integral(traj, integrand)
        res = _nested(lambda t: cum(t), seq, tol)
        part = np.asarray(res.partials).reshape(res.level, len(rows), ncomp)
        for j, r in enumerate(rows):
            sub = _judge(part[:, j, :], tol)
            values[r] = sub.value
            conv[r] = sub.converged
            levels[r] = sub.level
            tails[r] = sub.tail_estimate
    names = ("M1",) + tuple(f"M{k + 2}" for k in range(len(F_list)))
    return MelnikovCurve(grid, ("I", "theta0", "alpha"), values, conv, levels, tails,
                         value_names=names, meta={"kind": "vector", "K": K, "target": target})


def _vector_integrand(field, F_list, th0s, ai, ti):
    th0s = np.asarray(th0s, dtype=float)

    def integrand(t, x):
        out = np.empty((th0s.size, 1 + len(F_list)))
        y = x.copy()
        for i, th0 in enumerate(th0s):
            y[ti] = x[ti] + th0
            g = field.X1(y)
            out[i, 0] = -g[ai]
            for k, F in enumerate(F_list):
                out[i, k + 1] = float(F.gradient(y) @ g)
        return out

    return integrand


@dataclass
class IndependenceReport:
    value_a: Union[float, Array]
    value_b: Union[float, Array]
    difference: float
    threshold: float
    passed: bool


def sequence_independence_check(evaluate: Callable[[TimeSequence], object], seq_a: TimeSequence,
                                seq_b: TimeSequence, tol: float) -> IndependenceReport:
    """Evaluate a conditionally convergent integral along two time sequences.

    ``evaluate(seq)`` returns a value or a :class:`WindowedIntegral`.  The
    check passes when the two values differ by less than ``10 * tol``.
    """
    va, vb = evaluate(seq_a), evaluate(seq_b)
    if isinstance(va, WindowedIntegral):
        va = va.value
    if isinstance(vb, WindowedIntegral):
        vb = vb.value
    diff = float(np.max(np.abs(np.asarray(va, dtype=float) - np.asarray(vb, dtype=float))))
    return IndependenceReport(va, vb, diff, 10.0 * tol, diff < 10.0 * tol)


# --------------------------------------------------------------------------
# zeros
# --------------------------------------------------------------------------

@dataclass
class Zero:
    param: float
    residual: float
    derivative: float
    classification: str


@dataclass
class ZeroReport:
    """Zeros found on a Melnikov curve; ``status`` is ``"none-on-grid"`` when
    the list is empty."""

    zeros: List[Zero]
    zero_tol: float
    simple_floor: float

    @property
    def status(self) -> str:
        return "found" if self.zeros else "none-on-grid"

    @property
    def simple(self) -> List[Zero]:
        return [z for z in self.zeros if z.classification == "simple"]


def find_zeros(curve: MelnikovCurve, zero_tol: Optional[float] = None,
               simple_floor: Optional[float] = None,
               evaluator: Optional[Callable[[float], float]] = None) -> ZeroReport:
    """Locate and classify zeros of a scalar Melnikov curve.

    Sign changes between neighbouring grid points are refined with Brent's
    bracketing method (bisection combined with secant and inverse quadratic
    steps) on the re-evaluated function.  The derivative is a central
    difference with step ``spacing / 8``.  Grid points where ``|M| <
    zero_tol`` without a sign change are reported as degenerate.

    Defaults: ``zero_tol = 1e-8 A`` and ``simple_floor = 1e-4 A`` with
    ``A`` the curve amplitude ``max |M|``.
    """
    x = np.asarray(curve.params, dtype=float)
    y = np.asarray(curve.values, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise DomainError("find_zeros needs a scalar curve on a 1-d grid")
    f = evaluator or curve.evaluator
    if f is None:
        raise DomainError("no evaluator available to refine zeros")
    amp = float(np.max(np.abs(y))) if y.size else 0.0
    zero_tol = 1e-8 * amp if zero_tol is None else zero_tol
    simple_floor = 1e-4 * amp if simple_floor is None else simple_floor
    if amp == 0.0:
        return ZeroReport([], zero_tol, simple_floor)
    spacing = float(np.min(np.diff(x))) if x.size > 1 else 1.0
    h = spacing / 8.0
    found: List[Zero] = []

    def add(z):
        for other in found:
            if abs(other.param - z) < 1e-9 * max(1.0, abs(z)):
                return
        r = f(z)
        d = (f(z + h) - f(z - h)) / (2.0 * h)
        cls = "simple" if abs(d) > simple_floor else "degenerate"
        found.append(Zero(float(z), float(r), float(d), cls))

    for i in range(x.size - 1):
        a, b = y[i], y[i + 1]
        if a == 0.0:
            add(x[i])
        elif a * b < 0:
            z = brentq(f, x[i], x[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
            add(z)
    if y[-1] == 0.0:
        add(x[-1])
    # touching zeros without a sign change
    for i in range(x.size):
        if abs(y[i]) < zero_tol and y[i] != 0.0:
            left = y[i - 1] if i > 0 else None
            right = y[i + 1] if i + 1 < x.size else None
            if (left is None or left * y[i] > 0) and (right is None or right * y[i] > 0):
                add(x[i])
    found.sort(key=lambda z: z.param)
    return ZeroReport(found, zero_tol, simple_floor)
