"""ODE integration with dense output, section crossings and quadrature.

The workhorse is an explicit Dormand-Prince 5(4) pair with PI step-size
control and the pair's standard quartic dense output.  A fixed-step classical
RK4 (with cubic Hermite dense output) is available as a cross-check mode.

Every downstream quantity in the package is an integral along a solution
curve, so the module also provides

* :func:`detect_crossings` for root-resolved Poincare-section events,
* :func:`quadrature_along` which appends an accumulator to the state, and
* :func:`cumulative_integral` which does the same along a (possibly stitched)
  stored :class:`Trajectory` so that integrals over many nested windows can be
  read off from a single pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DegenerateCrossing, NonFinite, StepFailure

__all__ = [
    "PerturbedField",
    "Trajectory",
    "Segment",
    "Section",
    "CumulativeIntegral",
    "integrate",
    "detect_crossings",
    "find_crossings",
    "quadrature_along",
    "cumulative_integral",
    "concatenate",
    "fd_jacobian",
]

Array = np.ndarray

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [np.array(row) for row in [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between the 5th and embedded 4th order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# dense output weights (quartic continuous extension)
_D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
    -10690763975 / 1880347072, 701980252875 / 199316789632,
    -1453857185 / 822651844, 69997945 / 29380423,
])

# PI controller constants
_SAFE = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - 0.75 * _BETA
_FAC_MIN = 0.2
_FAC_MAX = 10.0
_H_MIN_REL = 1e-14
_SAMPLES_PER_STEP = 8
_BISECTIONS = 60
_TRANSVERSALITY = 1e-8


def fd_jacobian(f: Callable[[Array], Array], x: Array) -> Array:
    """Central-difference Jacobian with step ``max(1e-6, 1e-6 |x_i|)``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    f0 = np.asarray(f(x), dtype=float)
    J = np.empty((f0.size, n))
    for i in range(n):
        h = max(1e-6, 1e-6 * abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        J[:, i] = (np.asarray(f(xp)) - np.asarray(f(xm))) / (2 * h)
    return J


class PerturbedField:
    """Autonomous vector field ``X0 + epsilon * X1`` with Jacobian access.

    Parameters
    ----------
    dim : int
        State dimension ``n``.
    x0_rhs, x1_rhs : callable
        Maps ``x -> R^n`` for the unperturbed field and the perturbation.
    jac0, jac1 : callable, optional
        Analytic Jacobians of ``x0_rhs`` and ``x1_rhs``.  When absent, central
        finite differences are used.
    period : float, optional
        Forcing period for autonomized time-periodic systems.  The forcing
        phase is then carried as an extra state component (``angle_index``).
    epsilon : float
        Perturbation size used by :meth:`rhs` and :meth:`jacobian`.
    angle_index : int, optional
        Index of the phase component for time-periodic systems.
    name : str, optional
        Label used in diagnostics.
    """

    def __init__(
        self,
        dim: int,
        x0_rhs: Callable[[Array], Array],
        x1_rhs: Callable[[Array], Array],
        jac0: Optional[Callable[[Array], Array]] = None,
        jac1: Optional[Callable[[Array], Array]] = None,
        period: Optional[float] = None,
        epsilon: float = 0.0,
        angle_index: Optional[int] = None,
        name: str = "",
    ):
        if int(dim) <= 0:
            raise ValueError("dim must be positive")
        if period is not None and not (period > 0):
            raise ValueError("period must be strictly positive")
        if epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        self.dim = int(dim)
        self.x0_rhs = x0_rhs
        self.x1_rhs = x1_rhs
        self._jac0 = jac0
        self._jac1 = jac1
        self.period = None if period is None else float(period)
        self.epsilon = float(epsilon)
        self.angle_index = angle_index
        self.name = name

    def X0(self, x) -> Array:
        return np.asarray(self.x0_rhs(np.asarray(x, dtype=float)), dtype=float)

    def X1(self, x) -> Array:
        return np.asarray(self.x1_rhs(np.asarray(x, dtype=float)), dtype=float)

    def rhs(self, x) -> Array:
        """Full field ``X0(x) + epsilon X1(x)``."""
        x = np.asarray(x, dtype=float)
        out = self.X0(x)
        if self.epsilon != 0.0:
            out = out + self.epsilon * self.X1(x)
        return out

    __call__ = rhs

    def jac0(self, x) -> Array:
        if self._jac0 is not None:
            return np.asarray(self._jac0(np.asarray(x, dtype=float)), dtype=float)
        return fd_jacobian(self.X0, x)

    def jac1(self, x) -> Array:
        if self._jac1 is not None:
            return np.asarray(self._jac1(np.asarray(x, dtype=float)), dtype=float)
        return fd_jacobian(self.X1, x)

    def jacobian(self, x) -> Array:
        """Jacobian of the full field at the current ``epsilon``."""
        J = self.jac0(x)
        if self.epsilon != 0.0:
            J = J + self.epsilon * self.jac1(x)
        return J

    @property
    def has_analytic_jacobian(self) -> bool:
        return self._jac0 is not None

    def with_epsilon(self, epsilon: float) -> "PerturbedField":
        """Copy of the field with a different perturbation size."""
        return PerturbedField(
            self.dim, self.x0_rhs, self.x1_rhs, self._jac0, self._jac1,
            self.period, epsilon, self.angle_index, self.name,
        )

    def unperturbed(self) -> "PerturbedField":
        return self.with_epsilon(0.0)

    def __repr__(self):
        return f"PerturbedField(name={self.name!r}, dim={self.dim}, epsilon={self.epsilon:g})"


@dataclass
class Segment:
    """Provenance of one integrated piece of a :class:`Trajectory`.

    The piece was integrated with ``fun`` from ``(t_anchor, x_anchor)`` to
    ``t_end``; keeping this lets accumulators be co-integrated later along
    exactly the same curve.
    """

    fun: Callable[[float, Array], Array]
    t_anchor: float
    x_anchor: Array
    t_end: float
    tol: float
    method: str = "dopri5"
    atol: object = None

    @property
    def t_lo(self) -> float:
        return min(self.t_anchor, self.t_end)

    @property
    def t_hi(self) -> float:
        return max(self.t_anchor, self.t_end)


class Trajectory:
    """Solution curve with piecewise-polynomial dense output.

    Attributes
    ----------
    times : ndarray, shape (N+1,)
        Strictly increasing node times.
    states : ndarray, shape (N+1, n)
        States at the nodes.
    events : list of (float, ndarray)
        Section crossings, sorted by time.
    segments : list of Segment
        How the curve was produced (one entry per integration run).

    Notes
    -----
    On interval ``i`` the state is ``sum_j coef[i, j] * s**j`` with
    ``s = (t - t_start[i]) / h[i]``.  Evaluation at a node time returns the
    stored state exactly.
    """

    def __init__(self, times, states, t_start, h, coef, segments=None, events=None,
                 event_directions=None, field=None):
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=float)
        self._t_start = np.asarray(t_start, dtype=float)
        self._h = np.asarray(h, dtype=float)
        self._coef = np.asarray(coef, dtype=float)
        self.segments: list[Segment] = list(segments or [])
        self.events: list[tuple[float, Array]] = list(events or [])
        self.event_directions: list[int] = list(event_directions or [])
        self.field = field
        if self.times.ndim != 1 or self.states.shape[0] != self.times.size:
            raise ValueError("times/states shape mismatch")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def t_min(self) -> float:
        return float(self.times[0])

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    @property
    def span(self) -> float:
        return self.t_max - self.t_min

    @property
    def event_times(self) -> Array:
        return np.array([t for t, _ in self.events])

    def _locate(self, t: Array):
        t = np.asarray(t, dtype=float)
        slack = 1e-12 * max(1.0, abs(self.t_min), abs(self.t_max))
        if np.any(t < self.t_min - slack) or np.any(t > self.t_max + slack):
            raise ValueError(
                f"evaluation time outside trajectory span [{self.t_min}, {self.t_max}]")
        idx = np.searchsorted(self.times, t, side="right") - 1
        idx = np.clip(idx, 0, max(self.times.size - 2, 0))
        return t, idx

    def __call__(self, t):
        """Evaluate the dense output at scalar or array ``t``."""
        scalar = np.ndim(t) == 0
        if self.times.size == 1:
            t = np.asarray(t, dtype=float)
            self._locate(t)
            out = np.broadcast_to(self.states[0], t.shape + (self.dim,)).copy()
            return out[()] if not scalar else self.states[0].copy()
        t, idx = self._locate(np.atleast_1d(t))
        s = (t - self._t_start[idx]) / self._h[idx]
        c = self._coef[idx]  # (m, 5, n)
        y = c[:, 4]
        for j in (3, 2, 1, 0):
            y = c[:, j] + s[:, None] * y
        exact = self.times[idx] == t
        if np.any(exact):
            y[exact] = self.states[idx[exact]]
        last = t == self.times[-1]
        if np.any(last):
            y[last] = self.states[-1]
        return y[0] if scalar else y

    def derivative(self, t):
        """Time derivative of the dense output."""
        scalar = np.ndim(t) == 0
        if self.times.size == 1:
            raise ValueError("derivative undefined on a single-sample trajectory")
        t, idx = self._locate(np.atleast_1d(t))
        s = (t - self._t_start[idx]) / self._h[idx]
        c = self._coef[idx]
        y = 4 * c[:, 4]
        for j in (3, 2, 1):
            y = j * c[:, j] + s[:, None] * y
        y = y / self._h[idx][:, None]
        return y[0] if scalar else y

    def sample(self, n_per_step: int = 8):
        """Times and states on a uniform sub-grid of every step."""
        if self.times.size == 1:
            return self.times.copy(), self.states.copy()
        frac = np.arange(n_per_step) / n_per_step
        tt = (self.times[:-1, None] + np.diff(self.times)[:, None] * frac[None, :]).ravel()
        tt = np.append(tt, self.times[-1])
        return tt, self(tt)


def _rms(v: Array) -> float:
    return math.sqrt(float(np.mean(v * v))) if v.size else 0.0


def _check_finite(v: Array, where: str):
    if not np.all(np.isfinite(v)):
        raise NonFinite(f"non-finite value encountered in {where}")


def _initial_step(fun, t0, y0, f0, direction, span, tol, atol):
    sk = atol + tol * np.abs(y0)
    d0 = _rms(y0 / sk)
    d1 = _rms(f0 / sk)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + direction * h0 * f0
    f1 = np.asarray(fun(t0 + direction * h0, y1), dtype=float)
    _check_finite(f1, "right-hand side")
    d2 = _rms((f1 - f0) / sk) / h0
    dm = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
    return min(100 * h0, h1, span)


def _dopri5(fun, t0, y0, t1, tol, atol, h_init=None, h_max=None, max_steps=2_000_000):
    """Adaptive Dormand-Prince 5(4) run; returns raw per-step arrays."""
    span = abs(t1 - t0)
    h_max = span if h_max is None else min(abs(h_max), span)
    direction = 1.0 if t1 > t0 else -1.0
    h_min = _H_MIN_REL * span
    y = np.array(y0, dtype=float)
    n = y.size
    f = np.asarray(fun(t0, y), dtype=float)
    _check_finite(f, "right-hand side")
    h = abs(h_init) if h_init else _initial_step(fun, t0, y, f, direction, span, tol, atol)
    h = min(h, h_max)
    t = t0
    times, states, starts, hs, coefs = [t0], [y.copy()], [], [], []
    K = np.empty((7, n))
    facold = 1e-4
    reject = False
    for _ in range(max_steps):
        if direction * (t - t1) >= 0:
            break
        if h < h_min:
            raise StepFailure(f"step size {h:.3e} below minimum {h_min:.3e} at t={t:.17g}")
        last = False
        if direction * (t + direction * h - t1) >= 0 or abs(t1 - (t + direction * h)) < h_min:
            h = abs(t1 - t)
            last = True
        hs_ = direction * h
        K[0] = f
        for i in range(1, 7):
            yi = y + hs_ * np.dot(_A[i], K[:i])
            K[i] = fun(t + _C[i] * hs_, yi)
        # the last stage is evaluated at the 5th-order solution (FSAL)
        y_new = yi
        _check_finite(K, "right-hand side")
        err_vec = hs_ * np.dot(_E, K)
        sk = atol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / sk)
        if not math.isfinite(err):
            raise NonFinite("non-finite error estimate")
        fac11 = err ** _EXPO1 if err > 0 else 0.0
        if err <= 1.0:
            fac = fac11 / facold ** _BETA
            fac = max(1.0 / _FAC_MAX, min(1.0 / _FAC_MIN, fac / _SAFE))
            h_new = min(h / fac, h_max)
            facold = max(err, 1e-4)
            # dense output
            r1 = y
            r2 = y_new - y
            r3 = hs_ * K[0] - r2
            r4 = r2 - hs_ * K[6] - r3
            r5 = hs_ * np.dot(_D, K)
            c = np.empty((5, n))
            c[0] = r1
            c[1] = r2 + r3
            c[2] = -r3 + r4 + r5
            c[3] = -r4 - 2 * r5
            c[4] = r5
            t_new = t1 if last else t + hs_
            starts.append(t)
            hs.append(hs_)
            coefs.append(c)
            t = t_new
            y = y_new
            f = K[6].copy()
            times.append(t)
            states.append(y.copy())
            if reject:
                h_new = min(h_new, h)
            reject = False
            h = h_new
        else:
            h = h / min(1.0 / _FAC_MIN, fac11 / _SAFE)
            reject = True
    else:
        raise StepFailure(f"maximum number of steps ({max_steps}) exceeded")
    return times, states, starts, hs, coefs


def _rk4(fun, t0, y0, t1, h):
    """Fixed-step classical RK4 with cubic Hermite dense output."""
    span = abs(t1 - t0)
    nsteps = max(1, int(math.ceil(span / abs(h) - 1e-12)))
    hs_ = (t1 - t0) / nsteps
    y = np.array(y0, dtype=float)
    n = y.size
    f = np.asarray(fun(t0, y), dtype=float)
    times, states, starts, hs, coefs = [t0], [y.copy()], [], [], []
    for i in range(nsteps):
        t = t0 + i * hs_
        k1 = f
        k2 = np.asarray(fun(t + hs_ / 2, y + hs_ / 2 * k1))
        k3 = np.asarray(fun(t + hs_ / 2, y + hs_ / 2 * k2))
        k4 = np.asarray(fun(t + hs_, y + hs_ * k3))
        y_new = y + hs_ / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_finite(y_new, "right-hand side")
        f_new = np.asarray(fun(t + hs_, y_new), dtype=float)
        dy = y_new - y
        c = np.zeros((5, n))
        c[0] = y
        c[1] = hs_ * f
        c[2] = 3 * dy - hs_ * (2 * f + f_new)
        c[3] = -2 * dy + hs_ * (f + f_new)
        t_new = t1 if i == nsteps - 1 else t0 + (i + 1) * hs_
        starts.append(t)
        hs.append(hs_)
        coefs.append(c)
        times.append(t_new)
        states.append(y_new.copy())
        y, f = y_new, f_new
    return times, states, starts, hs, coefs


def _solve(fun, t0, y0, t1, tol, method="dopri5", h=None, field=None, atol=None,
           h_max=None) -> Trajectory:
    if not (tol > 0):
        raise ValueError("tol must be positive")
    y0 = np.array(y0, dtype=float)
    _check_finite(y0, "initial state")
    atol_arr = np.broadcast_to(np.asarray(tol if atol is None else atol, dtype=float),
                               y0.shape).copy()
    if np.any(atol_arr <= 0):
        raise ValueError("atol must be positive")
    seg = Segment(fun, float(t0), y0.copy(), float(t1), float(tol), method, atol_arr)
    if t1 == t0:
        return Trajectory([t0], [y0], np.empty(0), np.empty(0), np.empty((0, 5, y0.size)),
                          segments=[seg], field=field)
    if method == "dopri5":
        times, states, starts, hs, coefs = _dopri5(fun, t0, y0, t1, tol, atol_arr,
                                                   h_init=h, h_max=h_max)
    elif method == "rk4":
        step = h if h else min(0.05, tol ** 0.25)
        times, states, starts, hs, coefs = _rk4(fun, t0, y0, t1, step)
    else:
        raise ValueError(f"unknown method {method!r}")
    if t1 < t0:
        times, states = times[::-1], states[::-1]
        starts, hs, coefs = starts[::-1], hs[::-1], coefs[::-1]
    return Trajectory(times, states, starts, hs, np.array(coefs), segments=[seg], field=field)


def integrate(field: PerturbedField, x0, t0: float, t1: float, tol: float = 1e-10,
              method: str = "dopri5", h: Optional[float] = None, atol=None,
              h_max: Optional[float] = None) -> Trajectory:
    """Integrate ``x' = X0(x) + epsilon X1(x)`` from ``t0`` to ``t1``.

    Parameters
    ----------
    field : PerturbedField
    x0 : array_like
        Initial state at ``t0``.
    t0, t1 : float
        Start and end times; ``t1 < t0`` integrates backward.
    tol : float
        Relative tolerance of the embedded error estimate (also the absolute
        tolerance unless ``atol`` is given).  The error norm is the RMS of
        ``err_i / (atol_i + tol * |y_i|)``.
    method : {"dopri5", "rk4"}
        Adaptive 5(4) pair (default) or fixed-step RK4 cross-check.
    h : float, optional
        Initial step (dopri5) or fixed step (rk4).
    atol : float or array_like, optional
        Absolute tolerance, scalar or per component.  Orbits that creep
        towards a saddle need ``atol`` well below the distance to the saddle,
        otherwise the error turns into a phase shift along the orbit.
    h_max : float, optional
        Largest step the adaptive controller may take.

    Returns
    -------
    Trajectory
        Covers ``[min(t0, t1), max(t0, t1)]``.

    Raises
    ------
    StepFailure
        If the step size underflows ``1e-14 * |t1 - t0|``.
    NonFinite
        If the right-hand side produces NaN or Inf.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (field.dim,):
        raise ValueError(f"initial state has shape {x0.shape}, expected ({field.dim},)")
    fun = _autonomous(field)
    return _solve(fun, float(t0), x0, float(t1), tol, method, h, field=field, atol=atol,
                  h_max=h_max)


def _autonomous(field: PerturbedField):
    rhs = field.rhs

    def fun(t, y):
        return rhs(y)

    return fun


@dataclass
class Section:
    """Hypersurface ``level_fn(x) = 0`` with a crossing orientation.

    ``direction`` is ``+1`` (level increasing), ``-1`` (decreasing) or
    ``0`` / ``"both"``.
    """

    level_fn: Callable[[Array], float]
    direction: Union[int, str] = 0

    def __post_init__(self):
        if self.direction == "both":
            self.direction = 0
        if self.direction not in (-1, 0, 1):
            raise ValueError("direction must be +1, -1 or 'both'")

    def levels(self, states: Array) -> Array:
        return np.array([float(self.level_fn(s)) for s in np.atleast_2d(states)])


def find_crossings(traj: Trajectory, section: Section, t_lo: Optional[float] = None,
                   t_hi: Optional[float] = None, check_transversal: bool = True):
    """Locate crossings of ``section`` on the dense output of ``traj``.

    Returns a list of ``(time, state, direction)`` sorted by time.
    """
    if traj.times.size < 2:
        return []
    t_lo = traj.t_min if t_lo is None else max(t_lo, traj.t_min)
    t_hi = traj.t_max if t_hi is None else min(t_hi, traj.t_max)
    tt, xs = traj.sample(_SAMPLES_PER_STEP)
    keep = (tt >= t_lo) & (tt <= t_hi)
    tt, xs = tt[keep], xs[keep]
    if tt.size < 2:
        return []
    g = section.levels(xs)
    pos = g >= 0.0  # exact zeros count as the positive side
    out = []

    def level(t):
        return float(section.level_fn(traj(t)))

    # an exact zero at the very first sample is an event if the flow leaves
    # in the requested direction
    if g[0] == 0.0 and g.size > 1:
        d = 1 if g[1] > 0 else (-1 if g[1] < 0 else 0)
        if d != 0 and section.direction in (0, d):
            out.append((float(tt[0]), d))
    idx = np.nonzero(pos[1:] != pos[:-1])[0]
    for i in idx:
        if i == 0 and g[0] == 0.0:
            continue  # handled above
        d = 1 if pos[i + 1] else -1
        if section.direction not in (0, d):
            continue
        a, b = float(tt[i]), float(tt[i + 1])
        ga = g[i]
        for _ in range(_BISECTIONS):
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            gm = level(m)
            if (gm >= 0.0) == (ga >= 0.0):
                a, ga = m, gm
            else:
                b = m
        tc = b if level(b) == 0.0 else (a if abs(ga) < abs(level(b)) else b)
        out.append((tc, d))
    results = []
    for tc, d in sorted(out):
        x = traj(tc)
        if check_transversal:
            _check_transversal(traj, section, tc)
        results.append((tc, x, d))
    return results


def _check_transversal(traj: Trajectory, section: Section, tc: float):
    k = int(np.clip(np.searchsorted(traj.times, tc) - 1, 0, traj.times.size - 2))
    hstep = traj.times[k + 1] - traj.times[k]
    delta = 1e-5 * hstep
    a = max(tc - delta, traj.t_min)
    b = min(tc + delta, traj.t_max)
    slope = (section.level_fn(traj(b)) - section.level_fn(traj(a))) / (b - a)
    scale = max(1.0, float(np.max(np.abs(traj.derivative(tc)))))
    if abs(slope) < _TRANSVERSALITY * scale:
        raise DegenerateCrossing(
            f"crossing at t={tc:.17g} is not transversal (|dg/dt|={abs(slope):.3e})")


def detect_crossings(field: PerturbedField, x0, section: Section, t0: float, t1: float,
                     tol: float = 1e-10, method: str = "dopri5",
                     h_max: Optional[float] = None, atol=None) -> Trajectory:
    """Integrate and record every crossing of ``section``.

    Crossings are bracketed by sign changes of ``level_fn`` on the dense
    output sampled at 8 points per step, then refined by 60 bisections.
    Steps are capped at ``h_max`` (default: 1/64 of the span, but at least
    one time unit) so that linear or nearly linear flows, on which the error
    controller would otherwise take a single huge step, are still sampled
    finely enough to separate neighbouring crossings.

    Raises
    ------
    DegenerateCrossing
        If ``|d level/dt|`` at a crossing is below ``1e-8`` times the field
        scale.
    """
    if h_max is None:
        h_max = max(abs(t1 - t0) / 64.0, 1.0)
    traj = integrate(field, x0, t0, t1, tol, method, atol=atol, h_max=h_max)
    found = find_crossings(traj, section)
    traj.events = [(t, x) for t, x, _ in found]
    traj.event_directions = [d for _, _, d in found]
    return traj


def _augment(fun, integrand, n):
    def aug(t, y):
        x = y[:n]
        return np.concatenate([np.asarray(fun(t, x), dtype=float),
                               np.atleast_1d(np.asarray(integrand(t, x), dtype=float))])

    return aug


def quadrature_along(field: PerturbedField, x0, integrand: Callable[[float, Array], float],
                     t0: float, t1: float, tol: float = 1e-10, method: str = "dopri5",
                     atol=None):
    """Integral of ``integrand(t, x(t))`` along the solution from ``x0``.

    The integral is appended to the state as extra accumulator components,
    so it is controlled by the same error estimate as the orbit.  Vector
    valued integrands are supported and give a vector result.  ``atol`` (if
    given) applies to the state components; accumulators use ``tol``.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if t1 == t0:
        probe = np.atleast_1d(np.asarray(integrand(t0, x0), dtype=float))
        return 0.0 if (np.ndim(integrand(t0, x0)) == 0) else np.zeros_like(probe)
    probe = np.asarray(integrand(t0, x0), dtype=float)
    m = max(probe.size, 1)
    aug = _augment(_autonomous(field), integrand, n)
    y0 = np.concatenate([x0, np.zeros(m)])
    atol_aug = None
    if atol is not None:
        atol_aug = np.concatenate([np.broadcast_to(atol, (n,)), np.full(m, tol)])
    traj = _solve(aug, float(t0), y0, float(t1), tol, method, atol=atol_aug)
    end = traj.states[-1] if t1 > t0 else traj.states[0]
    val = end[n:]
    return float(val[0]) if probe.ndim == 0 else val.reshape(probe.shape)


class CumulativeIntegral:
    """``t -> int_{t_ref}^{t} f(s, x(s)) ds`` along a stored trajectory.

    Built by :func:`cumulative_integral`.  Call with a time (or array of
    times) to get the cumulative value; :meth:`between` gives ``int_a^b``.
    """

    def __init__(self, pieces, offsets, shape):
        self._pieces = pieces  # list of (t_lo, t_hi, Trajectory, n)
        self._offsets = offsets
        self.shape = shape
        self.t_min = pieces[0][0]
        self.t_max = pieces[-1][1]

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((tt.size, int(np.prod(self.shape)) if self.shape else 1))
        bounds = np.array([p[1] for p in self._pieces])
        which = np.clip(np.searchsorted(bounds, tt, side="left"), 0, len(self._pieces) - 1)
        for j in np.unique(which):
            sel = which == j
            lo, hi, tr, n = self._pieces[j]
            out[sel] = tr(np.clip(tt[sel], lo, hi))[:, n:] + self._offsets[j]
        out = out.reshape((tt.size,) + self.shape)
        return out[0] if scalar else out

    def between(self, a, b):
        return self(b) - self(a)


def cumulative_integral(traj: Trajectory, integrand: Callable[[float, Array], Array],
                        tol: Optional[float] = None) -> CumulativeIntegral:
    """Co-integrate ``integrand`` along every segment of ``traj``.

    Each segment is re-integrated from its anchor with accumulator
    components appended, and the per-segment integrals are joined so that
    the result is continuous and zero at ``traj.t_min``.
    """
    if not traj.segments:
        raise ValueError("trajectory carries no segment provenance")
    segs = sorted(traj.segments, key=lambda s: s.t_lo)
    x_probe = np.asarray(segs[0].x_anchor, dtype=float)
    n = x_probe.size
    probe = np.asarray(integrand(segs[0].t_anchor, x_probe), dtype=float)
    shape = probe.shape
    m = max(probe.size, 1)
    pieces, offsets = [], []
    running = np.zeros(m)
    for seg in segs:
        aug = _augment(seg.fun, lambda t, x: np.ravel(integrand(t, x)), n)
        y0 = np.concatenate([seg.x_anchor, np.zeros(m)])
        rtol = tol or seg.tol
        atol_aug = np.concatenate([seg.atol if seg.atol is not None else np.full(n, rtol),
                                   np.full(m, rtol)])
        tr = _solve(aug, seg.t_anchor, y0, seg.t_end, rtol, seg.method, atol=atol_aug)
        # tr's accumulator is int_{t_anchor}^{t}; shift so it is continuous
        at_lo = tr(seg.t_lo)[n:]
        offsets.append(running - at_lo)
        running = running + (tr(seg.t_hi)[n:] - at_lo)
        pieces.append((seg.t_lo, seg.t_hi, tr, n))
    return CumulativeIntegral(pieces, offsets, shape)


def concatenate(trajs: Sequence[Trajectory]) -> Trajectory:
    """Join trajectories whose spans abut into one stitched curve.

    Shared endpoint times keep the state of the earlier piece.  Segment
    provenance and events are merged.
    """
    trajs = sorted(trajs, key=lambda tr: tr.t_min)
    times, states, starts, hs, coefs, segs, events, dirs = [], [], [], [], [], [], [], []
    for j, tr in enumerate(trajs):
        if j > 0:
            gap = tr.t_min - trajs[j - 1].t_max
            if abs(gap) > 1e-12 * max(1.0, abs(tr.t_min)):
                raise ValueError("trajectories do not abut")
        t = list(tr.times)
        s = list(tr.states)
        if j > 0:
            t, s = t[1:], s[1:]
        times += t
        states += s
        starts += list(tr._t_start)
        hs += list(tr._h)
        coefs += list(tr._coef)
        segs += tr.segments
        events += tr.events
        dirs += tr.event_directions
    order = np.argsort([e[0] for e in events]) if events else []
    return Trajectory(times, states, starts, hs, np.array(coefs), segments=segs,
                      events=[events[i] for i in order],
                      event_directions=[dirs[i] for i in order] if dirs else [],
                      field=trajs[0].field)
