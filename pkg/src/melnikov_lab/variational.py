"""Variational and adjoint variational equations along stored orbits.

The variational equation (VE) ``U' = DX(x(t)) U`` and its adjoint (AVE)
``eta' = -DX(x(t))^T eta`` are always co-integrated with the base orbit, so
Jacobians are evaluated on the integrator's own stages rather than on an
interpolated orbit.  The module also builds cotangent lifts and evaluates Lie
and Poisson brackets in coordinates.

Bracket convention: ``[X, Z] = DZ . X - DX . Z``.  With the canonical
bracket ``{f, g} = f_p . g_x - f_x . g_p`` this makes the lifted functions
``h_X(x, p) = <p, X(x)>`` satisfy ``{h_X, h_Z} = h_[X,Z]`` exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Union

import numpy as np

from .errors import MultiplicityWarning, NoUnitEigenvalue
from .ode import PerturbedField, Trajectory, _solve, fd_jacobian

__all__ = [
    "MatrixPath",
    "CovectorPath",
    "CommutingField",
    "ve_matrix",
    "ave_matrix",
    "solve_ve",
    "solve_ave",
    "monodromy",
    "adjoint_monodromy",
    "periodic_adjoint",
    "cotangent_lift",
    "lie_bracket",
    "lifted_hamiltonian",
    "poisson_bracket",
]

Array = np.ndarray


def ve_matrix(field: PerturbedField, x) -> Array:
    """Coefficient matrix of the VE at ``x``: the field Jacobian."""
    return field.jacobian(x)


def ave_matrix(field: PerturbedField, x) -> Array:
    """Coefficient matrix of the AVE at ``x``: minus the transposed Jacobian."""
    return -ve_matrix(field, x).T


class MatrixPath:
    """Fundamental matrix solution ``U(t)`` with ``U(t0) = I``.

    Call with a time to get the ``n x n`` matrix; :attr:`base` gives the
    co-integrated orbit.
    """

    def __init__(self, aug: Trajectory, n: int, t0: float, t1: float):
        self._aug = aug
        self.n = n
        self.t0 = t0
        self.t1 = t1

    def __call__(self, t):
        y = self._aug(t)
        n = self.n
        return y[..., n:].reshape(np.shape(y)[:-1] + (n, n))

    def base(self, t):
        return self._aug(t)[..., : self.n]

    @property
    def times(self) -> Array:
        return self._aug.times

    @property
    def final(self) -> Array:
        """``U(t1)``; the monodromy matrix when ``t1 - t0`` is a period."""
        return self(self.t1)

    @property
    def base_trajectory(self) -> Trajectory:
        return self._aug


class CovectorPath:
    """AVE solution ``eta(t)`` along an orbit, with dense interpolation.

    ``CovectorPath`` may be stitched from several integration runs (one per
    orbit segment).  Call with a time (or array) to evaluate.
    """

    def __init__(self, pieces, n: int):
        self._pieces = sorted(pieces, key=lambda p: p[0])  # (t_lo, t_hi, Trajectory)
        self.n = n
        self.t_min = self._pieces[0][0]
        self.t_max = self._pieces[-1][1]

    def _eval(self, t, part):
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((tt.size, self.n))
        his = np.array([p[1] for p in self._pieces])
        which = np.clip(np.searchsorted(his, tt, side="left"), 0, len(self._pieces) - 1)
        for j in np.unique(which):
            sel = which == j
            lo, hi, tr = self._pieces[j]
            y = tr(np.clip(tt[sel], lo, hi))
            out[sel] = y[:, self.n:] if part == "eta" else y[:, : self.n]
        return out[0] if scalar else out

    def __call__(self, t):
        return self._eval(t, "eta")

    def base(self, t):
        return self._eval(t, "x")

    @property
    def times(self) -> Array:
        return np.unique(np.concatenate([p[2].times for p in self._pieces]))

    def scaled(self, c: float) -> "CovectorPath":
        """Path for ``c * eta`` (the AVE is linear)."""
        return _ScaledCovectorPath(self, c)


class _ScaledCovectorPath(CovectorPath):
    def __init__(self, inner: CovectorPath, c: float):
        self._inner = inner
        self._c = float(c)
        self.n = inner.n
        self.t_min = inner.t_min
        self.t_max = inner.t_max

    def __call__(self, t):
        return self._c * self._inner(t)

    def base(self, t):
        return self._inner.base(t)

    @property
    def times(self):
        return self._inner.times


@dataclass
class CommutingField:
    """A candidate commuting vector field ``Z`` with optional Jacobian."""

    rhs: Callable[[Array], Array]
    jac: Optional[Callable[[Array], Array]] = None
    name: str = ""

    def __call__(self, x) -> Array:
        return np.asarray(self.rhs(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x) -> Array:
        if self.jac is not None:
            return np.asarray(self.jac(np.asarray(x, dtype=float)), dtype=float)
        return fd_jacobian(self, x)


def _single_segment(orbit: Trajectory):
    if len(orbit.segments) != 1:
        raise ValueError("orbit must come from a single integration run")
    return orbit.segments[0]


def _ve_rhs(field: PerturbedField, n: int):
    rhs, jac = field.rhs, field.jacobian

    def fun(t, y):
        x = y[:n]
        U = y[n:].reshape(n, n)
        return np.concatenate([rhs(x), (jac(x) @ U).ravel()])

    return fun


def _ave_rhs(field: PerturbedField, n: int, m: int):
    rhs, jac = field.rhs, field.jacobian

    def fun(t, y):
        x = y[:n]
        eta = y[n:].reshape(n, m)
        return np.concatenate([rhs(x), (-(jac(x).T) @ eta).ravel()])

    return fun


def _atol_for(seg, n, m, tol):
    base = seg.atol if seg.atol is not None else np.full(n, tol)
    return np.concatenate([base, np.full(m, tol)])


def solve_ve(field: PerturbedField, orbit: Trajectory, tol: float = 1e-10) -> MatrixPath:
    """Fundamental solution of the VE along ``orbit``.

    The orbit is re-integrated from its anchor together with the ``n x n``
    matrix (augmented dimension ``n + n**2``).

    Parameters
    ----------
    field : PerturbedField
        The field whose Jacobian defines the VE (its current ``epsilon`` is
        used, so pass the unperturbed field for the unperturbed VE).
    orbit : Trajectory
        Single-run trajectory of ``field``; the VE starts at its anchor.
    tol : float
        Integrator tolerance.
    """
    seg = _single_segment(orbit)
    n = field.dim
    y0 = np.concatenate([seg.x_anchor, np.eye(n).ravel()])
    aug = _solve(_ve_rhs(field, n), seg.t_anchor, y0, seg.t_end, tol,
                 atol=_atol_for(seg, n, n * n, tol))
    return MatrixPath(aug, n, seg.t_anchor, seg.t_end)


def solve_ave(field: PerturbedField, orbit: Trajectory, eta0, tol: float = 1e-10) -> CovectorPath:
    """Solve the AVE ``eta' = -DX^T eta`` along ``orbit``.

    Parameters
    ----------
    field : PerturbedField
    orbit : Trajectory
        Base orbit.  Stitched orbits (several segments) are supported when
        ``eta0`` is a callable.
    eta0 : array_like or callable
        Initial covector at the anchor of a single-run orbit, or a function
        ``eta0(t, x)`` giving the covector at each segment anchor.
    tol : float
    """
    n = field.dim
    segs = orbit.segments
    if not callable(eta0) and len(segs) != 1:
        raise ValueError("stitched orbits need eta0 as a callable of (t, x)")
    pieces = []
    fun = _ave_rhs(field, n, 1)
    for seg in segs:
        e0 = eta0(seg.t_anchor, seg.x_anchor) if callable(eta0) else eta0
        e0 = np.asarray(e0, dtype=float).reshape(n)
        y0 = np.concatenate([seg.x_anchor, e0])
        tr = _solve(fun, seg.t_anchor, y0, seg.t_end, tol, atol=_atol_for(seg, n, n, tol))
        pieces.append((seg.t_lo, seg.t_hi, tr))
    return CovectorPath(pieces, n)


def monodromy(field: PerturbedField, orbit: Trajectory, period: Optional[float] = None,
              tol: float = 1e-10) -> Array:
    """VE fundamental matrix after one period (or the whole orbit)."""
    seg = _single_segment(orbit)
    if period is not None:
        orbit = _retime(orbit, seg, period)
    return solve_ve(field, orbit, tol).final


def adjoint_monodromy(field: PerturbedField, orbit: Trajectory, period: Optional[float] = None,
                      tol: float = 1e-10) -> Array:
    """Fundamental matrix of the AVE after one period."""
    seg = _single_segment(orbit)
    if period is not None:
        orbit = _retime(orbit, seg, period)
        seg = orbit.segments[0]
    n = field.dim
    y0 = np.concatenate([seg.x_anchor, np.eye(n).ravel()])
    aug = _solve(_ave_rhs(field, n, n), seg.t_anchor, y0, seg.t_end, tol,
                 atol=_atol_for(seg, n, n * n, tol))
    y = aug(seg.t_end)
    return y[n:].reshape(n, n)


def _retime(orbit: Trajectory, seg, period: float) -> Trajectory:
    """A stand-in trajectory whose single segment spans exactly one period."""
    from .ode import Segment

    t_end = seg.t_anchor + (period if seg.t_end >= seg.t_anchor else -period)
    stub = Trajectory([orbit.t_min], [orbit.states[0]], np.empty(0), np.empty(0),
                      np.empty((0, 5, orbit.dim)))
    stub.segments = [Segment(seg.fun, seg.t_anchor, seg.x_anchor, t_end, seg.tol, seg.method,
                             seg.atol)]
    return stub


def _closure_error(field: PerturbedField, x0: Array, x1: Array) -> float:
    d = np.asarray(x1, dtype=float) - np.asarray(x0, dtype=float)
    if field.angle_index is not None and field.period is not None:
        T = field.period
        a = d[field.angle_index]
        d[field.angle_index] = a - T * np.round(a / T)
    return float(np.max(np.abs(d)))


def _normalize(v: Array) -> Array:
    v = v / np.linalg.norm(v)
    thresh = 1e-10 * np.max(np.abs(v))
    for c in v:
        if abs(c) > thresh:
            return v if c > 0 else -v
    return v


def periodic_adjoint(field: PerturbedField, periodic_orbit: Trajectory, period: float,
                     tol: float = 1e-11, null_rtol: float = 1e-6) -> List[CovectorPath]:
    """Periodic solutions of the AVE along a closed orbit.

    The adjoint monodromy ``M`` is computed over one period; the covectors
    ``eta0`` with ``M eta0 = eta0`` form the right null space of ``M - I``,
    taken from its SVD (singular values below ``null_rtol * max(1, |M|)``).
    Each basis covector is normalised to unit length with its first
    non-negligible component positive, then propagated over one period.

    Returns
    -------
    list of CovectorPath
        One path per basis covector.  A :class:`MultiplicityWarning` is
        issued when more than one is returned.

    Raises
    ------
    NoUnitEigenvalue
        If no eigenvalue of ``M`` lies within ``1e-6`` of one.
    ValueError
        If the orbit does not close after ``period``.
    """
    seg = _single_segment(periodic_orbit)
    if abs(period) <= 0:
        raise ValueError("period must be nonzero")
    x0 = seg.x_anchor
    xT = periodic_orbit(seg.t_anchor + period)
    scale = max(1.0, float(np.max(np.abs(periodic_orbit.states))))
    err = _closure_error(field, x0, xT)
    if err > 1e-8 * scale:
        raise ValueError(f"orbit does not close after the given period (error {err:.3e})")
    M = adjoint_monodromy(field, periodic_orbit, period, tol)
    eig = np.linalg.eigvals(M)
    dist = np.abs(eig - 1.0)
    if dist.min() >= 1e-6:
        raise NoUnitEigenvalue(
            f"no adjoint monodromy eigenvalue within 1e-6 of 1 (closest at distance {dist.min():.3e})")
    n = M.shape[0]
    _, s, vh = np.linalg.svd(M - np.eye(n))
    thresh = null_rtol * max(1.0, float(np.linalg.norm(M, 2)))
    k = int(np.sum(s < thresh))
    if k == 0:
        k = 1  # eigenvalue is within 1e-6 but the null space is ill-resolved
    basis = [_normalize(vh[-j]) for j in range(1, k + 1)]
    if k > 1:
        warnings.warn(
            f"eigenvalue one of the adjoint monodromy has a {k}-dimensional eigenspace; "
            "returning a basis", MultiplicityWarning, stacklevel=2)
    orbit1 = _retime(periodic_orbit, seg, period)
    return [solve_ave(field, orbit1, v, tol) for v in basis]


def cotangent_lift(field: PerturbedField) -> PerturbedField:
    """Cotangent lift on ``(x, p)``: ``x' = X(x)``, ``p' = -DX(x)^T p``.

    The split ``X0 + eps X1`` is lifted term by term.  The lifted Jacobians
    fall back to finite differences.
    """
    n = field.dim

    def lift0(z):
        x, p = z[:n], z[n:]
        return np.concatenate([field.X0(x), -field.jac0(x).T @ p])

    def lift1(z):
        x, p = z[:n], z[n:]
        return np.concatenate([field.X1(x), -field.jac1(x).T @ p])

    return PerturbedField(2 * n, lift0, lift1, period=field.period, epsilon=field.epsilon,
                          angle_index=field.angle_index, name=f"lift({field.name})")


FieldLike = Union[PerturbedField, CommutingField, Callable[[Array], Array]]


def _as_pair(f: FieldLike):
    if isinstance(f, PerturbedField):
        return f.rhs, f.jacobian
    if isinstance(f, CommutingField):
        return f, f.jacobian
    return (lambda x: np.asarray(f(x), dtype=float)), (lambda x: fd_jacobian(f, x))


def lie_bracket(a: FieldLike, b: FieldLike, x) -> Array:
    """Lie bracket ``[a, b](x) = Db(x) a(x) - Da(x) b(x)``.

    ``a`` and ``b`` may be :class:`PerturbedField` (full field at its
    ``epsilon``), :class:`CommutingField` or plain callables (finite
    difference Jacobians).
    """
    x = np.asarray(x, dtype=float)
    fa, ja = _as_pair(a)
    fb, jb = _as_pair(b)
    return jb(x) @ fa(x) - ja(x) @ fb(x)


def lifted_hamiltonian(Z: FieldLike) -> Callable[[Array], float]:
    """``h_Z(x, p) = <p, Z(x)>`` as a function of the stacked state."""
    fz, _ = _as_pair(Z)

    def h(z):
        z = np.asarray(z, dtype=float)
        n = z.size // 2
        return float(z[n:] @ fz(z[:n]))

    return h


def _grad(f, z, rel=1e-5):
    z = np.asarray(z, dtype=float)
    g = np.empty_like(z)
    for i in range(z.size):
        h = rel * max(1.0, abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (f(zp) - f(zm)) / (2 * h)
    return g


def poisson_bracket(f: Callable[[Array], float], g: Callable[[Array], float], z) -> float:
    """Canonical bracket ``{f, g} = f_p . g_x - f_x . g_p`` by central differences.

    ``z`` is the stacked ``(x, p)`` with equal halves.
    """
    z = np.asarray(z, dtype=float)
    n = z.size // 2
    df = _grad(f, z)
    dg = _grad(g, z)
    return float(df[n:] @ dg[:n] - df[:n] @ dg[n:])
