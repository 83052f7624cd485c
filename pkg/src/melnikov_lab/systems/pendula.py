"""Two identical pendula coupled through a harmonic oscillator.

Action-angle form on the state ``(x1, x2, x3, x4, I, theta)``::

    x1' = x3,  x3' = -sin x1 - eps A sin(theta) sin x1
    x2' = x4,  x4' = -sin x2 - eps A sin(theta) sin x2
    I'  = eps A cos(theta) (cos x1 + cos x2)
    theta' = omega0 - eps sin(theta) (cos x1 + cos x2) / sqrt(2 omega0 I)

with ``A = sqrt(2 I / omega0)``.  The unperturbed Hamiltonian is
``H0 = -cos x1 - cos x2 + (x3^2 + x4^2) / 2 + omega0 I`` and the perturbation
Hamiltonian ``H1 = -A sin(theta) (cos x1 + cos x2)``.

The Cartesian oscillator coordinates are recovered through
``y1 = A sin(theta)``, ``y2 = sqrt(2 omega0 I) cos(theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..integrals import ScalarIntegral
from ..ode import PerturbedField
from ..special import csch, sech

TWO_PI = 2.0 * math.pi
SADDLE_X = np.array([math.pi, math.pi, 0.0, 0.0])


@dataclass(frozen=True)
class PendulaConfig:
    """Parameters of the coupled pendula.

    Attributes
    ----------
    omega0 : float
        Oscillator frequency (positive).
    action_angle : bool
        Informational flag; the field is always built in action-angle form,
        see :func:`to_cartesian` / :func:`from_cartesian` for the transform.
    """

    omega0: float = 1.0
    action_angle: bool = True

    def __post_init__(self):
        if not self.omega0 > 0:
            raise DomainError("omega0 must be positive")


def _amp(I, omega0: float):
    if isinstance(I, (float, int, np.floating)):
        if not I > 0:
            raise DomainError(f"action I must be positive, got {I!r}")
        return math.sqrt(2.0 * I / omega0)
    Ia = np.asarray(I, dtype=float)
    if not np.all(Ia > 0):
        raise DomainError(f"action I must be positive, got {I!r}")
    out = np.sqrt(2.0 * Ia / omega0)
    return float(out) if out.ndim == 0 else out


def pendula_field(cfg: PendulaConfig, epsilon: float = 0.0) -> PerturbedField:
    """Action-angle field; the angle ``theta`` (index 5) lives on ``R / 2 pi Z``."""
    w0 = cfg.omega0

    def x0(x):
        return np.array([x[2], x[3], -math.sin(x[0]), -math.sin(x[1]), 0.0, w0])

    def x1(x):
        A = _amp(x[4], w0)
        st, ct = math.sin(x[5]), math.cos(x[5])
        cs = math.cos(x[0]) + math.cos(x[1])
        return np.array([0.0, 0.0,
                         -A * st * math.sin(x[0]),
                         -A * st * math.sin(x[1]),
                         A * ct * cs,
                         -st * cs / (w0 * A)])

    def j0(x):
        J = np.zeros((6, 6))
        J[0, 2] = J[1, 3] = 1.0
        J[2, 0] = -math.cos(x[0])
        J[3, 1] = -math.cos(x[1])
        return J

    def j1(x):
        I = x[4]
        A = _amp(I, w0)
        dA = A / (2.0 * I)
        s1, s2 = math.sin(x[0]), math.sin(x[1])
        c1, c2 = math.cos(x[0]), math.cos(x[1])
        st, ct = math.sin(x[5]), math.cos(x[5])
        cs = c1 + c2
        B = 1.0 / (w0 * A)
        dB = -B / (2.0 * I)
        J = np.zeros((6, 6))
        J[2, 0] = -A * st * c1
        J[2, 4] = -dA * st * s1
        J[2, 5] = -A * ct * s1
        J[3, 1] = -A * st * c2
        J[3, 4] = -dA * st * s2
        J[3, 5] = -A * ct * s2
        J[4, 0] = -A * ct * s1
        J[4, 1] = -A * ct * s2
        J[4, 4] = dA * ct * cs
        J[4, 5] = -A * st * cs
        J[5, 0] = st * s1 * B
        J[5, 1] = st * s2 * B
        J[5, 4] = -st * cs * dB
        J[5, 5] = -ct * cs * B
        return J

    return PerturbedField(6, x0, x1, j0, j1, period=TWO_PI, epsilon=epsilon, angle_index=5,
                          name="pendula")


def H0(cfg: PendulaConfig) -> ScalarIntegral:
    """Unperturbed Hamiltonian."""
    w0 = cfg.omega0

    def f(x):
        return -math.cos(x[0]) - math.cos(x[1]) + 0.5 * (x[2] ** 2 + x[3] ** 2) + w0 * x[4]

    def g(x):
        return np.array([math.sin(x[0]), math.sin(x[1]), x[2], x[3], w0, 0.0])

    return ScalarIntegral(f, g, "H0")


def H1(cfg: PendulaConfig):
    """Perturbation Hamiltonian ``-A sin(theta) (cos x1 + cos x2)`` as a callable."""
    w0 = cfg.omega0

    def f(x):
        return -_amp(x[4], w0) * math.sin(x[5]) * (math.cos(x[0]) + math.cos(x[1]))

    return f


def pendulum_integral(cfg: PendulaConfig, which: int = 2) -> ScalarIntegral:
    """Energy of one pendulum: ``F2 = -cos x1 + x3^2/2`` (``which=2``) or the
    second pendulum ``-cos x2 + x4^2/2`` (``which=3``)."""
    if which == 2:
        i, j = 0, 2
    elif which == 3:
        i, j = 1, 3
    else:
        raise DomainError("which must be 2 or 3")

    def f(x):
        return -math.cos(x[i]) + 0.5 * x[j] ** 2

    def g(x):
        out = np.zeros(len(x))
        out[i] = math.sin(x[i])
        out[j] = x[j]
        return out

    return ScalarIntegral(f, g, f"F{which}")


def action_integral() -> ScalarIntegral:
    """The action ``I``, conserved by the unperturbed flow."""

    def g(x):
        out = np.zeros(len(x))
        out[4] = 1.0
        return out

    return ScalarIntegral(lambda x: float(x[4]), g, "I")


def _sep_angle(t):
    """``2 arcsin(tanh t)`` in the form ``sign(t) (pi - 4 atan(exp(-|t|)))``.

    The rewrite keeps full relative accuracy in the distance to the saddle
    ``pi`` for large ``|t|``.
    """
    t = np.asarray(t, dtype=float)
    return np.sign(t) * (math.pi - 4.0 * np.arctan(np.exp(-np.abs(t))))


def pendula_homoclinic(cfg: PendulaConfig, signs=(1, 1), alpha: float = 0.0, t=0.0,
                       I: float = 1.0, theta0: float = 0.0):
    """Homoclinic orbit ``(q_{s1,s2}(t; alpha), I, omega0 t + theta0)``.

    ``q = (s1 2 arcsin tanh t, s2 2 arcsin tanh(t+alpha), s1 2 sech t,
    s2 2 sech(t+alpha))``.  Returns shape ``(6,)`` or ``t.shape + (6,)``.
    """
    s1, s2 = signs
    if s1 not in (1, -1) or s2 not in (1, -1):
        raise DomainError("signs must be +-1")
    tt = np.asarray(t, dtype=float)
    ta = tt + alpha
    comps = [s1 * _sep_angle(tt), s2 * _sep_angle(ta),
             s1 * 2.0 * np.asarray(sech(tt)), s2 * 2.0 * np.asarray(sech(ta)),
             np.full_like(tt, float(I)), cfg.omega0 * tt + theta0]
    return np.stack([np.asarray(c, dtype=float) for c in comps], axis=-1)


def pendula_melnikov_oracle(cfg: PendulaConfig, component: int, I: float, theta0,
                            alpha=0.0):
    """Closed-form Melnikov vector components along ``q_{+,+}``.

    ``M2 = -pi sqrt(8 omega0^3 I) csch(pi omega0 / 2) cos(theta0)`` and
    ``M1 = -pi sqrt(8 omega0 I) csch(pi omega0 / 2)
    (cos theta0 + cos(theta0 - omega0 alpha))``.

    The first component carries ``sqrt(omega0)`` rather than
    ``sqrt(omega0^3)``: the ``I``-equation integrand is
    ``A cos(theta) (cos x1 + cos x2)`` whose Fourier integral
    ``int 2 sech^2 t cos(omega0 t) dt = 2 pi omega0 csch(pi omega0 / 2)``
    supplies only one power of ``omega0``.  See :func:`pendula_m1_cubic_form`.
    """
    _amp(I, cfg.omega0)
    w0 = cfg.omega0
    th = np.asarray(theta0, dtype=float)
    al = np.asarray(alpha, dtype=float)
    c = math.pi * float(csch(math.pi * w0 / 2.0))
    if component == 2:
        out = -c * np.sqrt(8.0 * w0 ** 3 * np.asarray(I, dtype=float)) * np.cos(th) + 0.0 * al
    elif component == 1:
        out = -c * np.sqrt(8.0 * w0 * np.asarray(I, dtype=float)) * (np.cos(th) + np.cos(th - w0 * al))
    else:
        raise DomainError("component must be 1 or 2")
    return float(out) if np.ndim(out) == 0 else out


def pendula_m1_cubic_form(cfg: PendulaConfig, I: float, theta0, alpha=0.0):
    """First component with the ``sqrt(8 omega0^3 I)`` prefactor in its
    omega0-cubed form; equal to :func:`pendula_melnikov_oracle` at ``omega0 = 1``."""
    _amp(I, cfg.omega0)
    w0 = cfg.omega0
    th = np.asarray(theta0, dtype=float)
    out = (-math.pi * np.sqrt(8.0 * w0 ** 3 * np.asarray(I, dtype=float)) * float(csch(math.pi * w0 / 2.0))
           * (np.cos(th) + np.cos(th - w0 * np.asarray(alpha, dtype=float))))
    return float(out) if np.ndim(out) == 0 else out


def det_oracle(cfg: PendulaConfig, I: float, theta0, alpha=0.0):
    """``det DM = -4 pi^2 omega0^2 I csch^2(pi omega0/2) sin(theta0) sin(theta0 - omega0 alpha)``."""
    _amp(I, cfg.omega0)
    w0 = cfg.omega0
    th = np.asarray(theta0, dtype=float)
    out = (-4.0 * math.pi ** 2 * w0 ** 2 * np.asarray(I, dtype=float) * float(csch(math.pi * w0 / 2.0)) ** 2
           * np.sin(th) * np.sin(th - w0 * np.asarray(alpha, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


def to_cartesian(cfg: PendulaConfig, state):
    """Map ``(x, I, theta)`` to ``(x, y1, y2)``."""
    s = np.asarray(state, dtype=float)
    I, th = s[4], s[5]
    y1 = _amp(I, cfg.omega0) * math.sin(th)
    y2 = math.sqrt(2.0 * cfg.omega0 * I) * math.cos(th)
    return np.concatenate([s[:4], [y1, y2]])


def from_cartesian(cfg: PendulaConfig, state):
    """Inverse of :func:`to_cartesian` (``theta`` in ``(-pi, pi]``)."""
    s = np.asarray(state, dtype=float)
    y1, y2 = s[4], s[5]
    w0 = cfg.omega0
    I = 0.5 * (w0 * y1 ** 2 + y2 ** 2 / w0)
    th = math.atan2(y1 * math.sqrt(w0), y2 / math.sqrt(w0))
    return np.concatenate([s[:4], [I, th]])


def homoclinic_window(decay_tol: float = 1e-9) -> float:
    """Half-window with the orbit within ``decay_tol`` of the saddle (``4 e^-W``)."""
    return math.log(4.0 / decay_tol)
