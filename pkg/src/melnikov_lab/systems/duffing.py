"""Periodically forced Duffing oscillator.

``x1' = x2``, ``x2' = a x1 - x1**3 + eps (beta cos(omega t) - delta x2)``
with ``a = +1`` (two wells, homoclinic loops) or ``a = -1`` (single well).
The forcing is autonomized with a phase variable ``theta`` (``theta' = 1``),
so the state is ``(x1, x2, theta)`` and the forcing reads
``beta cos(omega theta)``.

Orbit families (``k`` is the elliptic modulus):

``"q+"``, ``"q-"``  (a = 1)
    Periodic orbits inside the right/left homoclinic loop, ``0 < k < 1``.
``"outer"``  (a = 1)
    Periodic orbits surrounding both loops, ``1/sqrt(2) < k < 1``.
``"gamma"``  (a = -1)
    Periodic orbits around the origin, ``0 < k < 1/sqrt(2)``.
``"hom+"``, ``"hom-"``  (a = 1)
    The homoclinic loops ``(+-sqrt(2) sech t, -+sqrt(2) sech t tanh t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, NoResonance
from ..integrals import ScalarIntegral
from ..ode import PerturbedField
from ..special import EllipticModulus, as_modulus, ellip_K, ellip_KE, jacobi_sn_cn_dn, sech

PERIODIC_FAMILIES = ("q+", "q-", "outer", "gamma")
HOMOCLINIC_FAMILIES = ("hom+", "hom-")
FAMILIES = PERIODIC_FAMILIES + HOMOCLINIC_FAMILIES

_SQRT2 = math.sqrt(2.0)
_INV_SQRT2 = 1.0 / _SQRT2


@dataclass(frozen=True)
class DuffingConfig:
    """Parameters of the forced Duffing oscillator.

    Attributes
    ----------
    a : int
        +1 or -1.
    beta, delta : float
        Forcing amplitude and damping (non-negative).
    omega : float
        Forcing frequency (positive); the forcing period is ``2 pi / omega``.
    """

    a: int = 1
    beta: float = 1.0
    delta: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if self.a not in (1, -1):
            raise DomainError("a must be +1 or -1")
        if self.beta < 0 or self.delta < 0:
            raise DomainError("beta and delta must be non-negative")
        if not self.omega > 0:
            raise DomainError("omega must be positive")

    @property
    def T(self) -> float:
        return 2.0 * math.pi / self.omega


def duffing_field(cfg: DuffingConfig, epsilon: float = 0.0) -> PerturbedField:
    """Autonomized Duffing field on ``(x1, x2, theta)``."""
    a, beta, delta, om = float(cfg.a), cfg.beta, cfg.delta, cfg.omega

    def x0(x):
        return np.array([x[1], a * x[0] - x[0] ** 3, 1.0])

    def x1(x):
        return np.array([0.0, beta * math.cos(om * x[2]) - delta * x[1], 0.0])

    def j0(x):
        return np.array([[0.0, 1.0, 0.0], [a - 3.0 * x[0] ** 2, 0.0, 0.0], [0.0, 0.0, 0.0]])

    def j1(x):
        return np.array([[0.0, 0.0, 0.0],
                         [0.0, -delta, -beta * om * math.sin(om * x[2])],
                         [0.0, 0.0, 0.0]])

    return PerturbedField(3, x0, x1, j0, j1, period=cfg.T, epsilon=epsilon, angle_index=2,
                          name=f"duffing(a={cfg.a})")


def hamiltonian(cfg: DuffingConfig) -> ScalarIntegral:
    """``H = -a x1^2 / 2 + x1^4 / 4 + x2^2 / 2`` (independent of ``theta``)."""
    a = float(cfg.a)

    def H(x):
        return -0.5 * a * x[0] ** 2 + 0.25 * x[0] ** 4 + 0.5 * x[1] ** 2

    def dH(x):
        out = np.zeros(len(x))
        out[0] = -a * x[0] + x[0] ** 3
        out[1] = x[1]
        return out

    return ScalarIntegral(H, dH, "H")


def _check_family(cfg: DuffingConfig, family: str):
    if family not in FAMILIES:
        raise DomainError(f"unknown Duffing family {family!r}; expected one of {FAMILIES}")
    if family == "gamma" and cfg.a != -1:
        raise DomainError("family 'gamma' exists for a = -1 only")
    if family != "gamma" and cfg.a != 1:
        raise DomainError(f"family {family!r} exists for a = 1 only")


def _modulus_in_range(family: str, k) -> EllipticModulus:
    km = as_modulus(k)
    if family in ("q+", "q-"):
        ok = 0.0 < km.k and km.kprime > 0.0
    elif family == "outer":
        ok = km.k > _INV_SQRT2 and km.kprime > 0.0
    else:
        ok = 0.0 < km.k < _INV_SQRT2
    if not ok:
        raise DomainError(f"modulus k={km.k!r} outside the range of family {family!r}")
    return km


def _one_minus_2k2(km: EllipticModulus) -> float:
    """``1 - 2 k^2 = k'^2 - k^2`` evaluated without cancellation."""
    return (km.kprime - km.k) * (km.kprime + km.k)


def duffing_orbit(cfg: DuffingConfig, family: str, k, t):
    """Closed-form unperturbed orbit ``(x1(t), x2(t))``.

    Parameters
    ----------
    cfg : DuffingConfig
    family : str
        One of :data:`FAMILIES`.
    k : float or EllipticModulus or None
        Modulus (ignored for the homoclinic families).
    t : float or array_like

    Returns
    -------
    ndarray
        Shape ``(2,)`` for scalar ``t``, else ``t.shape + (2,)``.
    """
    _check_family(cfg, family)
    tt = np.asarray(t, dtype=float)
    if family in HOMOCLINIC_FAMILIES:
        s = 1.0 if family == "hom+" else -1.0
        sh = sech(tt)
        x1 = s * _SQRT2 * sh
        x2 = -s * _SQRT2 * sh * np.tanh(tt)
    else:
        km = _modulus_in_range(family, k)
        k2 = km.k * km.k
        if family in ("q+", "q-"):
            s = 1.0 if family == "q+" else -1.0
            w = 2.0 - k2
            r = math.sqrt(w)
            sn, cn, dn = jacobi_sn_cn_dn(tt / r, km)
            x1 = s * _SQRT2 / r * dn
            x2 = -s * _SQRT2 * k2 / w * sn * cn
        else:
            w = (2.0 * k2 - 1.0) if family == "outer" else _one_minus_2k2(km)
            r = math.sqrt(w)
            sn, cn, dn = jacobi_sn_cn_dn(tt / r, km)
            x1 = _SQRT2 * km.k / r * cn
            x2 = -_SQRT2 * km.k / w * sn * dn
    out = np.stack([np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)], axis=-1)
    return out


def duffing_state(cfg: DuffingConfig, family: str, k, t, tau: float = 0.0):
    """Autonomized state ``(x1(t), x2(t), t + tau)``."""
    xy = duffing_orbit(cfg, family, k, t)
    th = np.asarray(t, dtype=float) + tau
    return np.concatenate([xy, np.asarray(th)[..., None]], axis=-1)


def duffing_period(cfg: DuffingConfig, family: str, k) -> float:
    """Period of the orbit family member with modulus ``k``.

    ``T = 2 K sqrt(2 - k^2)`` (q+-), ``4 K sqrt(2 k^2 - 1)`` (outer) and
    ``4 K sqrt(1 - 2 k^2)`` (gamma).  Homoclinic orbits have infinite period.
    """
    _check_family(cfg, family)
    if family in HOMOCLINIC_FAMILIES:
        return math.inf
    km = _modulus_in_range(family, k)
    K = ellip_K(km)
    if family in ("q+", "q-"):
        return 2.0 * K * math.sqrt(2.0 - km.k ** 2)
    if family == "outer":
        return 4.0 * K * math.sqrt(2.0 * km.k ** 2 - 1.0)
    return 4.0 * K * math.sqrt(_one_minus_2k2(km))


def _family_parameterization(family: str):
    """Map a bisection variable ``s`` in ``(lo, hi)`` to a modulus.

    Families whose period blows up as ``k -> 1`` are parameterised by
    ``log k'`` so that moduli extremely close to one stay resolvable.
    """
    if family in ("q+", "q-"):
        return (math.log(1e-300), 0.0), lambda s: EllipticModulus.from_kprime(math.exp(s))
    if family == "outer":
        return (math.log(1e-300), math.log(_INV_SQRT2)), \
            lambda s: EllipticModulus.from_kprime(math.exp(s))
    return (0.0, _INV_SQRT2), lambda s: EllipticModulus.from_k(s)


def resonant_modulus(cfg: DuffingConfig, family: str, m: int, l: int) -> EllipticModulus:
    """Modulus at which ``l * T(k) = m * 2 pi / omega``.

    Solved by bisection on a monotone parameterisation of the family; the
    monotonicity of the period is checked on a 200-point grid first.

    Raises
    ------
    NoResonance
        If the target period is outside the family's period range.
    DomainError
        For non-positive ``m`` or ``l``.
    """
    _check_family(cfg, family)
    if family in HOMOCLINIC_FAMILIES:
        raise DomainError("homoclinic orbits have no finite period")
    if m <= 0 or l <= 0:
        raise DomainError("m and l must be positive integers")
    (lo, hi), to_mod = _family_parameterization(family)
    target = m * cfg.T

    def resid(s):
        return l * duffing_period(cfg, family, to_mod(s)) - target

    span = hi - lo
    grid = lo + span * (np.arange(1, 201) / 201.0)
    vals = np.array([resid(s) for s in grid])
    d = np.diff(vals)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise NoResonance(f"period of family {family!r} is not monotone on the sampling grid")
    # open-interval ends: nudge inwards
    a = lo + 1e-12 * span if family == "gamma" else lo
    b = hi - 1e-12 * span
    ra, rb = resid(a), resid(b)
    # a residual that vanishes only at the (excluded) end of the family is
    # not a resonance inside the open modulus range
    if not np.sign(ra) * np.sign(rb) < 0:
        raise NoResonance(
            f"no modulus in family {family!r} satisfies {l} T(k) = {m} * 2pi/{cfg.omega:g}")
    for _ in range(400):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        rm = resid(mid)
        if rm == 0.0:
            a = b = mid
            break
        if np.sign(rm) == np.sign(ra):
            a, ra = mid, rm
        else:
            b = mid
    best = a if abs(ra) <= abs(resid(b)) else b
    km = to_mod(best)
    err = abs(l * duffing_period(cfg, family, km) - target)
    if err > 1e-12 * cfg.T * max(1, l):
        raise NoResonance(f"bisection stalled with residual {err:.3e}")
    return km


def resonance_omega(family: str, k, m: int, l: int) -> float:
    """Forcing frequency that makes modulus ``k`` resonant: ``2 pi m / (l T(k))``."""
    fam_cfg = DuffingConfig(a=-1 if family == "gamma" else 1)
    return 2.0 * math.pi * m / (l * duffing_period(fam_cfg, family, k))


def subharmonic_J(cfg: DuffingConfig, family: str, k, m: int, l: int):
    """Closed-form coefficients ``(J1, J2)`` for the resonant family member.

    The Melnikov function is ``-delta J1 + s beta J2 sin(omega tau)`` with
    ``s = +1`` for ``q+``, ``outer`` and ``gamma`` and ``s = -1`` for ``q-``.
    The parity gates are applied exactly: ``J2 = 0`` unless ``l = 1`` (and,
    for ``outer`` and ``gamma``, ``m`` odd).
    """
    _check_family(cfg, family)
    km = _modulus_in_range(family, k)
    K, E = ellip_KE(km)
    Kc = ellip_K(km.complement())
    k2, kp2 = km.k ** 2, km.kprime ** 2
    om = cfg.omega
    if family in ("q+", "q-"):
        w = 2.0 - k2
        J1 = 4.0 * l * (w * E - 2.0 * kp2 * K) / (3.0 * w ** 1.5)
        J2 = _SQRT2 * math.pi * om * sech(m * math.pi * Kc / K) if l == 1 else 0.0
    elif family == "outer":
        w = 2.0 * k2 - 1.0
        J1 = 8.0 * l * (w * E + kp2 * K) / (3.0 * w ** 1.5)
        J2 = (2.0 * _SQRT2 * math.pi * om * sech(m * math.pi * Kc / (2.0 * K))
              if (l == 1 and m % 2 == 1) else 0.0)
    else:
        w = _one_minus_2k2(km)
        J1 = 8.0 * l * (-w * E + kp2 * K) / (3.0 * w ** 1.5)
        J2 = (_SQRT2 * math.pi ** 2 * m / (K * math.sqrt(w)) * sech(math.pi * m * Kc / (2.0 * K))
              if (l == 1 and m % 2 == 1) else 0.0)
    return float(J1), float(J2)


ORACLE_KINDS = ("subharmonic+", "subharmonic-", "subharmonic-outer", "subharmonic-gamma",
                "homoclinic+", "homoclinic-")


def duffing_melnikov_oracle(cfg: DuffingConfig, kind: str, k=None, m: int = 1, l: int = 1,
                            tau=0.0):
    """Closed-form Melnikov functions of the Duffing oscillator.

    ``kind`` selects the orbit: ``subharmonic+`` / ``subharmonic-`` (``q+-``),
    ``subharmonic-outer``, ``subharmonic-gamma`` (a = -1) or
    ``homoclinic+`` / ``homoclinic-``.  The homoclinic value is

        ``-4 delta / 3 +- sqrt(2) pi omega beta sech(pi omega / 2) sin(omega tau)``.

    ``tau`` may be an array.
    """
    tau = np.asarray(tau, dtype=float)
    phase = np.sin(cfg.omega * tau)
    if kind in ("homoclinic+", "homoclinic-"):
        if cfg.a != 1:
            raise DomainError("homoclinic orbits exist for a = 1 only")
        s = 1.0 if kind == "homoclinic+" else -1.0
        amp = _SQRT2 * math.pi * cfg.omega * cfg.beta * sech(math.pi * cfg.omega / 2.0)
        out = -4.0 / 3.0 * cfg.delta + s * amp * phase
    elif kind in ORACLE_KINDS:
        family = {"subharmonic+": "q+", "subharmonic-": "q-", "subharmonic-outer": "outer",
                  "subharmonic-gamma": "gamma"}[kind]
        J1, J2 = subharmonic_J(cfg, family, k, m, l)
        s = -1.0 if family == "q-" else 1.0
        out = -cfg.delta * J1 + s * cfg.beta * J2 * phase
    else:
        raise DomainError(f"unknown oracle kind {kind!r}")
    return float(out) if out.ndim == 0 else out


def duffing_homoclinic_csch_form(cfg: DuffingConfig, sign: int = 1, tau=0.0):
    """Homoclinic Melnikov function in its alternative csch form.

    ``-4 delta / 3 +- sqrt(2) pi omega beta csch(pi omega / 2) sin(tau)``.
    It differs from the value of the defining integral (see
    :func:`duffing_melnikov_oracle`): the forcing integral evaluates to a
    hyperbolic secant, not a cosecant.  Kept for comparison.
    """
    tau = np.asarray(tau, dtype=float)
    amp = _SQRT2 * math.pi * cfg.omega * cfg.beta / math.sinh(math.pi * cfg.omega / 2.0)
    out = -4.0 / 3.0 * cfg.delta + sign * amp * np.sin(tau)
    return float(out) if out.ndim == 0 else out


def homoclinic_window(decay_tol: float = 1e-9) -> float:
    """Half-window ``W`` with ``|q_h(+-W)| < decay_tol`` (``2 sqrt(2) e^-W``)."""
    return math.log(2.0 * _SQRT2 / decay_tol)
