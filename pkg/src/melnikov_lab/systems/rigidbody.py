"""Periodically forced rigid body (hovering quadrotor model).

State ``(w1, w2, w3, theta)`` with ``theta' = 1`` carrying the forcing phase
on ``R / T Z``::

    w1' = (I2 - I3)/I1 w2 w3 + eps (-beta0/I1 v3 w2 + beta1/I1 v1)
    w2' = (I3 - I1)/I2 w3 w1 + eps ( beta0/I2 v3 w1 + beta2/I2 v2)
    w3' = (I1 - I2)/I3 w1 w2 + eps   beta3/I3 v3

where ``v_j = v_j(theta)`` are ``T``-periodic.  The phase equation is not
perturbed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np
from scipy.integrate import quad

from ..errors import DomainError
from ..integrals import ScalarIntegral
from ..ode import PerturbedField


def _zero(t):
    return 0.0


@dataclass(frozen=True)
class RigidBodyConfig:
    """Moments of inertia, forcing gains and forcing functions.

    Attributes
    ----------
    I1, I2, I3 : float
        Principal moments (positive).
    beta0, beta1, beta2, beta3 : float
        Non-negative gains.
    v : tuple of three callables
        ``T``-periodic forcing functions ``v1, v2, v3``.
    T : float
        Forcing period.
    name : str
        Preset label, if any.
    """

    I1: float = 1.0
    I2: float = 2.0
    I3: float = 3.0
    beta0: float = 0.0
    beta1: float = 1.0
    beta2: float = 1.0
    beta3: float = 1.0
    v: Tuple[Callable[[float], float], Callable[[float], float], Callable[[float], float]] = \
        field(default=(_zero, _zero, _zero))
    T: float = 2.0 * math.pi
    name: str = ""

    def __post_init__(self):
        if min(self.I1, self.I2, self.I3) <= 0:
            raise DomainError("moments of inertia must be positive")
        if min(self.beta0, self.beta1, self.beta2, self.beta3) < 0:
            raise DomainError("gains beta0..beta3 must be non-negative")
        if not self.T > 0:
            raise DomainError("period T must be positive")
        if len(self.v) != 3:
            raise DomainError("three forcing functions are required")
        for j, vj in enumerate(self.v, start=1):
            a, b = float(vj(0.0)), float(vj(self.T))
            if abs(a - b) > 1e-10:
                raise DomainError(f"forcing v{j} is not T-periodic: v(0)={a!r}, v(T)={b!r}")

    @property
    def moments(self):
        return (self.I1, self.I2, self.I3)

    @property
    def betas(self):
        return (self.beta1, self.beta2, self.beta3)


def rigid_body_field(cfg: RigidBodyConfig, epsilon: float = 0.0) -> PerturbedField:
    """Autonomized 4-d field; the phase (index 3) lives on ``R / T Z``."""
    I1, I2, I3 = cfg.moments
    b0, b1, b2, b3 = cfg.beta0, cfg.beta1, cfg.beta2, cfg.beta3
    v1, v2, v3 = cfg.v
    a1, a2, a3 = (I2 - I3) / I1, (I3 - I1) / I2, (I1 - I2) / I3

    def x0(x):
        return np.array([a1 * x[1] * x[2], a2 * x[2] * x[0], a3 * x[0] * x[1], 1.0])

    def x1(x):
        th = x[3]
        f1, f2, f3 = float(v1(th)), float(v2(th)), float(v3(th))
        return np.array([(-b0 * f3 * x[1] + b1 * f1) / I1,
                         (b0 * f3 * x[0] + b2 * f2) / I2,
                         b3 * f3 / I3,
                         0.0])

    def j0(x):
        return np.array([[0.0, a1 * x[2], a1 * x[1], 0.0],
                         [a2 * x[2], 0.0, a2 * x[0], 0.0],
                         [a3 * x[1], a3 * x[0], 0.0, 0.0],
                         [0.0, 0.0, 0.0, 0.0]])

    return PerturbedField(4, x0, x1, j0, None, period=cfg.T, epsilon=epsilon, angle_index=3,
                          name="rigidbody")


def rigid_body_equilibria(cfg: RigidBodyConfig, c: float):
    """The six equilibria ``p_{j+-}`` on the energy level ``F = c``.

    Returns
    -------
    list of (label, ndarray)
        Labels ``"1+", "1-", "2+", ...``; points are the 3-d ``w`` part with
        ``c_j = sqrt(2 c / I_j)``.
    """
    if not c > 0:
        raise DomainError("energy level c must be positive")
    out = []
    for j, Ij in enumerate(cfg.moments):
        cj = math.sqrt(2.0 * c / Ij)
        for s, lab in ((1.0, "+"), (-1.0, "-")):
            p = np.zeros(3)
            p[j] = s * cj
            out.append((f"{j + 1}{lab}", p))
    return out


def rigid_body_integrals(cfg: RigidBodyConfig):
    """Energy ``F = (I1 w1^2 + I2 w2^2 + I3 w3^2)/2`` and
    ``F~ = I1^2 w1^2 + I2^2 w2^2 + I3^2 w3^2`` (squared angular momentum)."""
    I = np.array(cfg.moments)

    def F(x):
        w = np.asarray(x[:3])
        return 0.5 * float(I @ (w * w))

    def dF(x):
        return np.concatenate([I * np.asarray(x[:3]), [0.0]])

    def Ft(x):
        w = np.asarray(x[:3])
        return float((I * I) @ (w * w))

    def dFt(x):
        return np.concatenate([2.0 * I * I * np.asarray(x[:3]), [0.0]])

    return ScalarIntegral(F, dF, "F"), ScalarIntegral(Ft, dFt, "F~")


def rigid_body_obstruction_oracle(cfg: RigidBodyConfig, j: int, sign: int, c: float,
                                  integral: str = "F") -> float:
    """``+- c_j beta_j int_0^T v_j`` (``F``) or ``+- 2 c_j I_j beta_j int_0^T v_j`` (``F~``)."""
    if j not in (1, 2, 3) or sign not in (1, -1):
        raise DomainError("j must be 1, 2 or 3 and sign +-1")
    if not c > 0:
        raise DomainError("energy level c must be positive")
    Ij = cfg.moments[j - 1]
    cj = math.sqrt(2.0 * c / Ij)
    vj = cfg.v[j - 1]
    val, _ = quad(lambda t: float(vj(t)), 0.0, cfg.T, epsabs=1e-13, epsrel=1e-13, limit=200)
    base = sign * cj * cfg.betas[j - 1] * val
    if integral == "F":
        return base
    if integral in ("F~", "Ftilde"):
        return 2.0 * Ij * base
    raise DomainError("integral must be 'F' or 'F~'")


def equilibrium_state(cfg: RigidBodyConfig, j: int, sign: int, c: float, theta0: float = 0.0):
    """Autonomized state ``(p_{j+-}(c_j), theta0)``."""
    pts = dict(rigid_body_equilibria(cfg, c))
    return np.concatenate([pts[f"{j}{'+' if sign > 0 else '-'}"], [theta0]])


def _presets():
    T = 2.0 * math.pi
    nu = 1.0

    def s(t):
        return math.sin(2.0 * math.pi * t / T)

    def one_plus_sin(t):
        return 1.0 + math.sin(2.0 * math.pi * t / T)

    def cos_sq(t):
        return math.cos(2.0 * math.pi * t / T) ** 2

    def sin_nu(t):
        return math.sin(nu * t)

    return {
        "zero-mean": RigidBodyConfig(v=(s, s, s), T=T, name="zero-mean"),
        "one-plus-sin": RigidBodyConfig(v=(one_plus_sin, one_plus_sin, one_plus_sin), T=T,
                                        name="one-plus-sin"),
        "cos-squared": RigidBodyConfig(v=(cos_sq, cos_sq, cos_sq), T=T, name="cos-squared"),
        "reference": RigidBodyConfig(beta0=1.0, beta1=0.0, v=(_zero, sin_nu, sin_nu),
                                     T=2.0 * math.pi / nu, name="reference"),
    }


PRESETS = _presets()


def preset(name: str, **overrides) -> RigidBodyConfig:
    """Named forcing configuration, optionally with scalar overrides."""
    if name not in PRESETS:
        raise DomainError(f"unknown rigid-body preset {name!r}; expected one of {sorted(PRESETS)}")
    base = PRESETS[name]
    if not overrides:
        return base
    kw = dict(I1=base.I1, I2=base.I2, I3=base.I3, beta0=base.beta0, beta1=base.beta1,
              beta2=base.beta2, beta3=base.beta3, v=base.v, T=base.T, name=base.name)
    kw.update(overrides)
    return RigidBodyConfig(**kw)
