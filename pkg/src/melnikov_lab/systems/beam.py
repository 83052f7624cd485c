"""Three-mode truncation of a buckled beam, rescaled near the origin.

State ``y = (y1, ..., y6)``::

    y1' = y4,  y4' = y1           - eps S y1
    y2' = y5,  y5' = -w1^2 y2     - eps beta1 S y2
    y3' = y6,  y6' = -w2^2 y3     - eps beta2 S y3

with ``S = y1^2 + beta1 y2^2 + beta2 y3^2``.  At ``eps = 0`` the system is
linear: a saddle in ``(y1, y4)`` and two centres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..integrals import ScalarIntegral
from ..ode import PerturbedField
from ..variational import CommutingField


@dataclass(frozen=True)
class BeamConfig:
    """Mode frequencies ``0 < omega1 < omega2`` and couplings ``beta1, beta2 > 0``."""

    omega1: float = 1.0
    omega2: float = 2.0
    beta1: float = 1.0
    beta2: float = 1.0

    def __post_init__(self):
        if not (0 < self.omega1 < self.omega2):
            raise DomainError("frequencies must satisfy 0 < omega1 < omega2")
        if not (self.beta1 > 0 and self.beta2 > 0):
            raise DomainError("beta1 and beta2 must be positive")

    def omega(self, ell: int) -> float:
        if ell == 1:
            return self.omega1
        if ell == 2:
            return self.omega2
        raise DomainError("mode index must be 1 or 2")

    def beta(self, ell: int) -> float:
        if ell == 1:
            return self.beta1
        if ell == 2:
            return self.beta2
        raise DomainError("mode index must be 1 or 2")

    def period(self, ell: int) -> float:
        return 2.0 * math.pi / self.omega(ell)


def _linear_matrix(cfg: BeamConfig) -> np.ndarray:
    A = np.zeros((6, 6))
    A[0, 3] = A[1, 4] = A[2, 5] = 1.0
    A[3, 0] = 1.0
    A[4, 1] = -cfg.omega1 ** 2
    A[5, 2] = -cfg.omega2 ** 2
    return A


def beam_field(cfg: BeamConfig, epsilon: float = 0.0) -> PerturbedField:
    """Autonomous 6-d field ``X0 + eps X1``."""
    A = _linear_matrix(cfg)
    w = np.array([1.0, cfg.beta1, cfg.beta2])

    def x0(y):
        return A @ y

    def x1(y):
        q = y[:3]
        S = float(w @ (q * q))
        return np.concatenate([np.zeros(3), -S * w * q])

    def j0(y):
        return A

    def j1(y):
        q = y[:3]
        S = float(w @ (q * q))
        # d(-S w_i q_i)/dq_k = -w_i (S delta_ik + 2 w_k q_k q_i)
        B = -(S * np.diag(w) + 2.0 * np.outer(w * q, w * q))
        J = np.zeros((6, 6))
        J[3:, :3] = B
        return J

    return PerturbedField(6, x0, x1, j0, j1, epsilon=epsilon, name="beam")


def beam_orbits(cfg: BeamConfig, ell: int, c: float, t):
    """``gamma_{1,c} = (0, c sin w1 t, 0, 0, c w1 cos w1 t, 0)`` and the
    analogous ``gamma_{2,c}`` in the third mode."""
    if not c > 0:
        raise DomainError("amplitude c must be positive")
    w = cfg.omega(ell)
    tt = np.asarray(t, dtype=float)
    out = np.zeros(tt.shape + (6,))
    i = ell  # position slot: 1 -> y2, 2 -> y3
    out[..., i] = c * np.sin(w * tt)
    out[..., i + 3] = c * w * np.cos(w * tt)
    return out


def beam_integrals(cfg: BeamConfig):
    """``F1 = -y1^2 + y4^2``, ``F2 = w1^2 y2^2 + y5^2``, ``F3 = w2^2 y3^2 + y6^2``."""
    coeffs = ((0, 3, -1.0), (1, 4, cfg.omega1 ** 2), (2, 5, cfg.omega2 ** 2))
    out = []
    for n, (i, j, a) in enumerate(coeffs, start=1):
        def f(y, i=i, j=j, a=a):
            return a * y[i] ** 2 + y[j] ** 2

        def g(y, i=i, j=j, a=a):
            d = np.zeros(len(y))
            d[i] = 2.0 * a * y[i]
            d[j] = 2.0 * y[j]
            return d

        out.append(ScalarIntegral(f, g, f"F{n}"))
    return tuple(out)


def _cvf_matrices(cfg: BeamConfig):
    w1s, w2s = cfg.omega1 ** 2, cfg.omega2 ** 2
    mats = [np.zeros((6, 6)) for _ in range(6)]
    # Z1 = (y1,0,0,y4,0,0)
    mats[0][0, 0] = 1.0
    mats[0][3, 3] = 1.0
    # Z2 = (y4,0,0,y1,0,0)
    mats[1][0, 3] = 1.0
    mats[1][3, 0] = 1.0
    # Z3 = (0,y2,0,0,y5,0)
    mats[2][1, 1] = 1.0
    mats[2][4, 4] = 1.0
    # Z4 = (0,y5,0,0,-w1^2 y2,0)
    mats[3][1, 4] = 1.0
    mats[3][4, 1] = -w1s
    # Z5 = (0,0,y3,0,0,y6)
    mats[4][2, 2] = 1.0
    mats[4][5, 5] = 1.0
    # Z6 = (0,0,y6,0,0,-w2^2 y3)
    mats[5][2, 5] = 1.0
    mats[5][5, 2] = -w2s
    return mats


def beam_cvfs(cfg: BeamConfig):
    """The six linear fields commuting with the unperturbed flow."""
    out = []
    for n, M in enumerate(_cvf_matrices(cfg), start=1):
        out.append(CommutingField(lambda y, M=M: M @ np.asarray(y, dtype=float),
                                  lambda y, M=M: M, f"Z{n}"))
    return tuple(out)


def beam_adjoint_solutions(cfg: BeamConfig, j: int, t):
    """Closed-form periodic solutions of the unperturbed adjoint equation.

    ``g1 = (0, w1 sin w1 t, 0, 0, cos w1 t, 0)``,
    ``g2 = (0, w1 cos w1 t, 0, 0, -sin w1 t, 0)``, and ``g3``, ``g4`` the same
    in the third mode with ``w2``.
    """
    if j not in (1, 2, 3, 4):
        raise DomainError("j must be in 1..4")
    ell = 1 if j <= 2 else 2
    w = cfg.omega(ell)
    tt = np.asarray(t, dtype=float)
    out = np.zeros(tt.shape + (6,))
    i = ell
    if j % 2 == 1:
        out[..., i] = w * np.sin(w * tt)
        out[..., i + 3] = np.cos(w * tt)
    else:
        out[..., i] = w * np.cos(w * tt)
        out[..., i + 3] = -np.sin(w * tt)
    return out


def beam_J_oracle(j: int, k: int, ell: int, beta: float, c: float) -> float:
    """Reference table: ``(3/2) pi beta^2 c^3`` for ``(j,k,ell)`` in
    ``{(2,3,1), (4,5,2)}`` and zero otherwise.  ``beta`` is the coupling of
    mode ``ell``."""
    if (j, k, ell) in ((2, 3, 1), (4, 5, 2)):
        return 1.5 * math.pi * beta ** 2 * c ** 3
    return 0.0


def beam_J_closed_form(cfg: BeamConfig, j: int, k: int, ell: int, c: float) -> float:
    """Value of the defining integral under ``[X, Z] = DZ X - DX Z``.

    Along ``gamma_{ell,c}`` the only surviving bracket component paired with
    ``g_{2 ell}`` is ``[X1, Z_{2 ell + 1}]_{ell+3} = 2 beta^2 y^3``; integrating
    ``-2 beta^2 c^3 sin^4(w t)`` over one period gives
    ``-(3/2) pi beta^2 c^3 / w``.
    """
    if (j, k, ell) in ((2, 3, 1), (4, 5, 2)):
        return -1.5 * math.pi * cfg.beta(ell) ** 2 * c ** 3 / cfg.omega(ell)
    return 0.0
