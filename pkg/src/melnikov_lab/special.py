"""Complete elliptic integrals and Jacobi elliptic functions.

Everything here is parameterised by the elliptic *modulus* ``k`` (not the
parameter ``m = k**2``).  Both ``k`` and the complementary modulus
``k' = sqrt(1 - k**2)`` are carried together in :class:`EllipticModulus` so
that moduli very close to one can be specified through ``k'`` without losing
precision to cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError

__all__ = [
    "EllipticModulus",
    "as_modulus",
    "ellip_K",
    "ellip_E",
    "ellip_KE",
    "jacobi_sn_cn_dn",
    "sech",
    "csch",
]

_AGM_RTOL = 1e-16
_MAX_AGM_ITERS = 64


@dataclass(frozen=True)
class EllipticModulus:
    """An elliptic modulus together with its complement.

    Use :meth:`from_k` or :meth:`from_kprime` rather than the raw
    constructor; the two fields are then consistent to working precision.

    Attributes
    ----------
    k : float
        Modulus, ``0 <= k < 1``.
    kprime : float
        Complementary modulus ``sqrt(1 - k**2)``, in ``(0, 1]``.
    """

    k: float
    kprime: float

    def __post_init__(self):
        k, kp = float(self.k), float(self.kprime)
        if not (math.isfinite(k) and math.isfinite(kp)):
            raise DomainError(f"non-finite modulus k={k!r}, k'={kp!r}")
        # k may round to exactly 1.0 when k' < ~1e-8; k' is then authoritative
        if k < 0.0 or k > 1.0 or kp <= 0.0 or kp > 1.0:
            raise DomainError(f"elliptic modulus must satisfy 0 <= k < 1, got k={k!r}")
        if abs(k * k + kp * kp - 1.0) > 4e-15:
            raise DomainError(f"inconsistent modulus pair k={k!r}, k'={kp!r}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "kprime", kp)

    @classmethod
    def from_k(cls, k: float) -> "EllipticModulus":
        k = float(k)
        if not (0.0 <= k < 1.0):
            raise DomainError(f"elliptic modulus must satisfy 0 <= k < 1, got k={k!r}")
        # (1 - k)(1 + k) is more accurate than 1 - k*k near k = 1
        return cls(k, math.sqrt((1.0 - k) * (1.0 + k)))

    @classmethod
    def from_kprime(cls, kprime: float) -> "EllipticModulus":
        kp = float(kprime)
        if not (0.0 < kp <= 1.0):
            raise DomainError(f"complementary modulus must lie in (0, 1], got {kp!r}")
        return cls(math.sqrt((1.0 - kp) * (1.0 + kp)), kp)

    def complement(self) -> "EllipticModulus":
        """Return the modulus with ``k`` and ``k'`` swapped.

        Raises
        ------
        DomainError
            If ``k == 0`` (the complement would be the singular modulus 1).
        """
        return EllipticModulus(self.kprime, self.k)


ModulusLike = Union[EllipticModulus, float]


def as_modulus(k: ModulusLike) -> EllipticModulus:
    """Coerce a float or :class:`EllipticModulus` to an :class:`EllipticModulus`."""
    if isinstance(k, EllipticModulus):
        return k
    return EllipticModulus.from_k(k)


def _agm_sequence(kmod: EllipticModulus):
    """Run the AGM from ``(1, k')`` and return the lists ``a_n, c_n``.

    ``c_0 = k`` and ``c_{n+1} = (a_n - b_n)/2``.  Iteration stops as soon as
    ``|a_n - b_n| < 1e-16 a_n``.
    """
    a, b, c = 1.0, kmod.kprime, kmod.k
    a_seq, c_seq = [a], [c]
    for _ in range(_MAX_AGM_ITERS):
        if abs(a - b) < _AGM_RTOL * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        a_seq.append(a)
        c_seq.append(c)
    return a_seq, c_seq


def ellip_KE(k: ModulusLike) -> tuple[float, float]:
    """Return ``(K(k), E(k))`` from a single AGM run."""
    kmod = as_modulus(k)
    a_seq, c_seq = _agm_sequence(kmod)
    K = math.pi / (2.0 * a_seq[-1])
    s = 0.0
    for n, c in enumerate(c_seq):
        s += math.ldexp(c * c, n - 1)
    return K, K * (1.0 - s)


def ellip_K(k: ModulusLike) -> float:
    """Complete elliptic integral of the first kind.

    Parameters
    ----------
    k : EllipticModulus or float
        Modulus, ``0 <= k < 1``.

    Returns
    -------
    float
        ``K(k) = pi / (2 AGM(1, k'))``.

    Raises
    ------
    DomainError
        If ``k`` is outside ``[0, 1)``.
    """
    kmod = as_modulus(k)
    a_seq, _ = _agm_sequence(kmod)
    return math.pi / (2.0 * a_seq[-1])


def ellip_E(k: ModulusLike) -> float:
    """Complete elliptic integral of the second kind.

    Uses ``E = K (1 - sum_n 2**(n-1) c_n**2)`` over the AGM sequence.
    """
    return ellip_KE(k)[1]


def jacobi_sn_cn_dn(u, k: ModulusLike):
    """Jacobi elliptic functions ``sn, cn, dn`` by descending Landen/AGM.

    Parameters
    ----------
    u : float or array_like
        Argument(s).  Arrays are handled elementwise.
    k : EllipticModulus or float
        Modulus, ``0 <= k < 1``.

    Returns
    -------
    sn, cn, dn : float or ndarray
        Same shape as ``u``.

    Notes
    -----
    The AGM from ``(1, k')`` is run until the residual ``c_N / a_N`` is
    negligible; then ``phi_N = 2**N a_N u`` and the amplitudes are recovered
    by ``phi_{n-1} = (phi_n + arcsin(c_n sin(phi_n) / a_n)) / 2``.
    Finally ``sn = sin phi_0``, ``cn = cos phi_0`` and
    ``dn = sqrt(cn**2 + k'**2 sn**2)``.
    """
    kmod = as_modulus(k)
    scalar = np.ndim(u) == 0
    uu = np.asarray(u, dtype=float)
    if kmod.k == 0.0:
        sn, cn, dn = np.sin(uu), np.cos(uu), np.ones_like(uu)
    else:
        a_seq, c_seq = _agm_sequence(kmod)
        N = len(a_seq) - 1
        phi = math.ldexp(a_seq[N], N) * uu
        for n in range(N, 0, -1):
            phi = 0.5 * (phi + np.arcsin(c_seq[n] / a_seq[n] * np.sin(phi)))
        sn = np.sin(phi)
        cn = np.cos(phi)
        # dn = sqrt(cn^2 + k'^2 sn^2) has no cancellation and no 0/0 at the
        # quarter periods (unlike cn / cos(phi_1 - phi_0)); dn > 0 for k < 1.
        dn = np.hypot(cn, kmod.kprime * sn)
    if scalar:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


def sech(x):
    """Hyperbolic secant, overflow-safe for large ``|x|``."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    e = np.exp(-ax)
    out = 2.0 * e / (1.0 + e * e)
    return float(out) if out.ndim == 0 else out


def csch(x):
    """Hyperbolic cosecant ``1/sinh(x)``, overflow-safe for large ``|x|``."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    e = np.exp(-ax)
    with np.errstate(divide="ignore"):
        out = np.sign(x) * 2.0 * e / -np.expm1(-2.0 * ax)
    return float(out) if out.ndim == 0 else out
