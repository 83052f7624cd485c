"""Oracle tests for the elliptic integrals and Jacobi functions."""

import math

import numpy as np
import pytest
from scipy import integrate, optimize

from melnikov_lab.errors import DomainError
from melnikov_lab.special import (
    EllipticModulus,
    csch,
    ellip_E,
    ellip_K,
    jacobi_sn_cn_dn,
    sech,
)

# quad reports round-off once it has hit double precision; the values are fine
pytestmark = pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")


def series_K(k, terms=64):
    """Maclaurin series of K in k**2, summed term by term."""
    m = k * k
    coef, total = 1.0, 1.0
    for n in range(1, terms):
        coef *= ((2 * n - 1) / (2 * n)) ** 2
        total += coef * m ** n
    return 0.5 * math.pi * total


def series_E(k, terms=64):
    m = k * k
    coef, total = 1.0, 1.0
    for n in range(1, terms):
        coef *= ((2 * n - 1) / (2 * n)) ** 2
        total += coef * m ** n / (1 - 2 * n)
    return 0.5 * math.pi * total


def incomplete_F(phi, k):
    val, _ = integrate.quad(lambda s: 1.0 / math.sqrt(1.0 - (k * math.sin(s)) ** 2),
                            0.0, phi, epsabs=1e-14, epsrel=1e-14, limit=200)
    return val


def amplitude(u, k):
    """Invert u = F(phi, k) for phi on the principal branch."""
    return optimize.brentq(lambda p: incomplete_F(p, k) - u, -4.0, 4.0, xtol=1e-15, rtol=1e-15)


def test_K_E_at_zero():
    assert ellip_K(0.0) == pytest.approx(math.pi / 2, abs=1e-15)
    assert ellip_E(0.0) == pytest.approx(math.pi / 2, abs=1e-15)


@pytest.mark.parametrize("k", [0.1, 0.3, 0.5, 0.6])
def test_K_E_match_series(k):
    assert abs(ellip_K(k) - series_K(k)) < 1e-12
    assert abs(ellip_E(k) - series_E(k)) < 1e-12


@pytest.mark.parametrize("k", [0.2, 0.7, 0.95, 0.999])
def test_K_E_match_quadrature(k):
    K_quad, _ = integrate.quad(lambda s: 1.0 / math.sqrt(1.0 - (k * math.sin(s)) ** 2),
                               0, math.pi / 2, epsabs=1e-14, epsrel=1e-14, limit=200)
    E_quad, _ = integrate.quad(lambda s: math.sqrt(1.0 - (k * math.sin(s)) ** 2),
                               0, math.pi / 2, epsabs=1e-14, epsrel=1e-14, limit=200)
    assert ellip_K(k) == pytest.approx(K_quad, rel=1e-13)
    assert ellip_E(k) == pytest.approx(E_quad, rel=1e-13)


@pytest.mark.parametrize("k", [0.3, 0.5, 0.8])
def test_legendre_relation(k):
    km = EllipticModulus.from_k(k)
    kc = km.complement()
    lhs = ellip_E(km) * ellip_K(kc) + ellip_E(kc) * ellip_K(km) - ellip_K(km) * ellip_K(kc)
    assert abs(lhs - math.pi / 2) < 1e-12


def test_monotonicity_on_grid():
    ks = np.linspace(0.0, 0.999, 100)
    K = np.array([ellip_K(k) for k in ks])
    E = np.array([ellip_E(k) for k in ks])
    assert np.all(np.diff(K) > 0)
    assert np.all(np.diff(E) < 0)
    assert math.isfinite(ellip_K(0.999999)) and ellip_K(0.999999) > ellip_K(0.5)


def test_domain_errors():
    for bad in (1.0, 1.5, -0.1, float("nan")):
        with pytest.raises(DomainError):
            ellip_K(bad)
        with pytest.raises(DomainError):
            jacobi_sn_cn_dn(0.3, bad)


def test_modulus_from_kprime_keeps_precision():
    km = EllipticModulus.from_kprime(1e-9)
    # K ~ ln(4/k') for small k'
    assert ellip_K(km) == pytest.approx(math.log(4e9), rel=1e-15 * 1e3)
    assert abs(km.k ** 2 + km.kprime ** 2 - 1) < 1e-15


def test_degenerate_modulus():
    u = np.linspace(-5, 5, 11)
    sn, cn, dn = jacobi_sn_cn_dn(u, 0.0)
    np.testing.assert_allclose(sn, np.sin(u), atol=1e-15)
    np.testing.assert_allclose(cn, np.cos(u), atol=1e-15)
    np.testing.assert_allclose(dn, 1.0)


def test_algebraic_identities():
    sn, cn, dn = jacobi_sn_cn_dn(1.3, 0.7)
    assert abs(sn * sn + cn * cn - 1) < 1e-12
    assert abs(dn * dn + 0.49 * sn * sn - 1) < 1e-12


def test_quarter_period_value():
    k = 0.6
    u = incomplete_F(math.pi / 2, k)
    assert abs(jacobi_sn_cn_dn(u, k)[0] - 1.0) < 1e-12
    assert abs(jacobi_sn_cn_dn(ellip_K(k), k)[0] - 1.0) < 1e-12


@pytest.mark.parametrize("k", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("u", [-1.1, 0.2, 0.77, 1.4])
def test_against_inverted_incomplete_integral(k, u):
    phi = amplitude(u, k)
    sn, cn, dn = jacobi_sn_cn_dn(u, k)
    assert abs(sn - math.sin(phi)) < 1e-12
    assert abs(cn - math.cos(phi)) < 1e-12
    assert abs(dn - math.sqrt(1 - (k * math.sin(phi)) ** 2)) < 1e-12


@pytest.mark.parametrize("k", [0.1, 0.5, 0.9])
def test_periodicity(k):
    K = ellip_K(k)
    u = np.linspace(-4 * K, 4 * K, 57)
    sn, cn, dn = jacobi_sn_cn_dn(u, k)
    sn4, cn4, _ = jacobi_sn_cn_dn(u + 4 * K, k)
    _, _, dn2 = jacobi_sn_cn_dn(u + 2 * K, k)
    assert np.max(np.abs(sn4 - sn)) < 1e-10
    assert np.max(np.abs(cn4 - cn)) < 1e-10
    assert np.max(np.abs(dn2 - dn)) < 1e-10


@pytest.mark.parametrize("k", [0.2, 0.6, 0.95])
def test_derivatives_by_finite_differences(k):
    u = np.linspace(-3.0, 3.0, 25) + 0.0123
    h = 1e-5
    sp, cp, dp = jacobi_sn_cn_dn(u + h, k)
    sm, cm, dm = jacobi_sn_cn_dn(u - h, k)
    sn, cn, dn = jacobi_sn_cn_dn(u, k)
    for fd, exact in (
        ((sp - sm) / (2 * h), cn * dn),
        ((cp - cm) / (2 * h), -sn * dn),
        ((dp - dm) / (2 * h), -k * k * sn * cn),
    ):
        scale = np.maximum(np.abs(exact), 1e-3)
        assert np.max(np.abs(fd - exact) / scale) < 1e-6


def test_large_argument_accuracy_and_scipy_crosscheck():
    from scipy.special import ellipj

    for k in (0.3, 0.8, 0.99):
        K = ellip_K(k)
        u = np.linspace(-8 * K, 8 * K, 101)
        sn, cn, dn = jacobi_sn_cn_dn(u, k)
        ref = ellipj(u, k * k)
        assert np.max(np.abs(sn - ref[0])) < 1e-12
        assert np.max(np.abs(cn - ref[1])) < 1e-12
        assert np.max(np.abs(dn - ref[2])) < 1e-12


def test_hyperbolic_helpers():
    x = np.array([-800.0, -2.0, 0.5, 3.0, 900.0])
    np.testing.assert_allclose(sech(x), [0.0, 1 / math.cosh(2), 1 / math.cosh(0.5), 1 / math.cosh(3), 0.0],
                               rtol=1e-15, atol=0)
    assert csch(1.0) == pytest.approx(1 / math.sinh(1.0), rel=1e-15)
    assert csch(-1.0) == pytest.approx(-1 / math.sinh(1.0), rel=1e-15)
