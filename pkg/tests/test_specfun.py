import math

import mpmath
import numpy as np
import pytest
from scipy import special

from lqed.specfun import (
    DomainError,
    Sheet,
    bessel_j0,
    bessel_y0,
    ellip_e,
    ellip_e_sheet,
    ellip_k,
    ellip_k_sheet,
    hankel0_first,
    lambert_w0,
)
from oracles import agm_k, ellip_k_quad


def test_ellip_k_known_values():
    assert ellip_k(0.0) == pytest.approx(np.pi / 2, abs=1e-15)
    assert ellip_k(0.5) == pytest.approx(agm_k(0.5), abs=1e-12)
    assert ellip_k(0.5) == pytest.approx(1.8540746773013719, abs=1e-12)
    assert ellip_k(-1.0) == pytest.approx(ellip_k_quad(-1.0), abs=1e-12)
    assert ellip_k(-1.0) == pytest.approx(1.3110287771461, abs=1e-12)


def test_ellip_k_singular_at_one():
    with pytest.raises(DomainError):
        ellip_k(1.0)


def test_ellip_e_known_values():
    assert ellip_e(0.0) == pytest.approx(np.pi / 2, abs=1e-15)
    assert ellip_e(1.0) == pytest.approx(1.0, abs=1e-15)
    assert ellip_e(0.5) == pytest.approx(1.3506438810476755, abs=1e-12)


@pytest.mark.parametrize("m", [0.3 + 0.4j, -2.0 + 1.5j, 3.0 - 0.2j, 5.0 + 1e-3j, -0.7 - 4j, 1.0 + 1e-6j])
def test_complex_parameter_matches_mpmath(m):
    assert abs(ellip_k(m) - complex(mpmath.ellipk(m))) < 1e-12 * abs(ellip_k(m))
    assert abs(ellip_e(m) - complex(mpmath.ellipe(m))) < 1e-12 * abs(ellip_e(m))


def test_legendre_relation():
    for m in [0.1, 0.37, 0.5, 0.9, 0.999]:
        K, E = ellip_k(m), ellip_e(m)
        Kc, Ec = ellip_k(1 - m), ellip_e(1 - m)
        assert abs(E * Kc + Ec * K - K * Kc - np.pi / 2) < 1e-10


def test_ellip_k_sheets():
    assert ellip_k_sheet(0.0, Sheet.I) == pytest.approx(np.pi / 2)
    K = agm_k(0.5)
    assert ellip_k_sheet(0.5, Sheet.II) == pytest.approx(K * (1 + 2j), abs=1e-12)
    assert ellip_k_sheet(0.5, Sheet.III) == pytest.approx(K * (1 - 2j), abs=1e-12)


def test_ellip_e_sheets():
    assert ellip_e_sheet(1.0, Sheet.I) == pytest.approx(1.0)
    K, E = ellip_k(0.5), ellip_e(0.5)
    assert ellip_e_sheet(0.5, Sheet.II) == pytest.approx(E + 2j * (K - E), abs=1e-12)
    for m in [0.2, 0.5, 0.8]:
        e1 = ellip_e(m)
        assert ellip_e_sheet(m, "III") - e1 == pytest.approx(-(ellip_e_sheet(m, "II") - e1), abs=1e-13)


def test_lambert_w0_values():
    assert lambert_w0(0.0) == 0.0
    assert lambert_w0(np.e) == pytest.approx(1.0, abs=1e-15)
    w = lambert_w0(10053.1)
    assert w == pytest.approx(7.236, abs=1e-3)
    assert abs(w * math.exp(w) - 10053.1) < 1e-12 * 10053.1
    assert lambert_w0(-1 / np.e) == -1.0
    with pytest.raises(DomainError):
        lambert_w0(-0.5)


def test_lambert_w0_matches_scipy():
    x = np.concatenate([np.linspace(-1 / np.e + 1e-12, 1, 50), np.logspace(0, 300, 50)])
    assert np.allclose(lambert_w0(x), special.lambertw(x).real, rtol=1e-13, atol=1e-14)


def test_bessel_j0():
    assert bessel_j0(1e-300) == pytest.approx(1.0)
    assert abs(bessel_j0(2.4048256)) < 1e-6
    x = np.linspace(0.01, 60, 400)
    assert np.allclose(bessel_j0(x), special.j0(x), atol=1e-13)
    assert np.allclose(bessel_y0(x), special.y0(x), atol=1e-12)


def test_hankel_large_argument():
    h = hankel0_first(50.0)
    assert abs(abs(h) - math.sqrt(2 / (np.pi * 50))) < 0.01 * math.sqrt(2 / (np.pi * 50))
    with pytest.raises(DomainError):
        hankel0_first(0.0)
