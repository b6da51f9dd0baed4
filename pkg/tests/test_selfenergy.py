import numpy as np
import pytest
from scipy import integrate

from lqed.bath import BathModel, dos
from lqed.selfenergy import (
    SelfEnergyKind,
    sigma12_1d,
    sigma12_2d,
    sigma12_edge_hankel,
    sigma_e_1d,
    sigma_e_2d,
    sigma_four,
    sigma_pm,
    split,
)
from lqed.specfun import DomainError
from oracles import four_lattice_sum, lattice_sum

G = 0.1


def test_chain_outside_band():
    assert sigma_e_1d(3.0, G) == pytest.approx(G**2 / np.sqrt(5), rel=1e-14)
    assert sigma_e_1d(-3.0, G) == pytest.approx(-(G**2) / np.sqrt(5), rel=1e-14)


def test_chain_band_centre_rate():
    s = sigma_e_1d(0.0, G)
    assert s.real == pytest.approx(0.0, abs=1e-15)
    assert split(s)[1] == pytest.approx(G**2, rel=1e-14)


def test_chain_exchange():
    assert sigma12_1d(0.7 + 0.1j, 0, G) == pytest.approx(sigma_e_1d(0.7 + 0.1j, G))
    r = sigma12_1d(0.0, 2, G) / sigma_e_1d(0.0, G)
    assert r == pytest.approx(-1.0, abs=1e-12)
    gm = split(sigma_pm(0.0, 2, G, sign=-1, dim=1))[1]
    assert gm / split(sigma_e_1d(0.0, G))[1] == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("z,n", [(2.5, 3), (-3.0, 7), (4.0, 0), (-2.2, 12)])
def test_chain_exchange_matches_trapezoid(z, n):
    k = 2 * np.pi * np.arange(10**6) / 10**6
    ref = G**2 * np.mean(np.cos(k * n) / (z + 2 * np.cos(k)))
    assert abs(sigma12_1d(z, n, G) - ref) < 1e-8


def test_chain_sheet_ii_flips_sign():
    z = 0.4 - 0.3j
    assert sigma_e_1d(z, G, sheet="II") == pytest.approx(-sigma_e_1d(z, G, sheet="I"))
    with pytest.raises(ValueError):
        sigma_e_1d(z, G, sheet="III")


def test_square_large_z():
    assert sigma_e_2d(100.0, G) == pytest.approx(G**2 / 100.0, rel=1e-3)


def test_square_imaginary_part_is_dos():
    s = sigma_e_2d(2.0, G)
    assert -s.imag == pytest.approx(np.pi * G**2 * dos(BathModel(2, 8), 2.0), rel=1e-12)


def test_square_singular_points():
    with pytest.raises(DomainError):
        sigma_e_2d(0.0, G)
    with pytest.raises(DomainError):
        sigma_e_2d(4.0, G)


@pytest.mark.parametrize("z", [-4.5, 6.0, 4.2, -5.0 + 0.5j])
def test_square_self_energy_matches_lattice_sum(z):
    assert abs(sigma_e_2d(z, 1.0) - lattice_sum(z, (0, 0), dim=2)) < 1e-6


@pytest.mark.parametrize("n12,z", [((3, 2), 5.0), ((1, 0), -4.5), ((1, 1), 4.6), ((4, 4), -5.0), ((5, 0), 4.3 + 0.2j)])
def test_square_exchange_matches_lattice_sum(n12, z):
    assert abs(sigma12_2d(z, n12, 1.0) - lattice_sum(z, n12, dim=2)) < 1e-6


def test_square_nearest_neighbour_identity():
    z = 6.0
    lhs = sigma12_2d(z, (1, 0), G)
    assert lhs == pytest.approx((G**2 - z * sigma_e_2d(z, G)) / 4.0, abs=1e-16)
    inner = lambda kx: integrate.quad(lambda ky: np.cos(kx) / (z + 2 * np.cos(kx) + 2 * np.cos(ky)), 0, np.pi, epsabs=1e-14)[0]
    quad = G**2 * integrate.quad(inner, 0, np.pi, epsabs=1e-14)[0] / np.pi**2
    assert abs(lhs - quad) < 1e-10 * G**2


def test_square_diagonal_alternates_at_band_centre():
    # Sigma_e diverges logarithmically at the centre while Sigma_12(n,n) - (-1)^n Sigma_e
    # stays finite, so the ratio tends to (-1)^n
    for n in range(1, 5):
        prev = None
        for eps in (1e-3, 1e-6, 1e-12, 1e-100):
            z = 1j * eps
            r = sigma12_2d(z, (n, n), G) / sigma_e_2d(z, G)
            assert np.sign(r.real) == (-1) ** n
            if prev is not None:
                assert abs(r - (-1) ** n) < abs(prev - (-1) ** n)
            prev = r
        assert abs(prev - (-1) ** n) < 0.05


def test_pair_kinds():
    z = 0.3 - 0.01j
    s = sigma_pm(z, (1, 1), G, sign=1)
    assert s == pytest.approx(sigma_e_2d(z, G) + sigma12_2d(z, (1, 1), G))
    assert SelfEnergyKind("PlusMinus2D", G, n12=(1, 1), sign=1)(z) == pytest.approx(s)
    # antisymmetric (2,2) pair: the divergent parts cancel at the band centre,
    # leaving a finite rate and a vanishing shift while Gamma_e diverges
    for E in (1e-6, 1e-12, 1e-100):
        dw, gm = split(sigma_pm(E, (2, 2), G, sign=-1))
        assert 0 < gm < 0.01 and abs(dw) < 1e-3 * G**2
    ratios = [split(sigma_pm(E, (2, 2), G, sign=-1))[1] / split(sigma_e_2d(E, G))[1] for E in (1e-6, 1e-100)]
    assert ratios[1] < ratios[0] < 0.2


def test_four_emitter_self_energy():
    assert sigma_four(0.0, 1, G) == 0.0
    for n in (1, 2, 3):
        slope = sigma_four(1e-5j, n, 1.0) / 1e-5j
        assert slope.real == pytest.approx(-(n**2), rel=1e-3)
    assert abs(sigma_four(6.0, 1, 1.0) - four_lattice_sum(6.0, 1)) < 1e-6


def test_edge_hankel_cross_check():
    E = 0.01
    for n12 in [(10, 0), (6, 8), (7, 7)]:
        h = sigma12_edge_hankel(E, n12, G)
        q = sigma12_2d(-4.0 + E, n12, G)
        assert abs(h - q) < 0.05 * abs(q)
    # Y0 grows logarithmically as E -> 0
    a, b = sigma12_edge_hankel(1e-6, (3, 0), G), sigma12_edge_hankel(1e-8, (3, 0), G)
    assert a.imag < 0 and b.imag < a.imag


def test_kind_validation():
    with pytest.raises(ValueError):
        SelfEnergyKind("Single3D", G)
    with pytest.raises(ValueError):
        SelfEnergyKind("Single1D", -1.0)
    with pytest.raises(ValueError):
        SelfEnergyKind("Pair2D", G)
    with pytest.raises(ValueError):
        SelfEnergyKind("PlusMinus2D", G, n12=(0, 0))
    with pytest.raises(ValueError):
        SelfEnergyKind("Four2D", G)


def test_dark_pair_edge_value_is_finite():
    # 1D antisymmetric pair: Sigma_-(-2J) = -g^2 n12 / 2J even far below epsilon
    k = SelfEnergyKind("PlusMinus1D", G, n12=10, sign=-1)
    for u in (1e-300, 1e-100, 1e-20):
        assert complex(k.near_edge(u, -1)).real == pytest.approx(-(G**2) * 10 / 2, rel=1e-8)
