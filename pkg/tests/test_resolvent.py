import numpy as np
import pytest

from lqed.bath import BathModel
from lqed.evolve import EvolveConfig, split_step_evolve
from lqed.resolvent import (
    amplitude,
    amplitude_fourier,
    axis_poles,
    bound_state_energy_lambert,
    branch_cut_contribution,
    c4_infinity,
    closed_forms,
    decompose,
    find_bound_states,
    find_unstable_poles,
    gamma_bar_e,
    gamma_sb_asymptote,
    markov_rate,
    r_sb_1d,
    subradiant_pole_2d,
)
from lqed.scenarios import EmitterConfig
from lqed.selfenergy import SelfEnergyKind
from lqed.specfun import lambert_w0

G = 0.1


def two_up_count(kind, delta):
    return len(find_unstable_poles(kind, delta))


def window(kind, deltas):
    inside = [d for d in deltas if two_up_count(kind, d) == 2]
    return min(inside), max(inside)


# -- bound states --------------------------------------------------------------


def test_deep_bound_state_dominates():
    bs = find_bound_states(SelfEnergyKind("Single2D", G), -5.0)
    lbs = [p for p in bs if p.kind == "LBS"]
    assert len(lbs) == 1 and abs(lbs[0].residue) > 0.99
    assert lbs[0].z.real < -5.0


@pytest.mark.parametrize("delta", [-4.1, -4.0, -3.95])
def test_bound_state_energy_lambert(delta):
    g = 0.3
    E = find_bound_states(SelfEnergyKind("Single2D", g), delta)[0].z.real
    approx = bound_state_energy_lambert(g, delta)
    assert abs((approx + 4.0) - (E + 4.0)) < 0.01 * abs(E + 4.0)


def test_chain_dark_pair_threshold():
    g, n12 = 0.1, 10
    dc = g * g * n12 / 2.0
    k = SelfEnergyKind("PlusMinus1D", g, n12=n12, sign=-1)
    for delta in (-2.0 + dc + 1e-4, -2.0 + dc + 0.01, -1.5, 0.0):
        assert not [p for p in find_bound_states(k, delta) if p.kind == "LBS"]
    for delta in (-2.0 + dc - 1e-3, -2.0, -2.5):
        assert [p for p in find_bound_states(k, delta) if p.kind == "LBS"]


def test_bound_state_residue_formula():
    k = SelfEnergyKind("Single1D", 0.4)
    p = find_bound_states(k, -2.0)[0]
    E = p.z.real
    # Sigma_e = -g^2/sqrt(E^2 - 4) below the band; R = 1/(1 - Sigma')
    dS = 0.16 * E / (E * E - 4.0) ** 1.5
    assert p.residue == pytest.approx(1.0 / (1.0 - dS), rel=1e-8)
    assert E == pytest.approx(-2.0 - 0.16 / np.sqrt(E * E - 4.0), abs=1e-12)


# -- unstable poles -------------------------------------------------------------


def test_band_centre_unstable_poles():
    ups = find_unstable_poles(SelfEnergyKind("Single2D", G), 0.0)
    assert len(ups) == 2
    a, b = ups
    assert a.z.imag == pytest.approx(b.z.imag, rel=1e-10)
    assert a.z.real == pytest.approx(-b.z.real, rel=1e-10)
    assert -2 * a.z.imag == pytest.approx(gamma_bar_e(G), rel=0.1)


def test_chain_unstable_pole_is_finite():
    g = 0.4
    ups = find_unstable_poles(SelfEnergyKind("Single1D", g), 0.0)
    assert len(ups) == 1
    rate = -2 * ups[0].z.imag
    assert np.isfinite(rate) and 0 < rate
    assert rate == pytest.approx(g * g, rel=0.1)


def test_single_emitter_window():
    k = SelfEnergyKind("Single2D", G)
    lo, hi = window(k, np.linspace(-0.8, 0.8, 17) * G * G)
    assert lo == pytest.approx(-0.5 * G * G, abs=0.1 * G * G)
    assert hi == pytest.approx(0.5 * G * G, abs=0.1 * G * G)


def test_nearest_neighbour_dark_window_is_shifted():
    # width g^2/J as for the diagonal pair; shifted by the constant in Sigma_12(1,0)
    k = SelfEnergyKind("PlusMinus2D", G, n12=(1, 0), sign=-1)
    lo, hi = window(k, np.linspace(-0.5, 1.0, 16) * G * G)
    assert lo == pytest.approx(-0.25 * G * G, abs=0.1 * G * G)
    assert hi == pytest.approx(0.75 * G * G, abs=0.1 * G * G)


def test_axis_pole_matches_subradiant_rate():
    for n in range(2, 7):
        k = SelfEnergyKind("PlusMinus2D", G, n12=(2 * n, 2 * n), sign=-1)
        poles = axis_poles(k, 0.0)
        assert len(poles) == 2
        for p in poles:
            assert p.z.real == pytest.approx(0.0, abs=1e-290)
            assert -2 * p.z.imag == pytest.approx(subradiant_pole_2d(G, n), rel=1e-6)


def test_sum_rule_is_broken_for_short_pairs():
    gb = gamma_bar_e(G)
    for n in (1, 2):
        plus = find_unstable_poles(SelfEnergyKind("PlusMinus2D", G, n12=(2 * n, 2 * n), sign=1), 0.0)
        g_sp = -2 * plus[0].z.imag
        g_sb = subradiant_pole_2d(G, n)
        assert g_sp + g_sb < 2 * gb


def test_deep_subradiance_at_weak_coupling():
    ratios = [subradiant_pole_2d(g, 5) / gamma_bar_e(g) for g in (0.1, 0.03, 0.01)]
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[0] < 1.0


def test_subradiant_asymptote_at_weak_coupling():
    g = 0.01
    for n in (100, 300, 1000):
        assert subradiant_pole_2d(g, n) == pytest.approx(gamma_sb_asymptote(g, n), rel=0.02)


# -- branch cuts and the full amplitude ------------------------------------------


@pytest.mark.parametrize(
    "kind,delta",
    [
        (SelfEnergyKind("Single1D", G), 0.0),
        (SelfEnergyKind("Single1D", 0.4), -2.0),
        (SelfEnergyKind("Single2D", G), 0.0),
        (SelfEnergyKind("Single2D", 0.3), -3.0),
        (SelfEnergyKind("PlusMinus1D", 0.2, n12=3, sign=-1), 0.5),
        (SelfEnergyKind("PlusMinus2D", G, n12=(1, 1), sign=-1), 0.0),
        (SelfEnergyKind("PlusMinus2D", G, n12=(2, 2), sign=-1), 0.0),
    ],
)
def test_completeness(kind, delta):
    assert abs(decompose(kind, delta).completeness() - 1.0) < 1e-4


def test_middle_cut_jumps_across_band_centre():
    k = SelfEnergyKind("Single2D", G)
    mbc = [abs(decompose(k, d).contributions_at(0.0).get("MBC", 0.0)) for d in (-0.03, -1e-3, 1e-3, 0.03)]
    assert mbc[1] > 3 * mbc[0] and mbc[2] > 3 * mbc[3]
    assert abs(decompose(k, 0.0).contributions_at(0.0)["MBC"]) > 0.2


def test_chain_edge_cuts_small_at_band_centre():
    parts = decompose(SelfEnergyKind("Single1D", G), 0.0).contributions_at(0.0)
    assert abs(parts["LBC"] + parts["UBC"]) < 1e-2


def test_branch_cut_contribution_matches_decomposition():
    k = SelfEnergyKind("Single2D", G)
    dec = decompose(k, 0.0)
    t = np.array([0.0, 10.0, 100.0])
    cut = branch_cut_contribution(k, 0.0, "MBC", t)
    assert np.allclose(cut, [dec.contributions_at(ti)["MBC"] for ti in t], atol=1e-10)


def test_amplitude_limits():
    k = SelfEnergyKind("Single2D", G)
    assert abs(amplitude(k, 0.0, 0.0) - 1.0) < 1e-4
    free = SelfEnergyKind("Single2D", 0.0)
    t = np.linspace(0, 30, 7)
    assert np.allclose(amplitude(free, 0.7, t), np.exp(-0.7j * t))
    with pytest.raises(ValueError):
        decompose(free, 0.7)
    with pytest.raises(ValueError):
        decompose(SelfEnergyKind("Pair2D", G, n12=(1, 0)), 0.0)


@pytest.mark.parametrize(
    "kind,delta",
    [
        (SelfEnergyKind("Single1D", 0.4), 0.0),
        (SelfEnergyKind("Single1D", 0.4), -2.0),
        (SelfEnergyKind("Single2D", 0.3), -1.0),
        (SelfEnergyKind("PlusMinus1D", 0.2, n12=3, sign=-1), 0.5),
    ],
)
def test_amplitude_matches_fourier_inversion(kind, delta):
    t = np.linspace(0, 60, 13)
    assert np.abs(decompose(kind, delta).amplitude(t) - amplitude_fourier(kind, delta, t)).max() < 1e-5


def test_amplitude_matches_lattice_simulation():
    cfg = EvolveConfig(BathModel(2, 2**13), EmitterConfig(G, 0.0, ((0, 0),)), t_max=50.0, sample_every=20)
    tr = split_step_evolve(cfg)
    ref = decompose(SelfEnergyKind("Single2D", G), 0.0).amplitude(tr.times)
    assert np.abs(tr.populations()[:, 0] - np.abs(ref) ** 2).max() < 1e-3


# -- Markov limit and closed forms -----------------------------------------------


def test_markov_chain():
    assert markov_rate(SelfEnergyKind("Single1D", G), 0.0).gamma == pytest.approx(G * G, rel=1e-12)
    for delta in (-1.5, -0.3, 0.8):
        k_ = np.arccos(-delta / 2.0)
        ge = markov_rate(SelfEnergyKind("Single1D", G), delta).gamma
        for n12 in (1, 4, 7):
            for sign in (1, -1):
                got = markov_rate(SelfEnergyKind("PlusMinus1D", G, n12=n12, sign=sign), delta).gamma
                assert got == pytest.approx(ge * (1 + sign * np.cos(k_ * n12)), rel=1e-9, abs=1e-15)


def test_markov_divergences():
    assert markov_rate(SelfEnergyKind("Single2D", G), 0.0).divergent
    assert markov_rate(SelfEnergyKind("Single1D", G), 2.0).divergent
    m = markov_rate(SelfEnergyKind("Single1D", G), 3.0)
    assert m.gamma == 0.0 and not m.divergent


def test_closed_form_values():
    assert gamma_bar_e(G) == pytest.approx(0.01 / np.pi * lambert_w0(3200 * np.pi), rel=1e-14)
    assert gamma_bar_e(G) == pytest.approx(0.02303, abs=1e-5)
    assert gamma_sb_asymptote(G, 10) == pytest.approx(0.01579, abs=1e-5)
    assert c4_infinity(0.05, 8) == pytest.approx(0.8621, abs=1e-4)
    assert r_sb_1d(G, 0.0, 42) == pytest.approx(1 / 1.105, rel=1e-12)
    cf = closed_forms(G, delta=-1.0, n=10, n12=42)
    assert set(cf) == {"gamma_bar_e", "E_LBS", "E_UBS", "gamma_sb", "C4_inf", "R_sb_1d"}
    assert "R_sb_1d" not in closed_forms(G, delta=-4.0, n12=42)
    with pytest.raises(ValueError):
        r_sb_1d(G, 2.5, 4)
