import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import scipy.constants

from beadlab import medium
from beadlab.errors import DomainError, InfiniteScreening, IonicDivergence


WATER = medium.load_material("water")
SILICA = medium.load_material("silica")


def make_medium(molar=0.22, **kw):
    return medium.ElectrolyteMedium(
        solvent=WATER, n_inf=medium.molar_to_number_density(molar), **kw
    )


class TestConstants:
    def test_codata_values(self):
        c = medium.CONSTANTS
        assert c.k_B == scipy.constants.k
        # scipy derives hbar = h/2pi; the rounded published value differs in
        # the 10th digit
        assert c.hbar == pytest.approx(scipy.constants.hbar, rel=1e-9)
        assert c.c == scipy.constants.c
        assert c.e == scipy.constants.e
        assert c.eps0 == pytest.approx(scipy.constants.epsilon_0, rel=1e-9)

    def test_immutable(self):
        with pytest.raises(Exception):
            medium.CONSTANTS.k_B = 1.0


class TestMatsubara:
    def test_n0_is_zero(self):
        assert medium.matsubara_frequency(0, 296.0) == 0.0

    def test_n1_value(self):
        # direct evaluation with CODATA constants
        assert medium.matsubara_frequency(1, 296.0) == pytest.approx(2.4349e14, rel=1e-4)

    def test_linear_in_n(self):
        x1 = medium.matsubara_frequency(1, 296.0)
        assert medium.matsubara_frequency(2, 296.0) == 2.0 * x1

    def test_bad_temperature(self):
        with pytest.raises(DomainError):
            medium.matsubara_frequency(1, 0.0)
        with pytest.raises(DomainError):
            medium.matsubara_frequency(1, -5.0)

    def test_ladder_spacing_exact(self):
        lad = medium.MatsubaraLadder(T=296.0, n_max=40)
        f = lad.frequencies
        assert f[0] == 0.0
        ratios = f[1:] / np.arange(1, 41)
        # constant to machine precision (one rounding per product)
        np.testing.assert_allclose(ratios, ratios[0], rtol=5e-16)
        assert np.all(np.diff(f) > 0)

    @given(st.integers(min_value=1, max_value=500), st.floats(min_value=1.0, max_value=2000.0))
    def test_scaling_property(self, n, T):
        x = medium.matsubara_frequency(n, T)
        assert x == pytest.approx(
            n * 2.0 * math.pi * scipy.constants.k * T / scipy.constants.hbar, rel=1e-9
        )


class TestPermittivity:
    def test_vacuum(self):
        empty = medium.DielectricModel(oscillators=(), static_eps=1.0, label="vacuum")
        assert medium.permittivity_imag_freq(empty, 0.0) == 1.0
        assert medium.permittivity_imag_freq(empty, 1e15) == 1.0

    def test_single_oscillator_half_point(self):
        one = medium.DielectricModel(oscillators=((1.0, 1e14),), static_eps=2.0)
        # at xi = omega the Lorentzian contributes C/2
        assert medium.permittivity_imag_freq(one, 1e14) == pytest.approx(1.5, rel=1e-14)

    def test_static_limit_continuous(self):
        for model in (WATER, SILICA):
            tiny = medium.permittivity_imag_freq(model, 1e6)
            assert tiny == pytest.approx(model.static_eps, rel=1e-9)
            assert medium.permittivity_imag_freq(model, 0.0) == model.static_eps

    def test_water_value_at_xi1(self):
        x1 = medium.matsubara_frequency(1, 296.0)
        e1 = medium.permittivity_imag_freq(WATER, x1)
        e2 = medium.permittivity_imag_freq(WATER, 2 * x1)
        assert 1.0 < e2 < e1 < WATER.static_eps

    @given(st.floats(min_value=0.0, max_value=1e18))
    @settings(max_examples=60)
    def test_monotone_and_bounded(self, xi):
        val = medium.permittivity_imag_freq(WATER, xi)
        assert val >= 1.0
        assert medium.permittivity_imag_freq(WATER, xi * 2.0 + 1.0) <= val + 1e-15

    def test_negative_strength_rejected(self):
        with pytest.raises(DomainError):
            medium.DielectricModel(oscillators=((-0.1, 1e14),), static_eps=1.0)

    def test_inconsistent_file_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(
            '{"label": "x", "static_eps": 5.0,'
            ' "oscillators": [{"C": 1.0, "omega_rad_s": 1e14}]}'
        )
        with pytest.raises(DomainError):
            medium.load_material(str(bad))


class TestIonicTerm:
    def test_no_ions(self):
        em = medium.ElectrolyteMedium(solvent=WATER, n_inf=0.0)
        assert medium.ionic_drude_term(em, 1e12) == 0.0

    def test_negligible_at_xi1(self):
        em = make_medium(0.22)
        x1 = medium.matsubara_frequency(1, 296.0)
        ratio = medium.ionic_drude_term(em, x1) / medium.permittivity_imag_freq(WATER, x1)
        assert ratio < 1e-3

    def test_diverges_at_zero(self):
        em = make_medium(0.22)
        with pytest.raises(IonicDivergence):
            medium.ionic_drude_term(em, 0.0)
        # and grows without bound as xi -> 0+
        small = medium.ionic_drude_term(em, 1e4)
        smaller = medium.ionic_drude_term(em, 1e2)
        assert smaller > small > medium.ionic_drude_term(em, 1e6)


class TestDebyeLength:
    def test_high_salt_anchor(self):
        em = make_medium(0.22)
        lam = medium.debye_length(em)
        assert lam == pytest.approx(0.64e-9, rel=0.02)

    def test_low_salt_inversion(self):
        # 25 nm screening corresponds to ~0.15 mM
        em = make_medium(1.47e-4)
        assert medium.debye_length(em) == pytest.approx(25e-9, rel=0.01)

    def test_sqrt_scaling(self):
        em1 = make_medium(0.05)
        em4 = make_medium(0.20)
        assert medium.debye_length(em1) == pytest.approx(2.0 * medium.debye_length(em4), rel=1e-12)

    def test_no_ions_signals(self):
        em = medium.ElectrolyteMedium(solvent=WATER, n_inf=0.0)
        with pytest.raises(InfiniteScreening):
            medium.debye_length(em)

    @given(
        st.floats(min_value=1e-5, max_value=1.0),
        st.integers(min_value=1, max_value=3),
    )
    @settings(max_examples=40)
    def test_exact_scaling_law(self, molar, Z):
        em_a = make_medium(molar, Z=Z)
        em_b = make_medium(molar, Z=1)
        # lambda_D ~ 1/Z at fixed n_inf
        assert medium.debye_length(em_a) * Z == pytest.approx(
            medium.debye_length(em_b), rel=1e-12
        )


class TestElectrolyteMedium:
    def test_plasma_frequency_precomputed(self):
        em = make_medium(0.22)
        expected = (
            em.n_inf
            * medium.CONSTANTS.e**2
            / (medium.CONSTANTS.eps0 * WATER.static_eps * em.ion_mass)
        )
        assert em.omega_ion_sq == pytest.approx(expected, rel=1e-14)

    def test_validation(self):
        with pytest.raises(DomainError):
            medium.ElectrolyteMedium(solvent=WATER, n_inf=-1.0)
        with pytest.raises(DomainError):
            medium.ElectrolyteMedium(solvent=WATER, n_inf=1.0, Z=0)
        with pytest.raises(DomainError):
            medium.ElectrolyteMedium(solvent=WATER, n_inf=1.0, T=-1.0)

    def test_eps_gap_combines(self):
        em = make_medium(0.22)
        x1 = medium.matsubara_frequency(1, 296.0)
        assert em.eps_gap(x1) == pytest.approx(
            medium.permittivity_imag_freq(WATER, x1) + medium.ionic_drude_term(em, x1),
            rel=1e-14,
        )
