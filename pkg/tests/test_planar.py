"""Planar free-energy oracles: analytic limits, screening, and PFA identities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import zeta

from beadlab.errors import AccuracyError, DomainError
from beadlab.medium import (
    CONSTANTS,
    ElectrolyteMedium,
    debye_length,
    load_material,
    molar_to_number_density,
)
from beadlab.planar import (
    HalfSpacePair,
    ZeroFreqModel,
    effective_hamaker,
    effective_radius,
    fresnel_reflection,
    pfa_energy,
    pfa_force,
    planar_energy_curve,
    planar_free_energy,
    zero_freq_screened_planar,
)

WATER = load_material("water")
SILICA = load_material("silica")
KT = CONSTANTS.k_B * 296.0
ZETA3 = float(zeta(3.0))


def make_pair(L, molar=0.22, wall1=SILICA, wall2=SILICA, T=296.0):
    med = ElectrolyteMedium(WATER, molar_to_number_density(molar), T=T)
    return HalfSpacePair(wall1, wall2, med, L, T)


class TestFresnel:
    def test_perfect_reflector_limit(self):
        # eps_wall -> inf: TE saturates at -1, TM at +1
        r_te, r_tm = fresnel_reflection(1e12, 2.0, 1e14, 1e6)
        assert r_te == pytest.approx(-1.0, abs=1e-5)
        assert r_tm == pytest.approx(1.0, abs=1e-5)

    def test_index_matched_wall_is_invisible(self):
        r_te, r_tm = fresnel_reflection(2.5, 2.5, 3e14, 4e6)
        assert r_te == 0.0
        assert r_tm == 0.0

    def test_zero_frequency_te_vanishes(self):
        # at xi = 0 both media have kappa = k, so TE sees no contrast
        r_te, r_tm = fresnel_reflection(3.8, 78.4, 0.0, 1e7)
        assert r_te == 0.0
        assert r_tm != 0.0

    def test_zero_frequency_tm_is_static_contrast(self):
        r_te, r_tm = fresnel_reflection(3.801, 78.4, 0.0, 1e7)
        assert r_tm == pytest.approx((3.801 - 78.4) / (3.801 + 78.4), rel=1e-12)

    def test_rejects_negative_permittivity(self):
        with pytest.raises(DomainError):
            fresnel_reflection(-1.0, 2.0, 1e14, 1e6)
        with pytest.raises(DomainError):
            fresnel_reflection(2.0, -1.0, 1e14, 1e6)

    def test_rejects_doubly_null_point(self):
        with pytest.raises(DomainError):
            fresnel_reflection(3.8, 78.4, 0.0, 0.0)

    @given(
        eps_w=st.floats(1.0, 1e4),
        eps_g=st.floats(1.0, 1e2),
        xi=st.floats(1e12, 1e16),
        k=st.floats(1e3, 1e9),
    )
    @settings(max_examples=60, deadline=None)
    def test_passive_bounds(self, eps_w, eps_g, xi, k):
        r_te, r_tm = fresnel_reflection(eps_w, eps_g, xi, k)
        assert abs(r_te) <= 1.0
        assert abs(r_tm) <= 1.0


class TestZeroFrequencyTerm:
    def test_unscreened_tm_universal_value(self):
        # the n = 0 perfect-TM term integrates to -kT zeta(3)/(16 pi L^2),
        # independent of wall material
        for L in (0.1e-6, 0.3e-6, 1.0e-6):
            got = planar_free_energy(make_pair(L), ZeroFreqModel.TM_UNSCREENED, n_max=0)
            want = -KT * ZETA3 / (16.0 * math.pi * L * L)
            assert got == pytest.approx(want, rel=1e-4)

    def test_unscreened_tm_wall_independent(self):
        a = planar_free_energy(make_pair(0.2e-6), ZeroFreqModel.TM_UNSCREENED, n_max=0)
        b = planar_free_energy(
            make_pair(0.2e-6, wall1=WATER, wall2=WATER),
            ZeroFreqModel.TM_UNSCREENED,
            n_max=0,
        )
        assert a == b

    def test_unscreened_hamaker_is_three_quarter_zeta3(self):
        L = 0.3e-6
        E0 = planar_free_energy(make_pair(L), ZeroFreqModel.TM_UNSCREENED, n_max=0)
        assert effective_hamaker(L, E0) / KT == pytest.approx(0.75 * ZETA3, rel=1e-4)

    def test_omit_has_no_zero_term(self):
        assert planar_free_energy(make_pair(0.2e-6), ZeroFreqModel.OMIT, n_max=0) == 0.0

    def test_screened_formula_value(self):
        # closed form against a hand-evaluated point
        L, lam, d0 = 0.2e-6, 25e-9, -0.9
        x = 2 * L / lam
        want = -(KT / (16 * math.pi * L * L)) * d0 * d0 * (1 + x) * math.exp(-x)
        assert zero_freq_screened_planar(L, lam, d0) == pytest.approx(want, rel=1e-12)

    def test_screened_suppression_at_ten_debye_lengths(self):
        lam = 25e-9
        L = 10 * lam
        v = zero_freq_screened_planar(L, lam, -1.0)
        plateau = -KT / (16 * math.pi * L * L)
        assert v / plateau == pytest.approx(21.0 * math.exp(-20.0), rel=1e-10)

    def test_screened_recovers_unscreened_scale_at_large_lambda(self):
        L = 0.2e-6
        v = zero_freq_screened_planar(L, 1.0, -1.0)
        assert v == pytest.approx(-KT / (16 * math.pi * L * L), rel=1e-10)

    def test_screened_rejects_bad_contrast(self):
        with pytest.raises(DomainError):
            zero_freq_screened_planar(0.2e-6, 25e-9, 1.5)

    @given(d0=st.floats(-1.0, 1.0))
    @settings(max_examples=40, deadline=None)
    def test_screened_quadratic_in_contrast(self, d0):
        base = zero_freq_screened_planar(0.2e-6, 25e-9, 1.0)
        assert zero_freq_screened_planar(0.2e-6, 25e-9, d0) == pytest.approx(
            base * d0 * d0, rel=1e-12, abs=1e-300
        )


class TestThermalSum:
    def test_attractive_and_monotone(self):
        energies = [
            planar_free_energy(make_pair(L * 1e-6)) for L in (0.1, 0.2, 0.4, 0.8)
        ]
        assert all(E < 0.0 for E in energies)
        assert np.all(np.diff(energies) > 0.0)  # toward zero with distance

    def test_unscreened_dominates_omit(self):
        pair = make_pair(0.2e-6)
        e_tm = planar_free_energy(pair, ZeroFreqModel.TM_UNSCREENED)
        e_void = planar_free_energy(pair, ZeroFreqModel.OMIT)
        assert e_tm < e_void < 0.0

    def test_high_salt_screened_equals_omit(self):
        # at 0.22 M the screened n=0 term carries e^{-2L/lambda_D} with
        # L/lambda_D ~ 300; it is zero to machine precision
        pair = make_pair(0.2e-6)
        e_scr = planar_free_energy(pair, ZeroFreqModel.SCREENED_LONGITUDINAL)
        e_void = planar_free_energy(pair, ZeroFreqModel.OMIT)
        assert e_scr == pytest.approx(e_void, rel=1e-12)

    def test_low_salt_screened_exceeds_omit(self):
        pair = make_pair(0.2e-6, molar=0.147e-3)
        e_scr = planar_free_energy(pair, ZeroFreqModel.SCREENED_LONGITUDINAL)
        e_void = planar_free_energy(pair, ZeroFreqModel.OMIT)
        assert e_scr < e_void

    def test_index_matched_walls_only_keep_universal_term(self):
        pair = make_pair(0.3e-6, wall1=WATER, wall2=WATER)
        e_tm = planar_free_energy(pair, ZeroFreqModel.TM_UNSCREENED)
        e0 = planar_free_energy(pair, ZeroFreqModel.TM_UNSCREENED, n_max=0)
        # n >= 1 contributions vanish up to the (~1e-6) ionic index mismatch
        assert e_tm == pytest.approx(e0, rel=1e-9)

    def test_adaptive_matches_long_explicit_ladder(self):
        pair = make_pair(0.2e-6)
        adaptive = planar_free_energy(pair)
        explicit = planar_free_energy(pair, n_max=400)
        assert adaptive == pytest.approx(explicit, rel=1e-6)

    def test_unattainable_tolerance_reports_accuracy_error(self):
        with pytest.raises(AccuracyError) as err:
            planar_free_energy(make_pair(0.2e-6), tol=1e-16)
        assert err.value.bound is not None

    def test_pair_validation(self):
        med = ElectrolyteMedium(WATER, molar_to_number_density(0.22))
        with pytest.raises(DomainError):
            HalfSpacePair(SILICA, SILICA, med, -1e-9)
        with pytest.raises(DomainError):
            HalfSpacePair(SILICA, SILICA, med, 1e-7, T=0.0)


class TestProximityForce:
    def test_effective_radius(self):
        assert effective_radius(2e-6, 2e-6) == pytest.approx(1e-6, rel=1e-12)
        assert effective_radius(2.35e-6, 11.74e-6) == pytest.approx(1.958e-6, rel=1e-3)

    def test_pfa_on_inverse_square_curve(self):
        # E = -C/L^2 integrates to U = -2 pi R C/L and F = -2 pi R C/L^2
        C = 3.7e-22

        def curve(L):
            return -C / (L * L)

        R, L = 1.9e-6, 0.3e-6
        assert pfa_energy(R, L, curve) == pytest.approx(
            -2 * math.pi * R * C / L, rel=1e-6
        )
        assert pfa_force(R, L, curve) == pytest.approx(
            -2 * math.pi * R * C / (L * L), rel=1e-12
        )

    def test_pfa_force_is_energy_gradient(self):
        med = ElectrolyteMedium(WATER, molar_to_number_density(0.22))
        curve = planar_energy_curve(SILICA, SILICA, med)
        R, L, h = 1.958e-6, 0.25e-6, 1e-9
        dU = (pfa_energy(R, L + h, curve) - pfa_energy(R, L - h, curve)) / (2 * h)
        assert pfa_force(R, L, curve) == pytest.approx(-dU, rel=1e-4)

    def test_pfa_energy_negative_and_decaying(self):
        med = ElectrolyteMedium(WATER, molar_to_number_density(0.22))
        curve = planar_energy_curve(SILICA, SILICA, med)
        u1 = pfa_energy(1.958e-6, 0.2e-6, curve)
        u2 = pfa_energy(1.958e-6, 0.4e-6, curve)
        assert u1 < u2 < 0.0

    def test_rejects_bad_arguments(self):
        with pytest.raises(DomainError):
            pfa_force(-1e-6, 1e-7, lambda L: 0.0)
        with pytest.raises(DomainError):
            pfa_energy(1e-6, 0.0, lambda L: 0.0)
