r"""Exact fluctuation interaction between two dielectric spheres.

The free energy of the sphere pair is assembled from round trips of
fluctuating waves across the gap,

.. math::

    U = k_B T \sideset{}{'}\sum_{n \ge 0} \sum_{m=-\infty}^{\infty}
        \ln\det\!\left(1 - \mathcal{M}_m(\xi_n)\right),

where :math:`\mathcal{M}_m` is the half-trip product (reflect off sphere 1,
translate, reflect off sphere 2, translate back) restricted to azimuthal
order :math:`m`, and the prime halves the n = 0 term.  Everything is
evaluated in a plane-wave basis aligned with the line of centers: the
continuous transverse momentum is discretized by Nystrom quadrature, the
azimuthal angle by a uniform FFT grid, and each sphere's reflection
operator is built from its Mie amplitudes at imaginary frequency (Bohren &
Huffman conventions, evaluated on the exponentially decaying branch where
every quantity is real).

Numerical architecture, in brief:

* The radial grid maps Gauss-Legendre nodes through a cubic fold of the
  exponential map, clustering points where the round-trip factor
  :math:`e^{-2\kappa L}` (or :math:`e^{-\kappa d}` at wide separation)
  actually varies.
* Reflection kernels are evaluated in a *scaled* form: the translation
  factor :math:`e^{-(\kappa_i+\kappa_o)(R_j + L/2)}` is folded into the
  sphere-j kernel so every matrix entry is bounded; the product over both
  spheres restores the full gap decay.  Overflow is impossible by
  construction, and a shared power-of-two exponent carried through the
  multipole recursion keeps deep sub-range amplitudes (down to
  :math:`e^{-s}` with :math:`s` in the thousands) exact instead of
  flushing them to zero.
* The multipole depth follows a Wiscombe-style cap evaluated at the
  *diameter* size parameter (the angular sum for an off-axis entry peaks
  near :math:`\ell \sim 2R\sqrt{k_i k_o}`), with an adaptive early-out
  once the partial sums stop moving.
* Matsubara terms and azimuthal blocks are independent; they are summed
  in a fixed deterministic order so identical inputs give bit-identical
  results regardless of machine parallelism.

The n = 0 term follows the same model fork as the planar layer
(:class:`~beadlab.planar.ZeroFreqModel`): the unscreened-TM branch uses
the universal saturated-multipole closed form (material-independent, like
its planar :math:`-\zeta(3) k_B T/16\pi L^2` counterpart), while the
screened-longitudinal branch sends the whole zero-frequency sphere term
to zero — ionic screening kills every static multipole, which is the
model-gap physics this module exists to expose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .errors import AccuracyError, DomainError, PassivityError
from .geometry import SpherePairGeometry
from .medium import (
    CONSTANTS,
    DielectricModel,
    ElectrolyteMedium,
    matsubara_frequency,
    permittivity_imag_freq,
)
from .planar import ZeroFreqModel

__all__ = [
    "SpherePairGeometry",
    "SphereMaterials",
    "QuadratureSpec",
    "MieTable",
    "RoundTripBlock",
    "auto_quadrature",
    "mie_amplitudes_imag",
    "roundtrip_block",
    "logdet_one_minus",
    "zero_frequency_energy_spheres",
    "casimir_energy_spheres",
    "casimir_force_spheres",
]

_KB = CONSTANTS.k_B
_C = CONSTANTS.c


@dataclass(frozen=True)
class SphereMaterials:
    """Dielectric models for the two spheres and the gap electrolyte."""

    sphere1: DielectricModel
    sphere2: DielectricModel
    gap: ElectrolyteMedium


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretization sizes for the two-sphere scattering problem.

    Parameters
    ----------
    N_radial : int
        Transverse-momentum nodes (>= 4).
    N_azimuthal : int
        Uniform angular samples feeding the FFT over the azimuthal
        difference angle (>= 4).
    m_max : int
        Highest azimuthal block retained; must leave headroom below the
        FFT Nyquist bin, ``m_max <= N_azimuthal//2 - 1``.
    tol : float
        Relative tolerance for the node-doubling convergence loop,
        in (0, 1e-2].
    """

    N_radial: int
    N_azimuthal: int
    m_max: int
    tol: float = 1e-3

    def __post_init__(self):
        if self.N_radial < 4 or self.N_azimuthal < 4:
            raise DomainError("quadrature counts must be >= 4")
        if self.m_max < 0:
            raise DomainError("m_max must be >= 0")
        if self.m_max > self.N_azimuthal // 2 - 1:
            raise DomainError(
                f"m_max = {self.m_max} needs N_azimuthal >= {2 * (self.m_max + 1)}"
            )
        if not (0.0 < self.tol <= 1e-2):
            raise DomainError("tol must lie in (0, 1e-2]")

    def doubled(self) -> "QuadratureSpec":
        """Next refinement level: double radial and azimuthal resolution."""
        m2 = 2 * self.m_max
        return QuadratureSpec(
            2 * self.N_radial, _next_pow2(max(4 * m2, 16)), m2, self.tol
        )


def auto_quadrature(geo: SpherePairGeometry, tol: float = 1e-3) -> QuadratureSpec:
    """Starting discretization scaled to the aspect ratio R_eff/L.

    Both the radial node count and the azimuthal bandwidth of the
    round-trip kernel grow like the square root of the aspect ratio
    (transverse momenta up to ~1/L interacting over the Derjaguin contact
    zone of width ~sqrt(R_eff L)); the prefactors are calibrated against
    the convergence studies in the test battery.
    """
    rho = geo.effective_radius / geo.L
    n_rad = max(16, int(math.ceil(8.0 * math.sqrt(rho))))
    m_max = max(12, int(math.ceil(6.0 * math.sqrt(rho))))
    return QuadratureSpec(n_rad, _next_pow2(max(4 * m_max, 16)), m_max, tol)


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def _gauss01(n):
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _radial_grid(scale, N):
    # cubic fold of the exponential map; ascending in k
    s, ws = _gauss01(N)
    k = -3.0 * np.log(s) / (2.0 * scale)
    w = 3.0 * ws / (2.0 * scale * s)
    return k[::-1].copy(), w[::-1].copy()


def _grid_scale(geo: SpherePairGeometry) -> float:
    # round-trip decay is e^{-2 kap L} near contact but only e^{-kap d}
    # once the gap dwarfs the spheres; resolve the slower of the two
    return 0.5 * min(2.0 * geo.L, geo.L + geo.R1 + geo.R2)


def _ell_cap(x: float) -> int:
    # Wiscombe-style depth at the diameter size parameter y = 2x
    y = max(2.0 * x, 1.0)
    return int(math.ceil(y + 4.0 * y ** (1.0 / 3.0) + 4.0))


# --------------------------------------------------------------------------
# Mie amplitudes at imaginary frequency
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MieTable:
    """Mie amplitudes a_l (electric) and b_l (magnetic), log/sign split.

    Stored as ``sign * exp(log)`` pairs so deeply evanescent orders keep
    their exact magnitude; the ``electric``/``magnetic`` properties
    materialize plain arrays.  These can under- or overflow far from
    x ~ 1 (on the imaginary axis low orders grow like e^{2x}, always
    compensated by translation factors downstream) — the solver itself
    only ever consumes the split form.
    """

    R: float
    xi: float
    ln_electric: np.ndarray
    sign_electric: np.ndarray
    ln_magnetic: np.ndarray
    sign_magnetic: np.ndarray

    @property
    def ell_max(self) -> int:
        return len(self.ln_electric)

    @property
    def electric(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.sign_electric * np.exp(self.ln_electric)

    @property
    def magnetic(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.sign_magnetic * np.exp(self.ln_magnetic)


def mie_amplitudes_imag(R, eps_sphere, eps_medium, xi, ell_max) -> MieTable:
    """Mie reflection amplitudes of one sphere at imaginary frequency.

    On the imaginary axis the Riccati-Bessel pair degenerates to real
    modified functions and both amplitude families are real with definite
    signs.  The ratios of successive functions are generated by stable
    continued-fraction recursions (downward for the growing family,
    upward for the decaying one), so no order ever overflows regardless
    of ``ell_max`` — deep orders simply carry very negative logs.

    ``xi = 0`` returns the electrostatic multipole response
    ``l (eps_s - eps_m) / (l eps_s + (l+1) eps_m)`` (the magnetic family
    vanishes identically); ``eps_medium = inf`` is accepted there and
    yields the saturated response ``-l/(l+1)`` of a diverging ionic gap.
    """
    if R <= 0.0:
        raise DomainError("sphere radius must be > 0")
    if ell_max < 1:
        raise DomainError("ell_max must be >= 1")
    if xi < 0.0:
        raise DomainError("imaginary frequency must be >= 0")
    ell = np.arange(1, ell_max + 1, dtype=float)

    if xi == 0.0:
        if math.isinf(eps_medium):
            ce = -ell / (ell + 1.0)
        elif math.isinf(eps_sphere):
            ce = np.ones_like(ell)
        else:
            ce = ell * (eps_sphere - eps_medium) / (
                ell * eps_sphere + (ell + 1.0) * eps_medium
            )
        with np.errstate(divide="ignore"):
            ln_e = np.log(np.abs(ce))
        zeros = np.zeros_like(ell)
        return MieTable(R, 0.0, ln_e, np.sign(ce), np.full_like(ell, -np.inf), zeros)

    if math.isinf(eps_medium) or eps_medium <= 0.0 or eps_sphere <= 0.0:
        raise DomainError("permittivities must be finite and > 0 at xi > 0")

    ln_a, sg_a, ln_b, sg_b = _mie_log_tables(R, eps_sphere, eps_medium, xi, ell_max)
    return MieTable(R, xi, ln_a, sg_a, ln_b, sg_b)


def _mie_log_tables(R, eps_s, eps_m, xi, ell_max):
    Kt = math.sqrt(eps_m) * xi / _C
    um = Kt * R
    mr = math.sqrt(eps_s / eps_m)
    us = mr * um

    def i_ratios(u, lmax):
        # ratios of the exponentially growing family, downward (stable)
        ltop = lmax + 16 + int(1.2 * u)
        rs = np.empty(ltop + 2)
        rs[ltop + 1] = u / (2.0 * ltop + 3.0)
        for ll in range(ltop, 0, -1):
            rs[ll] = 1.0 / ((2.0 * ll + 1.0) / u + rs[ll + 1])
        return rs[1 : lmax + 1]

    def k_ratios(u, lmax):
        # decaying family, upward (stable in this direction)
        rhos = np.empty(lmax + 1)
        rhos[1] = 1.0 + 1.0 / u
        for ll in range(1, lmax):
            rhos[ll + 1] = 1.0 / rhos[ll] + (2.0 * ll + 1.0) / u
        return rhos[1:]

    ell = np.arange(1, ell_max + 1, dtype=float)
    r_m = i_ratios(um, ell_max)
    r_s = i_ratios(us, ell_max)
    rho_m = k_ratios(um, ell_max)

    g_m = 1.0 / r_m - ell / um
    g_s = 1.0 / r_s - ell / us
    h_m = -1.0 / rho_m - ell / um

    lnS0 = um + math.log(-math.expm1(-2.0 * um) / 2.0)
    lnC0 = math.log(math.pi / 2.0) - um
    lnS = lnS0 + np.cumsum(np.log(r_m))
    lnC = lnC0 + np.cumsum(np.log(rho_m))

    sign_l = np.where(np.arange(1, ell_max + 1) % 2 == 1, 1.0, -1.0)

    Ga = mr * g_m - g_s
    Ha = mr * h_m - g_s
    Gb = g_m - mr * g_s
    Hb = h_m - mr * g_s
    with np.errstate(divide="ignore"):
        ln_a = (
            math.log(math.pi / 2.0) + lnS - lnC
            + np.log(np.abs(Ga)) - np.log(np.abs(Ha))
        )
        ln_b = (
            math.log(math.pi / 2.0) + lnS - lnC
            + np.log(np.abs(Gb)) - np.log(np.abs(Hb))
        )
    sg_a = sign_l * np.sign(Ga) * np.sign(Ha)
    sg_b = sign_l * np.sign(Gb) * np.sign(Hb)
    return ln_a, sg_a, ln_b, sg_b


# --------------------------------------------------------------------------
# Half-trip reflection blocks (one sphere), thermal frequencies
# --------------------------------------------------------------------------


def _half_trip_blocks(R, ln_a, sg_a, ln_b, sg_b, Kt, k, wk, L, Mphi, m_max,
                      mirror=False):
    """Per-m real (2N, 2N) half-round-trip matrices for one sphere.

    Row/col layout [TM..., TE...].  The translation split assigns
    e^{-(kap+kap')(R + L/2)} to this sphere so every entry stays bounded;
    the product over both spheres restores e^{-2 kap d}.  ``mirror`` flips
    the sign of sin(dphi) — the two spheres see the azimuthal frame with
    opposite handedness, which only matters for the TM<->TE blocks.
    """
    N = len(k)
    kap = np.sqrt(k * k + Kt * Kt)
    iu, ju = np.triu_indices(N)
    ko, ki = k[iu], k[ju]
    kpo, kpi = kap[iu], kap[ju]

    dphi = 2.0 * np.pi * np.arange(Mphi) / Mphi
    sgn_cross = -1.0 if mirror else 1.0
    sd = sgn_cross * np.sin(dphi)[None, :]
    c2 = np.cos(0.5 * dphi)[None, :] ** 2

    Kt2 = Kt * Kt
    kk = (ki * ko)[:, None]
    # cancellation-free forms:
    #   kap_i kap_o - k_i k_o = Kt^2 (k_i^2 + k_o^2 + Kt^2)/(kap kap + kk)
    cross_term = (Kt2 * (ki * ki + ko * ko + Kt2) / (kpi * kpo + ki * ko))[:, None]
    base = 2.0 * kk * c2 + cross_term          # k_i k_o cos + kap_i kap_o
    base_m = 2.0 * kk * c2 + (
        Kt2 * (ki - ko) ** 2 / (kpi * kpo + ki * ko + Kt2)
    )[:, None]                                  # base - Kt^2
    z = -base / Kt2
    Nden = base_m * (base + Kt2)

    f1_off = (Kt2 * (ko * ko - ki * ki) / (kpi * ko + kpo * ki))[:, None]
    F1 = 2.0 * (kpo * ki)[:, None] * c2 + f1_off   # kap_i k_o + kap_o k_i cos
    F2 = 2.0 * (kpi * ko)[:, None] * c2 - f1_off

    with np.errstate(invalid="ignore", divide="ignore"):
        A = F1 * F2 / Nden
        B = Kt2 * kk * sd * sd / Nden
        Cx = F1 * (Kt * ko)[:, None] * sd / Nden
        Dx = F2 * (Kt * ki)[:, None] * sd / Nden
    if Mphi % 2 == 0:
        # dphi = pi on the diagonal: removable 0/0, finite limit (0,1,0,0)
        jpi = Mphi // 2
        diag = np.where(iu == ju)[0]
        A[diag, jpi] = 0.0
        B[diag, jpi] = 1.0
        Cx[diag, jpi] = 0.0
        Dx[diag, jpi] = 0.0

    # scaled multipole recursion.  z = -cosh u, so z e^{-u} = -(1+e^{-2u})/2
    delta = base_m / Kt2
    eu = delta + np.sqrt(delta * (delta + 2.0)) + 1.0
    emu = 1.0 / eu
    zeu = -0.5 * (1.0 + emu * emu)

    s_pair = (R * (kpo + kpi))[:, None]
    # the running amplitude products sweep from e^{-s} up to the O(1)
    # scaled kernel; s reaches thousands at small gaps, so carry a shared
    # power-of-two exponent instead of letting the start underflow
    ln2 = math.log(2.0)
    e2a = (ln_a[0] - s_pair) / ln2
    e2b = (ln_b[0] - s_pair) / ln2
    e2top = np.maximum(e2a, e2b)
    e2top = np.where(np.isfinite(e2top), e2top, -1e9)
    ex = np.floor(np.broadcast_to(e2top, z.shape)).astype(np.int32)
    Ea = sg_a[0] * np.exp2(e2a - ex)
    Eb = sg_b[0] * np.exp2(e2b - ex)

    pi_prev = np.zeros_like(z)
    pi_cur = np.ones_like(z)
    S1 = np.zeros_like(z)
    S2 = np.zeros_like(z)
    ell_max = len(ln_a)
    scale_ref = 0.0
    quiet = 0
    for ll in range(1, ell_max + 1):
        w1 = (2.0 * ll + 1.0) / (ll * (ll + 1.0))
        tau = ll * z * pi_cur - (ll + 1.0) * emu * pi_prev
        c1 = np.ldexp(w1 * (Ea * pi_cur + Eb * tau), ex)
        c2s = np.ldexp(w1 * (Ea * tau + Eb * pi_cur), ex)
        S1 += c1
        S2 += c2s
        step = max(np.max(np.abs(c1)), np.max(np.abs(c2s)))
        scale_ref = max(scale_ref, np.max(np.abs(S2)), np.max(np.abs(S1)))
        if ll >= 4 and step < 1e-17 * scale_ref:
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
        if ll < ell_max:
            pi_next = ((2.0 * ll + 1.0) / ll) * zeu * pi_cur \
                - ((ll + 1.0) / ll) * (emu * emu) * pi_prev
            pi_prev, pi_cur = pi_cur, pi_next
            ra = math.exp(ln_a[ll] - ln_a[ll - 1]) * sg_a[ll] * sg_a[ll - 1]
            rb = math.exp(ln_b[ll] - ln_b[ll - 1]) * sg_b[ll] * sg_b[ll - 1]
            Ea = Ea * eu * ra
            Eb = Eb * eu * rb
            m = np.maximum(np.abs(Ea), np.abs(Eb))
            up = (m < 2.0 ** -500) & (m > 0.0)
            if up.any():
                f = np.where(up, 2.0 ** 512, 1.0)
                Ea *= f
                Eb *= f
                ex -= np.where(up, 512, 0).astype(np.int32)
            dn = m > 2.0 ** 500
            if dn.any():
                f = np.where(dn, 2.0 ** -512, 1.0)
                Ea *= f
                Eb *= f
                ex += np.where(dn, 512, 0).astype(np.int32)

    TMTM = S2 * A + S1 * B
    TETE = S2 * B + S1 * A
    TMTE = S2 * Cx - S1 * Dx
    TETM = S2 * Dx - S1 * Cx

    F = np.fft.rfft(np.stack([TMTM, TETE, TMTE, TETM]), axis=-1)
    half = np.sqrt(wk * k / kap) * np.exp(-kap * L / 2.0)
    pref = np.outer(half, half) / (Kt * Mphi)

    out = []
    for m in range(m_max + 1):
        tmtm = np.empty((N, N))
        tete = np.empty((N, N))
        tmte = np.empty((N, N))
        tetm = np.empty((N, N))
        tmtm[iu, ju] = F[0, :, m].real
        tmtm[ju, iu] = F[0, :, m].real
        tete[iu, ju] = F[1, :, m].real
        tete[ju, iu] = F[1, :, m].real
        tmte[iu, ju] = -F[2, :, m].imag
        tetm[iu, ju] = F[3, :, m].imag
        # swap symmetry S_TMTE(ko, ki; dphi) = S_TETM(ki, ko; dphi): the
        # same channel-slot sign convention applies on mirrored entries
        tmte[ju, iu] = -F[3, :, m].imag
        tetm[ju, iu] = F[2, :, m].imag
        D = np.empty((2 * N, 2 * N))
        D[:N, :N] = tmtm * pref
        D[N:, N:] = tete * pref
        D[:N, N:] = tmte * pref
        D[N:, :N] = tetm * pref
        out.append(D)
    return out


# --------------------------------------------------------------------------
# Universal zero-frequency (saturated TM) blocks
# --------------------------------------------------------------------------


def _axial_tm_scaled(warg, s, ell_cap=None):
    """e^{-s} S(w), S = cosh w - 2 sinh(w)/w + 2(cosh w - 1)/w^2."""
    if ell_cap == 1:
        return np.exp(-s) * 0.25 * warg * warg
    if ell_cap is not None:
        raise DomainError("zero-frequency truncation supports ell_cap in {None, 1}")
    out = np.empty_like(warg)
    sm = warg < 0.5
    w2 = warg[sm] ** 2
    out[sm] = np.exp(-s[sm]) * w2 * (
        0.25 + w2 * (1.0 / 36.0 + w2 * (1.0 / 960.0 + w2 / 50400.0))
    )
    wb = warg[~sm]
    sb = s[~sm]
    iw = 1.0 / wb
    out[~sm] = (
        0.5 * np.exp(wb - sb) * (1.0 - 2.0 * iw + 2.0 * iw * iw)
        + 0.5 * np.exp(-wb - sb) * (1.0 + 2.0 * iw + 2.0 * iw * iw)
        - 2.0 * np.exp(-sb) * iw * iw
    )
    return out


def _static_blocks(R, k, wk, L, Mphi, m_max, ell_cap=None):
    """Per-m TM-only (N, N) half matrices of the saturated n=0 response."""
    N = len(k)
    iu, ju = np.triu_indices(N)
    ko, ki = k[iu], k[ju]
    dphi = 2.0 * np.pi * np.arange(Mphi) / Mphi
    wfac = 2.0 * R * np.sqrt(ko * ki)
    warg = wfac[:, None] * np.abs(np.cos(0.5 * dphi))[None, :]
    s = np.broadcast_to((R * (ko + ki))[:, None], warg.shape)
    F = np.fft.rfft(_axial_tm_scaled(warg, s, ell_cap), axis=-1).real
    half = np.sqrt(wk) * np.exp(-k * L / 2.0)
    pref = -R * np.outer(half, half) / Mphi
    out = []
    for m in range(m_max + 1):
        Sm = np.empty((N, N))
        Sm[iu, ju] = F[:, m]
        Sm[ju, iu] = F[:, m]
        out.append(Sm * pref)
    return out


# --------------------------------------------------------------------------
# Round-trip blocks and determinants
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundTripBlock:
    """One azimuthal block of the two-sphere round-trip operator.

    The matrix is real (the imaginary-frequency kernel is real in the
    weight-symmetrized Nystrom basis) and must be a strict contraction;
    a spectral radius >= 1 means the discretization produced an unphysical
    amplifying loop and is rejected here rather than downstream in a
    mysteriously failing determinant.
    """

    m: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DomainError("round-trip block must be a square matrix")
        if self.m < 0:
            raise DomainError("azimuthal index must be >= 0")
        object.__setattr__(self, "matrix", mat)
        rho = self.spectral_radius
        if not rho < 1.0:
            raise PassivityError(
                f"round-trip block m={self.m} has spectral radius {rho:.6g} >= 1"
            )

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.matrix))))


def logdet_one_minus(block: RoundTripBlock) -> float:
    """log det(1 - M) for one round-trip block.

    Physical scattering blocks have real spectra in [0, 1), so their value
    is always <= 0 (each mode can only lose free energy to the coupling);
    an arbitrary contraction with complex eigenvalue pairs may come out
    positive, which is why the sign lives with the matrix and not here.
    A non-positive determinant sign means an eigenvalue crossed 1 and
    raises :class:`~beadlab.errors.PassivityError`.
    """
    M = block.matrix
    sign, ld = np.linalg.slogdet(np.eye(M.shape[0]) - M)
    if sign <= 0.0:
        raise PassivityError(f"det(1 - M) <= 0 at m={block.m}")
    return float(ld)


def _check_gap_is_ionic(materials: SphereMaterials):
    if materials.gap.n_inf <= 0.0:
        raise DomainError(
            "the unscreened-TM zero-frequency branch needs an ionic gap "
            "(n_inf > 0); use the screened model for ion-free solvent"
        )


def roundtrip_block(m, xi_n, geo: SpherePairGeometry,
                    materials: SphereMaterials,
                    quad: QuadratureSpec) -> RoundTripBlock:
    """Assemble the order-m round-trip block at one imaginary frequency.

    ``xi_n = 0`` returns the universal saturated-TM static block (TM-only,
    N x N); positive frequencies return the full two-polarization block
    (2N x 2N).  Blocks for +m and -m are identical by reflection symmetry,
    so only m >= 0 is exposed.
    """
    if m < 0:
        raise DomainError("azimuthal index must be >= 0")
    if m > quad.m_max:
        raise DomainError(f"m = {m} exceeds quad.m_max = {quad.m_max}")
    if xi_n < 0.0:
        raise DomainError("imaginary frequency must be >= 0")
    k, wk = _radial_grid(_grid_scale(geo), quad.N_radial)
    if xi_n == 0.0:
        _check_gap_is_ionic(materials)
        B1 = _static_blocks(geo.R1, k, wk, geo.L, quad.N_azimuthal, m)
        B2 = _static_blocks(geo.R2, k, wk, geo.L, quad.N_azimuthal, m)
        return RoundTripBlock(m, B1[m] @ B2[m])
    em = materials.gap.eps_gap(xi_n)
    Kt = math.sqrt(em) * xi_n / _C
    kmax = float(k[-1])
    t1 = _mie_log_tables(geo.R1, permittivity_imag_freq(materials.sphere1, xi_n),
                         em, xi_n, _ell_cap(kmax * geo.R1))
    t2 = _mie_log_tables(geo.R2, permittivity_imag_freq(materials.sphere2, xi_n),
                         em, xi_n, _ell_cap(kmax * geo.R2))
    D1 = _half_trip_blocks(geo.R1, *t1, Kt, k, wk, geo.L, quad.N_azimuthal, m,
                           mirror=True)
    D2 = _half_trip_blocks(geo.R2, *t2, Kt, k, wk, geo.L, quad.N_azimuthal, m,
                           mirror=False)
    return RoundTripBlock(m, D1[m] @ D2[m])


def _logdet_sum(blocks1, blocks2):
    """sum'_m log det(1 - D1_m D2_m): m = 0 once, each m > 0 twice."""
    total = 0.0
    for m, (D1, D2) in enumerate(zip(blocks1, blocks2)):
        M = D1 @ D2
        sign, ld = np.linalg.slogdet(np.eye(M.shape[0]) - M)
        if sign <= 0.0:
            raise PassivityError(f"det(1 - M) <= 0 at m={m}")
        total += ld if m == 0 else 2.0 * ld
    return total


# --------------------------------------------------------------------------
# Energy and force
# --------------------------------------------------------------------------

_N_STOP = 600


def _static_sum(geo, quad, L_evals, ell_cap=None):
    k, wk = _radial_grid(_grid_scale(geo), quad.N_radial)
    out = np.empty(len(L_evals))
    for i, Lx in enumerate(L_evals):
        B1 = _static_blocks(geo.R1, k, wk, Lx, quad.N_azimuthal, quad.m_max,
                            ell_cap)
        B2 = _static_blocks(geo.R2, k, wk, Lx, quad.N_azimuthal, quad.m_max,
                            ell_cap)
        out[i] = _logdet_sum(B1, B2)
    return out


def _thermal_sum(geo, materials, quad, L_evals):
    """sum over n >= 1 of the per-gap logdet sums, one value per gap.

    Per frequency the expensive angular recursion is gap-independent
    (the translation split keeps only e^{-kap L/2} outside), so each
    requested gap reuses the same half-trip tables through a separable
    exponential envelope — a finite-difference force costs one ladder.
    """
    k, wk = _radial_grid(_grid_scale(geo), quad.N_radial)
    kmax = float(k[-1])
    cap1 = _ell_cap(kmax * geo.R1)
    cap2 = _ell_cap(kmax * geo.R2)
    T = geo.T
    acc = np.zeros(len(L_evals))
    tail_tol = 1e-2 * quad.tol
    for n in range(1, _N_STOP + 1):
        xi = matsubara_frequency(n, T)
        em = materials.gap.eps_gap(xi)
        Kt = math.sqrt(em) * xi / _C
        t1 = _mie_log_tables(geo.R1, permittivity_imag_freq(materials.sphere1, xi),
                             em, xi, cap1)
        t2 = _mie_log_tables(geo.R2, permittivity_imag_freq(materials.sphere2, xi),
                             em, xi, cap2)
        D1 = _half_trip_blocks(geo.R1, *t1, Kt, k, wk, 0.0, quad.N_azimuthal,
                               quad.m_max, mirror=True)
        D2 = _half_trip_blocks(geo.R2, *t2, Kt, k, wk, 0.0, quad.N_azimuthal,
                               quad.m_max, mirror=False)
        kap = np.sqrt(k * k + Kt * Kt)
        term = np.empty(len(L_evals))
        for i, Lx in enumerate(L_evals):
            e = np.exp(-kap * Lx / 2.0)
            ee = np.concatenate([e, e])
            env = np.outer(ee, ee)
            term[i] = _logdet_sum([b * env for b in D1], [b * env for b in D2])
        acc += term
        if np.max(np.abs(term)) < tail_tol * max(np.max(np.abs(acc)), 1e-300):
            return acc
    raise AccuracyError(
        f"thermal ladder did not decay below {tail_tol:g} within {_N_STOP} terms",
        estimate=acc,
    )


def _model_energies(geo, materials, model, quad, L_evals):
    """Energies [J] of the pair at each gap in ``L_evals``, one quad level."""
    kT = _KB * geo.T
    if model is ZeroFreqModel.TM_UNSCREENED:
        _check_gap_is_ionic(materials)
        u = 0.5 * _static_sum(geo, quad, L_evals)
    else:
        # screened longitudinal response kills every static sphere
        # multipole; OMIT drops the term by definition — identical here
        u = np.zeros(len(L_evals))
    u = u + _thermal_sum(geo, materials, quad, L_evals)
    return kT * u


def _converge_by_doubling(evaluate, quad, rounds=2):
    """evaluate(quad) with refinement doubling until relative change < tol."""
    prev = evaluate(quad)
    for _ in range(rounds):
        quad = quad.doubled()
        cur = evaluate(quad)
        scale = max(float(np.max(np.abs(cur))), 1e-40)
        change = float(np.max(np.abs(cur - prev))) / scale
        if change < quad.tol:
            return cur
        prev = cur
    raise AccuracyError(
        f"doubling did not converge to {quad.tol:g} (last change {change:.3g})",
        estimate=cur,
        bound=change,
    )


def zero_frequency_energy_spheres(geo: SpherePairGeometry,
                                  quad: QuadratureSpec | None = None,
                                  ell_cap: int | None = None) -> float:
    """Universal saturated-TM n = 0 free energy (half-weight included) [J].

    Material-independent, like its planar counterpart; ``ell_cap=1``
    restricts the sphere response to the dipole order (the far-separation
    asymptote used by the test battery).
    """
    if quad is None:
        quad = auto_quadrature(geo)
    kT = _KB * geo.T

    def evaluate(q):
        return 0.5 * kT * _static_sum(geo, q, [geo.L], ell_cap)

    return float(_converge_by_doubling(evaluate, quad)[0])


def casimir_energy_spheres(geo: SpherePairGeometry,
                           materials: SphereMaterials,
                           model: ZeroFreqModel = ZeroFreqModel.TM_UNSCREENED,
                           quad: QuadratureSpec | None = None) -> float:
    """Fluctuation free energy of the sphere pair [J] (negative = bound).

    The Matsubara sum, azimuthal blocks, and radial quadrature are all
    refined together: the energy is recomputed with doubled resolution
    until the relative change drops below ``quad.tol``, else
    :class:`~beadlab.errors.AccuracyError` carries the best estimate.
    """
    if quad is None:
        quad = auto_quadrature(geo)

    def evaluate(q):
        return _model_energies(geo, materials, model, q, [geo.L])

    return float(_converge_by_doubling(evaluate, quad)[0])


def casimir_force_spheres(geo: SpherePairGeometry,
                          materials: SphereMaterials,
                          model: ZeroFreqModel = ZeroFreqModel.TM_UNSCREENED,
                          quad: QuadratureSpec | None = None) -> float:
    """Axial force on the pair [N]; negative = attraction.

    Central finite difference with step h = max(1 nm, 1e-3 L) over a
    shared transverse grid (the grid is keyed to the central gap so both
    stencil points see identical discretization error, which cancels in
    the difference).
    """
    if quad is None:
        quad = auto_quadrature(geo)
    h = max(1e-9, 1e-3 * geo.L)
    if 2.0 * h >= geo.L:
        raise DomainError("gap too small for the finite-difference stencil")

    def evaluate(q):
        um, up = _model_energies(geo, materials, model, q,
                                 [geo.L - h, geo.L + h])
        return np.array([-(up - um) / (2.0 * h)])

    return float(_converge_by_doubling(evaluate, quad)[0])
