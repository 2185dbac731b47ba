r"""Fluctuation free energy per unit area between two half-spaces.

The planar free energy across a gap medium is the thermal sum

.. math::

    E(L) = \frac{k_B T}{2\pi} \sideset{}{'}\sum_{n\ge 0}
           \int_0^\infty k\,dk \sum_{p\in\{TE,TM\}}
           \ln\!\left(1 - r_{p,1} r_{p,2}\, e^{-2\kappa_n L}\right),

with Fresnel reflection coefficients evaluated at imaginary frequency and
the prime giving the n = 0 term half weight.  The n = 0 term is where the
physics forks, and the fork is exposed as :class:`ZeroFreqModel`:

``TM_UNSCREENED``
    The ionic response makes the gap permittivity diverge at zero
    frequency, so the TM reflection coefficient saturates at -1 for any
    wall.  The term is evaluated on that analytic branch (a removable
    singularity, not a numerical limit) and is universal:
    :math:`-k_B T\,\zeta(3)/(16\pi L^2)` — an effective Hamaker constant
    of :math:`(3/4)\zeta(3)\,k_B T \approx 0.90\,k_B T`.

``SCREENED_LONGITUDINAL``
    The standard screened model: all zero-frequency multipoles are cut off
    over the ionic screening length,
    :math:`-(k_B T/16\pi L^2)\,\Delta_0^2\,(1+2L/\lambda_D)e^{-2L/\lambda_D}`
    to leading order in the static contrast :math:`\Delta_0`.

``OMIT``
    Drop the n = 0 term entirely (diagnostic bound).

Terms with n >= 1 are identical across the three variants.  The radial
integral uses the substitution k = -ln(t)/(2L) with Gauss-Legendre nodes
in t and node-doubling until the relative change is below ``tol``;
non-convergence raises :class:`~beadlab.errors.AccuracyError` carrying the
achieved bound.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import AccuracyError, DomainError
from .medium import (
    CONSTANTS,
    DielectricModel,
    ElectrolyteMedium,
    debye_length,
    matsubara_frequency,
    permittivity_imag_freq,
)

__all__ = [
    "ZeroFreqModel",
    "HalfSpacePair",
    "fresnel_reflection",
    "planar_free_energy",
    "zero_freq_screened_planar",
    "effective_hamaker",
    "pfa_energy",
    "pfa_force",
    "effective_radius",
    "planar_energy_curve",
]


class ZeroFreqModel(enum.Enum):
    """Treatment of the zero-frequency term of the thermal sum."""

    TM_UNSCREENED = "TM_UNSCREENED"
    SCREENED_LONGITUDINAL = "SCREENED_LONGITUDINAL"
    OMIT = "OMIT"


@dataclass(frozen=True)
class HalfSpacePair:
    """Two dielectric half-spaces facing each other across an electrolyte.

    Parameters
    ----------
    wall1, wall2 : DielectricModel
    gap : ElectrolyteMedium
    L : float
        Surface separation [m], > 0.
    T : float
        Temperature [K].
    """

    wall1: DielectricModel
    wall2: DielectricModel
    gap: ElectrolyteMedium
    L: float
    T: float = 296.0

    def __post_init__(self):
        if self.L <= 0.0:
            raise DomainError("separation L must be > 0")
        if self.T <= 0.0:
            raise DomainError("temperature must be > 0")


def fresnel_reflection(eps_wall, eps_gap, xi, k):
    """Imaginary-frequency Fresnel coefficients (r_TE, r_TM) of one wall.

    kappa_X = sqrt(k^2 + eps_X xi^2/c^2) for X in {gap, wall};
    r_TE = (kappa_gap - kappa_wall)/(kappa_gap + kappa_wall),
    r_TM = (eps_wall kappa_gap - eps_gap kappa_wall)
           /(eps_wall kappa_gap + eps_gap kappa_wall).

    Both lie in [-1, 1].  Array-friendly in ``k``.
    """
    if np.any(np.asarray(eps_wall) < 0.0) or np.any(np.asarray(eps_gap) < 0.0):
        raise DomainError("permittivities must be non-negative")
    if xi < 0.0:
        raise DomainError("imaginary frequency must be >= 0")
    k = np.asarray(k, dtype=float)
    if xi == 0.0 and np.any(k == 0.0):
        raise DomainError("xi and k may not both vanish")
    q2 = (xi / CONSTANTS.c) ** 2
    kap_gap = np.sqrt(k * k + eps_gap * q2)
    kap_wall = np.sqrt(k * k + eps_wall * q2)
    r_te = (kap_gap - kap_wall) / (kap_gap + kap_wall)
    r_tm = (eps_wall * kap_gap - eps_gap * kap_wall) / (
        eps_wall * kap_gap + eps_gap * kap_wall
    )
    if r_te.ndim:
        return r_te, r_tm
    return float(r_te), float(r_tm)


@lru_cache(maxsize=32)
def _gauss_nodes(n):
    # cached Gauss-Legendre nodes/weights on (0, 1)
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _integral_ladder(pair: HalfSpacePair, xi_list, n_nodes):
    """Radial integrals for every listed frequency on one u-grid.

    Each integral I_n = \\int_0^inf k dk sum_p ln(1 - r_p1 r_p2
    e^{-2 kappa_n L}) is taken over the gap momentum kappa (k dk =
    kappa dkappa) with kappa = kappa_min - ln(u)/(2L), so the decaying
    exponential becomes exactly linear in u and the node count needed is
    independent of the thermal index.  Fully vectorized over
    (frequency, node).
    """
    L = pair.L
    u, w = _gauss_nodes(n_nodes)
    xi = np.asarray(xi_list, dtype=float)[:, None]
    eps_g = pair.gap.eps_gap(xi)
    eps_w1 = permittivity_imag_freq(pair.wall1, xi)
    eps_w2 = permittivity_imag_freq(pair.wall2, xi)
    q2 = (xi / CONSTANTS.c) ** 2
    kap_min = np.sqrt(eps_g * q2)
    kap = kap_min - np.log(u)[None, :] / (2.0 * L)
    jac = kap / (2.0 * L * u[None, :])
    expo = np.exp(-2.0 * kap_min * L) * u[None, :]
    # Fresnel in the kappa variable: kappa_wall^2 = kappa^2 + (eps_w - eps_g) q^2
    kap_w1 = np.sqrt(kap * kap + (eps_w1 - eps_g) * q2)
    kap_w2 = np.sqrt(kap * kap + (eps_w2 - eps_g) * q2)
    r_te1 = (kap - kap_w1) / (kap + kap_w1)
    r_te2 = (kap - kap_w2) / (kap + kap_w2)
    r_tm1 = (eps_w1 * kap - eps_g * kap_w1) / (eps_w1 * kap + eps_g * kap_w1)
    r_tm2 = (eps_w2 * kap - eps_g * kap_w2) / (eps_w2 * kap + eps_g * kap_w2)
    total = np.log1p(-r_te1 * r_te2 * expo) + np.log1p(-r_tm1 * r_tm2 * expo)
    return (total * jac) @ w


def _zero_freq_tm_unscreened_integral(L, n_nodes):
    # r_TM,1 * r_TM,2 = (-1)^2 = +1 on the diverging-gap branch
    t, w = _gauss_nodes(n_nodes)
    k = -np.log(t) / (2.0 * L)
    jac = 1.0 / (2.0 * L * t)
    return np.sum(w * jac * k * np.log1p(-np.exp(-2.0 * k * L)))


def _converge_doubling(evaluate, tol, n_start=16, n_limit=4096):
    """Run ``evaluate(n_nodes)`` with node doubling until stable.

    Returns (value, last_change).  Raises AccuracyError when the doubling
    ladder is exhausted before the relative change falls below ``tol``.
    """
    prev = evaluate(n_start)
    n = 2 * n_start
    while n <= n_limit:
        cur = evaluate(n)
        scale = max(np.max(np.abs(cur)), 1e-300)
        change = np.max(np.abs(cur - prev)) / scale
        if change < tol:
            return cur, change
        prev = cur
        n *= 2
    raise AccuracyError(
        f"quadrature did not converge to {tol:g} (last change {change:g})",
        estimate=prev,
        bound=change,
    )


def planar_free_energy(
    pair: HalfSpacePair,
    model: ZeroFreqModel = ZeroFreqModel.TM_UNSCREENED,
    n_max: int | None = None,
    tol: float = 1e-6,
    tail_rel: float = 1e-4,
) -> float:
    """Free energy per unit area E(L) [J/m^2] of a half-space pair.

    Parameters
    ----------
    pair : HalfSpacePair
    model : ZeroFreqModel
        Zero-frequency treatment; terms n >= 1 are model-independent.
    n_max : int or None
        Thermal-index cutoff.  ``None`` selects the adaptive rule: stop
        when a geometric extrapolation of the remaining tail is below
        ``tail_rel`` of the accumulated sum.  ``n_max = 0`` evaluates the
        zero-frequency term alone.
    tol : float
        Relative node-doubling tolerance of each radial integral.
    tail_rel : float
        Relative tolerance of the thermal tail.

    Raises
    ------
    AccuracyError
        If the quadrature fails to converge, or the thermal series shows
        no geometric decay before the hard index ceiling.
    """
    kT = CONSTANTS.k_B * pair.T
    pref = kT / (2.0 * math.pi)

    # --- n = 0, half weight ---------------------------------------------
    if model is ZeroFreqModel.TM_UNSCREENED:
        I0, _ = _converge_doubling(
            lambda n: _zero_freq_tm_unscreened_integral(pair.L, n), tol
        )
        e_zero = 0.5 * pref * I0
    elif model is ZeroFreqModel.SCREENED_LONGITUDINAL:
        lam = debye_length(pair.gap)
        d1 = _static_contrast(pair.wall1, pair.gap)
        d2 = _static_contrast(pair.wall2, pair.gap)
        e_zero = _screened_zero_freq(pair.L, lam, d1 * d2, pair.T)
    elif model is ZeroFreqModel.OMIT:
        e_zero = 0.0
    else:  # pragma: no cover - enum is closed
        raise DomainError(f"unknown zero-frequency model {model!r}")

    if n_max == 0:
        return e_zero

    # --- n >= 1, whole ladder in one vectorized sweep -------------------
    xi1 = matsubara_frequency(1, pair.T)
    if n_max is not None:
        n_top = n_max
    else:
        # decay of term n is at least e^{-2 xi_n L / c} (vacuum bound on
        # the gap index); size the ladder so the neglected part is < e^-18
        n_top = max(8, math.ceil(9.2 * CONSTANTS.c / (xi1 * pair.L)))
    for _ in range(3):
        xis = xi1 * np.arange(1, n_top + 1)
        ints, _ = _converge_doubling(lambda m: _integral_ladder(pair, xis, m), tol)
        energy = e_zero + pref * float(np.sum(ints))
        if n_max is not None:
            return energy
        ratio = abs(ints[-1] / ints[-2]) if abs(ints[-2]) > 1e-300 else 0.0
        tail = abs(pref * ints[-1]) * ratio / (1.0 - ratio) if ratio < 1.0 else math.inf
        if tail < tail_rel * max(abs(energy), 1e-300):
            return energy
        n_top *= 2
    raise AccuracyError(
        "thermal sum tail above tolerance after ladder extension",
        estimate=energy,
        bound=tail,
    )


def _static_contrast(wall: DielectricModel, gap: ElectrolyteMedium) -> float:
    ew = wall.static_eps
    eg = gap.solvent.static_eps
    return (ew - eg) / (ew + eg)


def _screened_zero_freq(L, lam_D, contrast_product, T) -> float:
    kT = CONSTANTS.k_B * T
    x = 2.0 * L / lam_D
    return -(kT / (16.0 * math.pi * L * L)) * contrast_product * (1.0 + x) * math.exp(-x)


def zero_freq_screened_planar(L, lam_D, delta0, T=296.0) -> float:
    """Screened zero-frequency energy per unit area [J/m^2].

    -(k_B T / 16 pi L^2) * delta0^2 * (1 + 2L/lambda_D) * exp(-2L/lambda_D),
    the leading order in the static contrast delta0.
    """
    if L <= 0.0 or lam_D <= 0.0:
        raise DomainError("L and lambda_D must be > 0")
    if abs(delta0) > 1.0:
        raise DomainError("|delta0| must be <= 1")
    return _screened_zero_freq(L, lam_D, delta0 * delta0, T)


def effective_hamaker(L, E) -> float:
    """Map an energy per unit area to the Hamaker constant A_H = -12 pi L^2 E."""
    if L <= 0.0:
        raise DomainError("L must be > 0")
    return -12.0 * math.pi * L * L * E


def effective_radius(R1, R2) -> float:
    """R_eff = R1 R2/(R1 + R2) of the sphere-pair mapping."""
    if R1 <= 0.0 or R2 <= 0.0:
        raise DomainError("radii must be > 0")
    return R1 * R2 / (R1 + R2)


def pfa_force(R_eff, L, planar_curve) -> float:
    """Proximity-force (Derjaguin) sphere-sphere force F = 2 pi R_eff E(L) [N]."""
    if R_eff <= 0.0 or L <= 0.0:
        raise DomainError("R_eff and L must be > 0")
    return 2.0 * math.pi * R_eff * planar_curve(L)


def pfa_energy(R_eff, L, planar_curve, tol=1e-6) -> float:
    """Proximity-force sphere-sphere energy U = 2 pi R_eff int_L^inf E dl [J].

    The half-line is folded to (0, 1] with l = L/v, which handles both the
    exponentially screened and the 1/l^2 unscreened tails without an
    explicit truncation; the v-quadrature doubles nodes until stable and
    raises AccuracyError with the achieved bound otherwise.
    """
    if R_eff <= 0.0 or L <= 0.0:
        raise DomainError("R_eff and L must be > 0")

    def evaluate(n):
        v, w = _gauss_nodes(n)
        ells = L / v
        vals = np.array([planar_curve(l) for l in ells])
        return np.sum(w * vals * L / (v * v))

    integral, _ = _converge_doubling(evaluate, tol, n_start=8, n_limit=512)
    return 2.0 * math.pi * R_eff * integral


def planar_energy_curve(wall1, wall2, gap, T=296.0, model=ZeroFreqModel.TM_UNSCREENED, **kw):
    """Return E(L) as a callable closing over materials and model."""

    def curve(L):
        return planar_free_energy(HalfSpacePair(wall1, wall2, gap, L, T), model, **kw)

    return curve
