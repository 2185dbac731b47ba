r"""Creeping-flow drag on the probe sphere near a partner sphere and a wall.

The drag coefficient is composed as

.. math::

    \gamma(L, h) = 6\pi\eta R_1 \; f_\mathrm{wall}(R_1/h) \;
                   f_\mathrm{pair}(L),

with the wall factor given by the Stokes-Faxen expansion in the height
ratio and the pair factor by the exact axisymmetric two-sphere resistance
problem (probe translating along the line of centers, partner held
fixed), solved in bispherical coordinates.

The stream function between the spheres is expanded as

.. math::

    \psi(\xi,\mu) = (\cosh\xi-\mu)^{-3/2} \sum_{n\ge1} W_n(\xi)\,V_n(\mu),
    \qquad V_n = \frac{P_{n-1}-P_{n+1}}{2n+1},

where each radial profile W_n combines four exponential modes of degrees
(n - 1/2) and (n + 3/2).  Modes are anchored at the sphere surfaces
(xi = alpha and xi = -beta) so every matrix entry stays in [0, 1] and the
per-mode 4x4 systems remain well conditioned at any truncation order.
Rigid-translation boundary data enters in closed form through the
generating function of the Legendre polynomials.

The axial force on a sphere is the momentum flux through an intermediate
coordinate sphere, evaluated as the classical drag contour integral of
axisymmetric Stokes flow,

.. math::

    F = \pm\pi\eta \oint \varpi^3
        \frac{\partial}{\partial n}\frac{E^2\psi}{\varpi^2}\,d\ell .

E^2 psi is computed exactly through the conformal structure of the
bispherical map zeta = c coth(w/2), w = xi + i eta; only the final normal
derivative uses a (Richardson) difference.  The evaluation reproduces the
isolated-sphere Stokes drag, the force of embedded point singularities,
and the far-field Stokeslet sum rule F1 + F2 = -4 sqrt(2) pi eta
sum(a_n + c_n)/c to ten digits (see the test suite).

Below gap/R_eff = 0.01 the series is replaced by the lubrication
asymptote R_eff^2/(R_1 gap), shifted to match the series value at the
switch point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import AccuracyError, DomainError
from .geometry import SpherePairGeometry

__all__ = [
    "HydroEnvironment",
    "stokes_drag",
    "wall_drag_factor",
    "pair_drag_factor",
    "drag_coefficient",
    "correlation_time",
]

# Switch point of the near-contact lubrication branch.
LUBRICATION_GAP_RATIO = 0.01


@dataclass(frozen=True)
class HydroEnvironment:
    """Viscous environment of the probe sphere.

    Parameters
    ----------
    geo : SpherePairGeometry
        Sphere pair; R1 is the moving probe.
    eta : float
        Solvent dynamic viscosity [Pa s].
    h : float
        Height of the probe center above the coverslip [m]; must exceed
        R1.  ``math.inf`` disables the wall correction.
    """

    geo: SpherePairGeometry
    eta: float = 0.95e-3
    h: float = 12e-6

    def __post_init__(self):
        if self.eta <= 0.0:
            raise DomainError("viscosity must be > 0")
        if not self.h > self.geo.R1:
            raise DomainError("wall distance h must exceed the probe radius")


def stokes_drag(eta: float, R: float) -> float:
    """Isolated-sphere Stokes drag 6 pi eta R [kg/s / (m/s) units fold out]."""
    if eta <= 0.0 or R <= 0.0:
        raise DomainError("eta and R must be > 0")
    return 6.0 * math.pi * eta * R


def wall_drag_factor(beta: float) -> float:
    """Stokes-Faxen drag enhancement for motion parallel to a wall.

    beta = R1/h is the radius-to-height ratio; the factor is the inverse
    of the truncated expansion
    1 - (9/16) b + (1/8) b^3 - (45/256) b^4 - (1/16) b^5.
    """
    if not 0.0 <= beta < 1.0:
        raise DomainError("wall ratio must satisfy 0 <= R1/h < 1")
    denom = (
        1.0
        - 9.0 / 16.0 * beta
        + 1.0 / 8.0 * beta**3
        - 45.0 / 256.0 * beta**4
        - 1.0 / 16.0 * beta**5
    )
    if denom <= 0.0:
        raise DomainError("wall expansion left its validity range")
    return 1.0 / denom


# --------------------------------------------------------------------------
# bispherical machinery


def _bispherical_frame(a: float, b: float, D: float):
    """Map radii and center distance to (alpha, beta, c).

    Sphere 1 (radius a) sits at xi = +alpha, sphere 2 (radius b) at
    xi = -beta; c is the common scale factor a sinh(alpha) = b sinh(beta).
    """
    if D <= a + b:
        raise DomainError("spheres must not touch or overlap")
    cosh_a = (D * D + a * a - b * b) / (2.0 * D * a)
    cosh_b = (D * D + b * b - a * a) / (2.0 * D * b)
    alpha = math.acosh(cosh_a)
    beta = math.acosh(cosh_b)
    c = a * math.sinh(alpha)
    return alpha, beta, c


def _rigid_boundary_data(angle: float, velocity: float, c: float, n: np.ndarray):
    """Closed-form V_n data of a sphere at |xi| = angle translating axially.

    Returns (value, slope): projections of psi and |d psi/d xi| on the
    surface; the slope enters the system with sign -1 at xi = +alpha and
    +1 at xi = -beta.
    """
    lo = n - 0.5
    hi = n + 1.5
    e_lo = np.exp(-lo * angle)
    e_hi = np.exp(-hi * angle)
    pref = velocity * c * c * n * (n + 1.0)
    value = (math.sqrt(2.0) / 2.0) * pref * (e_lo / (2 * n - 1) - e_hi / (2 * n + 3))
    slope = (math.sqrt(2.0) / 4.0) * pref * (e_lo - e_hi)
    return value, slope


def _solve_modes(alpha, beta, c, rhs, n: np.ndarray):
    """Solve the per-mode 4x4 systems in the surface-anchored mode basis.

    W_n(xi) = p1 e^{lo (xi - alpha)} + q1 e^{-lo (xi + beta)}
            + p2 e^{hi (xi - alpha)} + q2 e^{-hi (xi + beta)},
    with rows (W(alpha), W'(alpha), W(-beta), W'(-beta)) = rhs.
    Returns the (N, 4) array of (p1, q1, p2, q2).
    """
    lo = n - 0.5
    hi = n + 1.5
    span = alpha + beta
    e_lo = np.exp(-lo * span)
    e_hi = np.exp(-hi * span)
    N = len(n)
    M = np.empty((N, 4, 4))
    M[:, 0, 0] = 1.0
    M[:, 0, 1] = e_lo
    M[:, 0, 2] = 1.0
    M[:, 0, 3] = e_hi
    M[:, 1, 0] = lo
    M[:, 1, 1] = -lo * e_lo
    M[:, 1, 2] = hi
    M[:, 1, 3] = -hi * e_hi
    M[:, 2, 0] = e_lo
    M[:, 2, 1] = 1.0
    M[:, 2, 2] = e_hi
    M[:, 2, 3] = 1.0
    M[:, 3, 0] = lo * e_lo
    M[:, 3, 1] = -lo
    M[:, 3, 2] = hi * e_hi
    M[:, 3, 3] = -hi
    return np.linalg.solve(M, rhs[:, :, None])[:, :, 0]


@lru_cache(maxsize=64)
def _gauss_interval(n_nodes):
    x, w = roots_legendre(n_nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def _legendre_rows(nmax, mu):
    P = np.empty((nmax + 2, len(mu)))
    P[0] = 1.0
    P[1] = mu
    for k in range(1, nmax + 1):
        P[k + 1] = ((2 * k + 1) * mu * P[k] - k * P[k - 1]) / (k + 1)
    return P


def _stream_operator_ratio(coeffs, alpha, beta, n, c, xi, eta):
    """(E^2 psi)/varpi^2 and varpi of the modal series along an eta grid."""
    lo = (n - 0.5)[:, None]
    hi = (n + 1.5)[:, None]
    p1, q1, p2, q2 = (coeffs[:, i][:, None] for i in range(4))
    elo_p = np.exp(lo * (xi - alpha))
    elo_q = np.exp(-lo * (xi + beta))
    ehi_p = np.exp(hi * (xi - alpha))
    ehi_q = np.exp(-hi * (xi + beta))
    W = p1 * elo_p + q1 * elo_q + p2 * ehi_p + q2 * ehi_q
    W1 = lo * (p1 * elo_p - q1 * elo_q) + hi * (p2 * ehi_p - q2 * ehi_q)
    W2 = lo * lo * (p1 * elo_p + q1 * elo_q) + hi * hi * (p2 * ehi_p + q2 * ehi_q)
    mu_row = np.cos(eta)
    mu = mu_row[None, :]
    P = _legendre_rows(len(n), mu_row)
    ni = n.astype(int)
    Vn = (P[ni - 1] - P[ni + 1]) / (2 * n + 1)[:, None]
    Vn1 = -P[ni]
    # (1 - mu^2) V_n'' = -n (P_{n-1} - mu P_n): keep the product form so the
    # poles raise no 0/0
    Q = n[:, None] * (P[ni - 1] - mu * P[ni])
    sh = math.sinh(xi)
    ch = math.cosh(xi)
    t = ch - mu
    t15 = t**-1.5
    t25 = t**-2.5
    t35 = t**-3.5
    psi_x = np.sum((-1.5 * t25 * sh * W + t15 * W1) * Vn, axis=0)
    psi_xx = np.sum(
        (3.75 * t35 * sh * sh * W - 1.5 * t25 * ch * W - 3.0 * t25 * sh * W1 + t15 * W2) * Vn,
        axis=0,
    )
    psi_m = np.sum((1.5 * t25 * Vn + t15 * Vn1) * W, axis=0)
    se = np.sin(eta)
    ce = mu_row
    sin2 = se * se
    psi_mm_sin2 = np.sum((3.75 * t35 * Vn + 3.0 * t25 * Vn1) * W, axis=0) * sin2 - np.sum(
        t15 * W * Q, axis=0
    )
    psi_e = -se * psi_m
    psi_ee = -ce * psi_m + psi_mm_sin2
    w = xi + 1j * eta
    zeta = c / np.tanh(0.5 * w)
    dzeta = -(0.5 * c) / np.sinh(0.5 * w) ** 2
    om = zeta.imag
    inv = 1.0 / dzeta
    e2 = (psi_xx + psi_ee) * (inv.real**2 + inv.imag**2) - (1.0 / om) * (
        -inv.imag * psi_x + inv.real * psi_e
    )
    return e2 / (om * om), om


def _sphere_force(coeffs, alpha, beta, n, c, which):
    """Axial force (per unit viscosity) on sphere 1 or 2.

    Momentum flux through the coordinate sphere midway between the body
    and the symmetry plane; the eta-contour integral needs no metric
    factor because h d eta cancels against the 1/h of the normal
    derivative.
    """
    xi0 = 0.5 * alpha if which == 1 else -0.5 * beta
    x, wq = _gauss_interval(len(n) + 96)
    eta = math.pi * x
    wq = math.pi * wq
    d = 1e-3 / (n[-1] + 1.5)

    def g(shift):
        return _stream_operator_ratio(coeffs, alpha, beta, n, c, xi0 + shift, eta)[0]

    gp = (g(-2 * d) - 8 * g(-d) + 8 * g(d) - g(2 * d)) / (12 * d)
    _, om = _stream_operator_ratio(coeffs, alpha, beta, n, c, xi0, eta)
    flux = np.sum(wq * om**3 * gp)
    sign = -1.0 if which == 1 else 1.0
    return sign * math.pi * flux


def _far_field_total_force(coeffs, alpha, beta, n, c):
    """Stokeslet sum rule: F1 + F2 = -4 sqrt(2) pi eta sum(a_n + c_n)/c."""
    lo = n - 0.5
    hi = n + 1.5
    amp = (
        coeffs[:, 0] * np.exp(-lo * alpha)
        + coeffs[:, 1] * np.exp(-lo * beta)
        + coeffs[:, 2] * np.exp(-hi * alpha)
        + coeffs[:, 3] * np.exp(-hi * beta)
    )
    return -4.0 * math.sqrt(2.0) * math.pi * np.sum(amp) / c


def _pair_mode_solution(a, b, D, n_terms, u1=1.0, u2=0.0):
    alpha, beta, c = _bispherical_frame(a, b, D)
    n = np.arange(1, n_terms + 1, dtype=float)
    g1, h1 = _rigid_boundary_data(alpha, u1, c, n)
    g2, h2 = _rigid_boundary_data(beta, u2, c, n)
    rhs = np.stack([g1, -h1, g2, h2], axis=1)
    coeffs = _solve_modes(alpha, beta, c, rhs, n)
    return coeffs, alpha, beta, c, n


def _pair_resistance(a, b, D, n_terms):
    """Normalized axial drag factor on sphere 1 with sphere 2 fixed."""
    coeffs, alpha, beta, c, n = _pair_mode_solution(a, b, D, n_terms)
    force = _sphere_force(coeffs, alpha, beta, n, c, 1)
    return -force / (6.0 * math.pi * a)


def _converged_pair_resistance(a, b, gap, tol):
    alpha, beta, _ = _bispherical_frame(a, b, a + b + gap)
    n_terms = max(32, int(25.0 / (alpha + beta)))
    prev = _pair_resistance(a, b, a + b + gap, n_terms)
    while n_terms <= 65536:
        n_terms *= 2
        cur = _pair_resistance(a, b, a + b + gap, n_terms)
        if abs(cur - prev) <= tol * abs(cur):
            return cur
        prev = cur
    raise AccuracyError(
        "two-sphere resistance series did not converge",
        estimate=cur,
        bound=abs(cur - prev) / abs(cur),
    )


@lru_cache(maxsize=4096)
def _pair_drag_factor_cached(a, b, gap, tol):
    R_eff = a * b / (a + b)
    switch = LUBRICATION_GAP_RATIO * R_eff
    if gap < switch:
        # lubrication divergence R_eff^2/(R1 gap), offset to meet the
        # series value at the switch gap
        base = _converged_pair_resistance(a, b, switch, tol)
        shift = base - R_eff * R_eff / (a * switch)
        return R_eff * R_eff / (a * gap) + shift
    return _converged_pair_resistance(a, b, gap, tol)


def pair_drag_factor(geo: SpherePairGeometry, L: float | None = None, tol: float = 1e-4) -> float:
    """Axisymmetric two-sphere drag enhancement f_pair >= 1.

    The probe (R1) translates along the line of centers; the partner
    (R2) is held fixed.  ``L`` overrides the gap stored in ``geo``.
    """
    gap = geo.L if L is None else L
    if gap <= 0.0:
        raise DomainError("gap must be > 0")
    if not 0.0 < tol <= 1e-2:
        raise DomainError("tol must lie in (0, 1e-2]")
    return _pair_drag_factor_cached(geo.R1, geo.R2, gap, tol)


def drag_coefficient(env: HydroEnvironment, L: float) -> float:
    """Drag gamma(L, h) [kg/s] of the probe at surface gap L."""
    if L <= 0.0:
        raise DomainError("gap must be > 0")
    base = stokes_drag(env.eta, env.geo.R1)
    f_wall = 1.0 if math.isinf(env.h) else wall_drag_factor(env.geo.R1 / env.h)
    return base * f_wall * pair_drag_factor(env.geo, L)


def correlation_time(gamma: float, k_x: float) -> float:
    """Trap relaxation time tau_C = gamma/k_x [s]."""
    if gamma <= 0.0 or k_x <= 0.0:
        raise DomainError("gamma and k_x must be > 0")
    return gamma / k_x
