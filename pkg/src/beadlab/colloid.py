r"""DLVO composition: double-layer repulsion, Casimir attraction, trap balance.

The interaction between the two charged microspheres is assembled as

.. math::

    U_{\mathrm{int}}(L) = U_{\mathrm{dl}}(L) + U_{\mathrm{C}}(L),

with the double-layer part in the linear-superposition (Debye-Hückel)
closure of Verwey & Overbeek: each sphere of uniform surface charge
density :math:`\sigma` carries the screened Coulomb far field

.. math::

    \psi(r) = \frac{Q}{4\pi\varepsilon}\,
              \frac{e^{\kappa R}}{1+\kappa R}\,\frac{e^{-\kappa r}}{r},
    \qquad Q = 4\pi R^2 \sigma,

and the pair energy is the charge of one sphere sitting in the unperturbed
field of the other.  Constant charge is assumed throughout (regulation
matters only below a screening length of the surface, well inside the
gaps treated here), and the screening length is an explicit parameter
rather than being derived from the medium — the analysis pipeline fits it.

The Casimir part is pluggable: the proximity-force mapping of the planar
free energy (fast, accurate to a few percent at the aspect ratios of
interest) or the exact two-sphere scattering solver.  On top of the pair
interaction, :func:`equilibrium_position` balances an optical trap against
the interaction force and classifies the equilibrium by total stiffness;
an attraction steeper than the trap everywhere is reported as the
jump-into-contact regime rather than a numerical failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import DomainError, JumpIntoContact
from .geometry import SpherePairGeometry
from .medium import CONSTANTS, ElectrolyteMedium
from .planar import (
    ZeroFreqModel,
    effective_radius,
    pfa_energy,
    pfa_force,
    planar_energy_curve,
)
from .spherescatter import (
    SphereMaterials,
    casimir_energy_spheres,
    casimir_force_spheres,
)

__all__ = [
    "SurfaceChargeParams",
    "OpticalTrap",
    "InteractionCurve",
    "double_layer_energy",
    "double_layer_force",
    "total_interaction",
    "interaction_force",
    "interaction_curve",
    "equilibrium_position",
]


@dataclass(frozen=True)
class SurfaceChargeParams:
    """Constant-charge double-layer parameters, equal on both spheres.

    ``sigma`` is signed (the interaction depends only on sigma**2 for
    like-charged spheres); ``lambda_D`` is the screening length, kept
    free here because the data pipeline fits it rather than fixing it to
    the nominal salt concentration.
    """

    sigma: float
    lambda_D: float

    def __post_init__(self):
        if not self.lambda_D > 0.0:
            raise DomainError("screening length must be > 0")


@dataclass(frozen=True)
class OpticalTrap:
    """Harmonic trap acting on the probe sphere along and across the axis."""

    k_x: float
    k_y: float
    L_eq_opt: float
    power: float = 0.0

    def __post_init__(self):
        if self.k_x <= 0.0 or self.k_y <= 0.0:
            raise DomainError("trap stiffnesses must be > 0")
        if self.L_eq_opt <= 0.0:
            raise DomainError("optical equilibrium gap must be > 0")
        if self.power < 0.0:
            raise DomainError("trap power must be >= 0")


@dataclass(frozen=True)
class InteractionCurve:
    """Tabulated pair interaction on a gap grid, by component.

    ``U_total`` must equal ``U_dl + U_casimir`` elementwise — the class
    stores components precisely so nothing downstream can drift out of
    sync with their sum.
    """

    L: np.ndarray
    U_dl: np.ndarray
    U_casimir: np.ndarray
    U_total: np.ndarray
    F_total: np.ndarray
    model: ZeroFreqModel = field(default=ZeroFreqModel.TM_UNSCREENED)

    def __post_init__(self):
        arrays = {}
        for name in ("L", "U_dl", "U_casimir", "U_total", "F_total"):
            arrays[name] = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arrays[name])
        n = len(arrays["L"])
        if any(len(a) != n for a in arrays.values()) or n < 2:
            raise DomainError("curve columns must share a length >= 2")
        if np.any(arrays["L"] <= 0.0) or np.any(np.diff(arrays["L"]) <= 0.0):
            raise DomainError("gap grid must be positive and strictly increasing")
        resid = np.max(np.abs(arrays["U_total"] - (arrays["U_dl"] + arrays["U_casimir"])))
        scale = max(float(np.max(np.abs(arrays["U_total"]))), 1e-30)
        if resid > 1e-12 * scale:
            raise DomainError("U_total must equal U_dl + U_casimir elementwise")

    def force_interpolant(self):
        """Cubic interpolant of the total force column."""
        return CubicSpline(self.L, self.F_total)

    def to_csv(self, path):
        """Write the curve as CSV with fixed column names."""
        with open(path, "w") as fh:
            fh.write("L_m,U_dl_J,U_casimir_J,U_total_J,F_total_N,model\n")
            for i in range(len(self.L)):
                row = (self.L[i], self.U_dl[i], self.U_casimir[i],
                       self.U_total[i], self.F_total[i])
                fh.write(",".join(repr(float(v)) for v in row)
                         + f",{self.model.name}\n")


def _absolute_permittivity(medium: ElectrolyteMedium) -> float:
    return CONSTANTS.eps0 * medium.solvent.static_eps


def double_layer_energy(L, p: SurfaceChargeParams, geo: SpherePairGeometry,
                        medium: ElectrolyteMedium) -> float:
    """Screened Coulomb energy of the charged sphere pair [J]; >= 0.

    Linear-superposition closure: product of the two Debye-Hückel charge
    renormalization factors e^{kR}/(1+kR), bare Coulomb 1/(4 pi eps d),
    and the gap screening e^{-kd} — the e^{kR} factors cancel the sphere
    radii out of the exponent, leaving e^{-L/lambda_D}.
    """
    if L <= 0.0:
        raise DomainError("gap must be > 0")
    lam = p.lambda_D
    eps = _absolute_permittivity(medium)
    d = geo.R1 + geo.R2 + L
    q1 = 4.0 * math.pi * geo.R1**2 * p.sigma
    q2 = 4.0 * math.pi * geo.R2**2 * p.sigma
    gain = math.exp(-L / lam) / ((1.0 + geo.R1 / lam) * (1.0 + geo.R2 / lam))
    return q1 * q2 / (4.0 * math.pi * eps * d) * gain


def double_layer_force(L, p: SurfaceChargeParams, geo: SpherePairGeometry,
                       medium: ElectrolyteMedium) -> float:
    """Analytic -dU_dl/dL [N]; repulsive (positive) for any real sigma."""
    u = double_layer_energy(L, p, geo, medium)
    return u * (1.0 / p.lambda_D + 1.0 / (geo.R1 + geo.R2 + L))


def _casimir_engine(geo, materials, model, engine, quad=None,
                    planar_curve=None, pfa_tol=1e-6):
    """(energy(L), force(L)) callables for the selected Casimir backend."""
    if engine == "pfa":
        curve = planar_curve
        if curve is None:
            curve = planar_energy_curve(
                materials.sphere1, materials.sphere2, materials.gap,
                T=geo.T, model=model,
            )
        r_eff = effective_radius(geo.R1, geo.R2)
        return (
            lambda L: pfa_energy(r_eff, L, curve, pfa_tol),
            lambda L: pfa_force(r_eff, L, curve),
        )
    if engine == "exact":
        return (
            lambda L: casimir_energy_spheres(geo.with_gap(L), materials, model, quad),
            lambda L: casimir_force_spheres(geo.with_gap(L), materials, model, quad),
        )
    raise DomainError(f"unknown casimir engine {engine!r}; use 'pfa' or 'exact'")


def total_interaction(L, charge: SurfaceChargeParams, geo: SpherePairGeometry,
                      materials: SphereMaterials,
                      model: ZeroFreqModel = ZeroFreqModel.TM_UNSCREENED,
                      engine: str = "pfa", quad=None, planar_curve=None) -> float:
    """U_dl + U_Casimir at one gap [J].

    ``engine`` picks the Casimir backend: ``"pfa"`` maps the planar free
    energy through the Derjaguin approximation (fast), ``"exact"`` runs
    the two-sphere scattering solver (slow, asymptotically exact).  A
    precomputed ``planar_curve`` short-circuits the PFA ladder rebuild
    when many gaps are evaluated against the same materials.
    """
    u_c, _ = _casimir_engine(geo, materials, model, engine, quad, planar_curve)
    return double_layer_energy(L, charge, geo, materials.gap) + u_c(L)


def interaction_force(L, charge: SurfaceChargeParams, geo: SpherePairGeometry,
                      materials: SphereMaterials,
                      model: ZeroFreqModel = ZeroFreqModel.TM_UNSCREENED,
                      engine: str = "pfa", quad=None, planar_curve=None) -> float:
    """Total force -dU_int/dL [N]; negative = attraction.

    The double-layer derivative is taken analytically (its scale is the
    screening length, which at high salt is far below any safe numerical
    step); the Casimir derivative comes from the selected backend's own
    force path.
    """
    _, f_c = _casimir_engine(geo, materials, model, engine, quad, planar_curve)
    return double_layer_force(L, charge, geo, materials.gap) + f_c(L)


def interaction_curve(L_grid, charge: SurfaceChargeParams,
                      geo: SpherePairGeometry, materials: SphereMaterials,
                      model: ZeroFreqModel = ZeroFreqModel.TM_UNSCREENED,
                      engine: str = "pfa", quad=None,
                      planar_curve=None) -> InteractionCurve:
    """Tabulate components, total, and force on a gap grid.

    The planar ladder (PFA backend) is built once and shared across the
    whole grid.
    """
    L_grid = np.asarray(L_grid, dtype=float)
    u_c, f_c = _casimir_engine(geo, materials, model, engine, quad, planar_curve)
    u_dl = np.array([double_layer_energy(L, charge, geo, materials.gap)
                     for L in L_grid])
    f_dl = np.array([double_layer_force(L, charge, geo, materials.gap)
                     for L in L_grid])
    u_cas = np.array([u_c(L) for L in L_grid])
    f_cas = np.array([f_c(L) for L in L_grid])
    return InteractionCurve(
        L=L_grid,
        U_dl=u_dl,
        U_casimir=u_cas,
        U_total=u_dl + u_cas,
        F_total=f_dl + f_cas,
        model=model,
    )


def equilibrium_position(trap: OpticalTrap, force, *, L_contact=0.2e-6,
                         T=296.0, n_scan=512):
    """Gap at which the trap balances the interaction, with stability.

    Solves ``k_x (L - L_eq_opt) = F_int(L)`` by dense sign-change scan
    plus bracketed root refinement on ``[L_contact, L_eq_opt + 5 sigma_x]``
    (``sigma_x`` the thermal trap width).  The *outermost* balance point
    is returned — the one an approaching probe reaches first — together
    with the sign of the total stiffness ``k_x - dF_int/dL`` there.

    ``force`` is either a callable L -> N or an
    :class:`InteractionCurve` (its force column is spline-interpolated,
    and the bracket is clipped to the tabulated range).

    Raises
    ------
    JumpIntoContact
        When no balance point exists above the contact distance — the
        attraction out-pulls the trap all the way down.
    """
    if callable(force):
        f_int = force
        lo, hi_cap = L_contact, math.inf
    elif isinstance(force, InteractionCurve):
        spline = force.force_interpolant()
        f_int = lambda L: float(spline(L))
        lo = max(L_contact, float(force.L[0]))
        hi_cap = float(force.L[-1])
    else:
        raise DomainError("force must be a callable or an InteractionCurve")

    sigma_x = math.sqrt(CONSTANTS.k_B * T / trap.k_x)
    hi = min(trap.L_eq_opt + 5.0 * sigma_x, hi_cap)
    if not lo < hi:
        raise DomainError("empty search bracket: contact distance above trap range")

    def g(L):
        return trap.k_x * (L - trap.L_eq_opt) - f_int(L)

    grid = np.linspace(lo, hi, n_scan)
    vals = np.array([g(L) for L in grid])
    crossings = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
    if len(crossings) == 0:
        if vals[-1] < 0.0:
            raise DomainError(
                "net repulsion pushes the probe beyond the search bracket"
            )
        raise JumpIntoContact(
            "attraction exceeds the trap force everywhere above contact"
        )
    i = crossings[-1]
    root = brentq(g, grid[i], grid[i + 1], xtol=1e-13)
    h = (hi - lo) * 1e-6
    dfdL = (f_int(root + h) - f_int(root - h)) / (2.0 * h)
    return float(root), bool(trap.k_x - dfdL > 0.0)
