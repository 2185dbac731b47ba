r"""Physical constants, thermal frequency ladder, and dielectric response.

Everything downstream (half-space free energies, sphere scattering,
double-layer screening) consumes three ingredients defined here:

* the thermal ("Matsubara") frequencies :math:`\xi_n = 2\pi n k_B T/\hbar`
  over which fluctuation free energies are summed, with the n = 0 term
  carrying half weight by convention of the summation prime;
* relative permittivities evaluated at imaginary frequency,
  :math:`\varepsilon(i\xi) = 1 + \sum_i C_i/(1 + (\xi/\omega_i)^2)`,
  which are real, >= 1 and monotonically decreasing in :math:`\xi`
  (oscillator parameters ship as versioned JSON data files, never inline);
* electrolyte properties: the Debye screening length and the ionic Drude
  term whose :math:`\xi \to 0` divergence is what makes the gap medium a
  perfect TM reflector at zero frequency.

All operations are pure; the dataclasses are frozen and freely shareable
across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import DomainError, InfiniteScreening, IonicDivergence

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "DielectricModel",
    "ElectrolyteMedium",
    "MatsubaraLadder",
    "load_material",
    "matsubara_frequency",
    "permittivity_imag_freq",
    "ionic_drude_term",
    "debye_length",
    "molar_to_number_density",
]

AVOGADRO = 6.02214076e23
ATOMIC_MASS_KG = 1.66053906660e-27
SODIUM_MASS_KG = 22.98976928 * ATOMIC_MASS_KG


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 values, fixed and immutable at runtime.

    Attributes
    ----------
    k_B : float
        Boltzmann constant [J/K].
    hbar : float
        Reduced Planck constant [J s].
    c : float
        Speed of light in vacuum [m/s].
    e : float
        Elementary charge [C].
    eps0 : float
        Vacuum permittivity [F/m].
    """

    k_B: float = 1.380649e-23
    hbar: float = 1.054571817e-34
    c: float = 299792458.0
    e: float = 1.602176634e-19
    eps0: float = 8.8541878128e-12

    def __post_init__(self):
        for name in ("k_B", "hbar", "c", "e", "eps0"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"constant {name} must be positive")


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class DielectricModel:
    """Oscillator-sum permittivity at imaginary frequency.

    ``eps(i xi) = 1 + sum_i C_i / (1 + (xi/omega_i)^2)``.

    The finite static value is stored explicitly so the xi = 0 limit never
    depends on floating-point evaluation of the sum; model files are
    required to satisfy ``1 + sum C_i == static_eps`` to 1e-6 so the limit
    is also the continuous one.

    Parameters
    ----------
    oscillators : tuple of (C, omega_rad_s)
        Dimensionless strengths and resonance frequencies [rad/s].
    static_eps : float
        Relative permittivity at xi = 0 (finite part, ions excluded).
    label : str
        Human-readable tag carried through outputs.
    """

    oscillators: tuple
    static_eps: float
    label: str = ""

    def __post_init__(self):
        for C, omega in self.oscillators:
            if C < 0.0:
                raise DomainError("oscillator strength C must be >= 0")
            if omega <= 0.0:
                raise DomainError("oscillator frequency must be > 0")
        if self.static_eps < 1.0:
            raise DomainError("static_eps must be >= 1")

    def __call__(self, xi):
        return permittivity_imag_freq(self, xi)


def load_material(source) -> DielectricModel:
    """Load a dielectric model from a JSON file or a bundled name.

    ``source`` may be a path to a JSON file with fields
    ``{"label": str, "static_eps": float,
    "oscillators": [{"C": float, "omega_rad_s": float}]}``, or one of the
    bundled names ``"water"`` / ``"silica"``.
    """
    if source in ("water", "silica"):
        text = (
            resources.files("beadlab.data").joinpath(f"{source}.json").read_text()
        )
        raw = json.loads(text)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    try:
        osc = tuple((float(o["C"]), float(o["omega_rad_s"])) for o in raw["oscillators"])
        model = DielectricModel(
            oscillators=osc,
            static_eps=float(raw["static_eps"]),
            label=str(raw.get("label", "")),
        )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed material file {source!r}: {exc}") from exc
    total = 1.0 + sum(C for C, _ in model.oscillators)
    if abs(total - model.static_eps) > 1e-6 * model.static_eps:
        raise DomainError(
            f"material {model.label!r}: 1 + sum(C) = {total:.6f} does not match "
            f"static_eps = {model.static_eps:.6f}"
        )
    return model


@dataclass(frozen=True)
class ElectrolyteMedium:
    """Solvent plus dissolved monatomic ions.

    The ionic plasma frequency squared is precomputed once,

    ``omega_ion_sq = n_inf (Z e)^2 / (eps0 * static_eps(solvent) * m_ion)``,

    because only its smallness relative to the first thermal frequency and
    its xi -> 0 divergence ever matter.

    Parameters
    ----------
    solvent : DielectricModel
    n_inf : float
        Bulk ion number density per species [1/m^3].
    Z : int
        Ion valence (>= 1).
    T : float
        Temperature [K].
    gamma_ion : float
        Drude damping rate of the ionic response [rad/s].  Its value is
        uncritical: any choice leaves the term negligible at nonzero
        thermal frequencies and divergent at zero.  The default is small
        enough that the divergence is already saturated at frequencies
        ~1e-6 of the first thermal frequency, which keeps the numeric
        zero-frequency limit of the scattering blocks within 1e-3 of the
        analytic one.
    ion_mass : float
        Ion mass [kg]; default sodium.
    """

    solvent: DielectricModel
    n_inf: float
    Z: int = 1
    T: float = 296.0
    gamma_ion: float = 1.0e10
    ion_mass: float = SODIUM_MASS_KG
    omega_ion_sq: float = field(init=False)

    def __post_init__(self):
        if self.n_inf < 0.0:
            raise DomainError("n_inf must be >= 0")
        if int(self.Z) != self.Z or self.Z < 1:
            raise DomainError("Z must be an integer >= 1")
        if self.T <= 0.0:
            raise DomainError("T must be > 0")
        if self.ion_mass <= 0.0:
            raise DomainError("ion_mass must be > 0")
        w2 = (
            self.n_inf
            * (self.Z * CONSTANTS.e) ** 2
            / (CONSTANTS.eps0 * self.solvent.static_eps * self.ion_mass)
        )
        object.__setattr__(self, "omega_ion_sq", w2)

    def eps_gap(self, xi):
        """Gap permittivity at imaginary frequency: solvent + ionic term.

        Only valid for xi > 0; the xi = 0 limit is handled symbolically by
        callers (the ionic part diverges there).
        """
        return permittivity_imag_freq(self.solvent, xi) + ionic_drude_term(self, xi)


@dataclass(frozen=True)
class MatsubaraLadder:
    """The thermal frequency ladder xi_n = n * xi_1 for a temperature.

    Attributes
    ----------
    T : float
        Temperature [K].
    n_max : int
        Largest index included.
    frequencies : numpy.ndarray
        xi_0 .. xi_{n_max} in rad/s; xi_0 = 0 exactly.
    """

    T: float
    n_max: int
    frequencies: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n_max < 0:
            raise DomainError("n_max must be >= 0")
        xi1 = matsubara_frequency(1, self.T)
        freqs = np.arange(self.n_max + 1, dtype=float) * xi1
        freqs.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)

    def __iter__(self):
        return iter(enumerate(self.frequencies))


def matsubara_frequency(n, T):
    """Thermal frequency xi_n = 2 pi n k_B T / hbar [rad/s].

    Parameters
    ----------
    n : int
        Index >= 0 (xi_0 = 0).
    T : float
        Temperature [K], > 0.
    """
    if T <= 0.0:
        raise DomainError("temperature must be > 0")
    if n < 0:
        raise DomainError("index must be >= 0")
    return 2.0 * math.pi * n * CONSTANTS.k_B * T / CONSTANTS.hbar


def permittivity_imag_freq(model: DielectricModel, xi):
    """Evaluate eps(i xi) for an oscillator model; array-friendly in xi.

    Returns ``static_eps`` exactly at xi = 0 and the oscillator sum
    elsewhere; with consistent model files the two branches agree in the
    limit.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0.0):
        raise DomainError("imaginary frequency must be >= 0")
    out = np.ones_like(xi)
    for C, omega in model.oscillators:
        out = out + C / (1.0 + (xi / omega) ** 2)
    out = np.where(xi == 0.0, model.static_eps, out)
    return out if out.ndim else float(out)


def ionic_drude_term(medium: ElectrolyteMedium, xi):
    """Additive ionic contribution omega_ion^2 / (xi (xi + gamma_ion)).

    Raises
    ------
    IonicDivergence
        At xi = 0, where the term has a pole; the zero-frequency physics
        is handled by the analytic perfect-TM-reflector branch instead.
    """
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < 0.0):
        raise DomainError("imaginary frequency must be >= 0")
    if np.any(xi_arr == 0.0):
        raise IonicDivergence(
            "ionic response diverges at zero frequency; use the analytic limit"
        )
    out = medium.omega_ion_sq / (xi_arr * (xi_arr + medium.gamma_ion))
    return out if out.ndim else float(out)


def debye_length(medium: ElectrolyteMedium) -> float:
    """Ionic screening length sqrt(eps k_B T / (2 (Z e)^2 n_inf)) [m].

    eps is the absolute static permittivity eps0 * static_eps(solvent).

    Raises
    ------
    InfiniteScreening
        For an ion-free medium (n_inf = 0).
    """
    if medium.n_inf == 0.0:
        raise InfiniteScreening("no ions: screening length is infinite")
    eps = CONSTANTS.eps0 * medium.solvent.static_eps
    return math.sqrt(
        eps * CONSTANTS.k_B * medium.T / (2.0 * (medium.Z * CONSTANTS.e) ** 2 * medium.n_inf)
    )


def molar_to_number_density(molar: float) -> float:
    """Convert a salt concentration in mol/L to ions per m^3 per species."""
    if molar < 0.0:
        raise DomainError("concentration must be >= 0")
    return molar * 1000.0 * AVOGADRO
