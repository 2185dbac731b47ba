r"""Synthetic experiment generator: overdamped dynamics of the trapped probe.

Integrates the gap coordinate :math:`L(t)` of the probe sphere under

.. math::

    \gamma(L)\,\dot L = -k_x (L - L_{\mathrm{eq}}^{\mathrm{opt}})
                        + F_{\mathrm{int}}(L) + \sqrt{2\gamma(L)k_BT}\,\xi(t)

with an explicit Euler–Maruyama scheme, drag evaluated at the current gap
each fine step.  Because the drag depends on position, the Itô drift picks
up the standard spurious-drift term

.. math::

    a(L) = \frac{F(L) - k_BT\,\partial_L \ln\gamma(L)}{\gamma(L)},

without which the stationary law of the discrete chain is
:math:`\gamma(L)e^{-U/k_BT}` rather than Boltzmann — a tilt worth several
fN over the gap ranges simulated here, which the equilibrium-based
analysis pipeline would misread as a real force.  The higher-order
(Milstein) multiplicative-noise correction is omitted: it changes strong
pathwise convergence only, not the sampled distribution at these step
sizes.

The camera is emulated: each reported sample is the average of the
fine-step positions inside the exposure window ``W`` that opens at the
frame time, frames ticking at ``f_s``.  A transverse ``y`` channel with
its own stiffness and no interaction force rides along for calibration
workflows; its drag is approximated by the axial value at the
instantaneous gap (its equilibrium statistics do not depend on drag at
all).

The interaction force is precomputed on a 1 nm grid spanning the
reachable gap range and evaluated from piecewise-cubic coefficients
inside the compiled loop; drag (a far smoother function) is tabulated at
10 nm and splined the same way.  All normal deviates are drawn up front
from a single seeded generator, so a fixed seed reproduces the
trajectory bit for bit regardless of thread settings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit
from scipy.interpolate import CubicSpline

from .colloid import OpticalTrap, SurfaceChargeParams, interaction_force
from .errors import DomainError
from .hydro import HydroEnvironment, drag_coefficient
from .medium import CONSTANTS, ElectrolyteMedium, load_material
from .planar import ZeroFreqModel, planar_energy_curve
from .spherescatter import SphereMaterials

__all__ = [
    "SimulationConfig",
    "Trajectory",
    "default_timestep",
    "simulate_trajectory",
    "detect_contact",
    "load_trajectory",
]


@dataclass(frozen=True)
class SimulationConfig:
    """Complete description of one synthetic run.

    ``dt`` is the integrator step, ``W`` the exposure time, ``f_s`` the
    frame rate; the integrator snaps ``dt`` down so that a whole number
    of fine steps fits in a frame interval.  ``charge`` and ``model``
    define the default interaction (double layer plus Casimir); see
    :func:`simulate_trajectory` for overriding it with an imposed force.
    """

    dt: float
    duration: float
    W: float
    f_s: float
    seed: int
    trap: OpticalTrap
    charge: SurfaceChargeParams
    model: ZeroFreqModel
    env: HydroEnvironment
    T: float = 296.0
    L0_contact: float = 0.2e-6

    def __post_init__(self):
        if self.dt <= 0.0 or self.W <= 0.0 or self.f_s <= 0.0:
            raise DomainError("dt, W and f_s must all be > 0")
        if self.dt > self.W / 10.0:
            raise DomainError("need dt <= W/10 to resolve the exposure window")
        if self.W >= 1.0 / self.f_s:
            raise DomainError("exposure must be shorter than the frame interval")
        if self.f_s * self.duration < 100.0:
            raise DomainError("need at least 100 frames (f_s * duration >= 100)")
        if self.T <= 0.0:
            raise DomainError("temperature must be > 0")
        if self.L0_contact < 0.0:
            raise DomainError("contact offset must be >= 0")
        if self.seed != int(self.seed) or not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled probe coordinates plus the config that made them.

    ``x`` is the gap coordinate L(t); ``y`` the transverse channel.  When
    the run ended by contact, ``contact`` is set and the final sample is
    the recorded touch position rather than a full-window average.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    meta: SimulationConfig | None = None
    contact: bool = False
    contact_time: float | None = None

    def __post_init__(self):
        for name in ("t", "x", "y"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float))
        if not len(self.t) == len(self.x) == len(self.y):
            raise DomainError("t, x, y must have equal lengths")
        if len(self.t) >= 2:
            steps = np.diff(self.t)
            if np.any(np.abs(steps - steps[0]) > 1e-9 * steps[0]):
                raise DomainError("sampling must be uniform")

    @property
    def f_s(self) -> float:
        if len(self.t) < 2:
            raise DomainError("need at least two samples for a frame rate")
        return 1.0 / (self.t[1] - self.t[0])

    def to_csv(self, path):
        """Write `t_s,x_m,y_m` rows plus a config sidecar JSON."""
        path = Path(path)
        with open(path, "w") as fh:
            fh.write("t_s,x_m,y_m\n")
            for i in range(len(self.t)):
                fh.write(f"{float(self.t[i])!r},{float(self.x[i])!r},"
                         f"{float(self.y[i])!r}\n")
        if self.meta is not None:
            with open(path.with_suffix(".json"), "w") as fh:
                json.dump(_config_to_dict(self.meta), fh, indent=1)


def _config_to_dict(cfg: SimulationConfig) -> dict:
    """Sidecar representation, field names mirroring SimulationConfig."""
    geo = cfg.env.geo
    return {
        "dt": cfg.dt,
        "duration": cfg.duration,
        "W": cfg.W,
        "f_s": cfg.f_s,
        "seed": int(cfg.seed),
        "trap": {"k_x": cfg.trap.k_x, "k_y": cfg.trap.k_y,
                 "L_eq_opt": cfg.trap.L_eq_opt, "power": cfg.trap.power},
        "charge": {"sigma": cfg.charge.sigma, "lambda_D": cfg.charge.lambda_D},
        "model": cfg.model.name,
        "env": {"geo": {"R1": geo.R1, "R2": geo.R2, "L": geo.L, "T": geo.T},
                "eta": cfg.env.eta, "h": cfg.env.h},
        "T": cfg.T,
        "L0_contact": cfg.L0_contact,
    }


def _config_from_dict(d: dict) -> SimulationConfig:
    from .geometry import SpherePairGeometry

    g = d["env"]["geo"]
    return SimulationConfig(
        dt=d["dt"], duration=d["duration"], W=d["W"], f_s=d["f_s"],
        seed=int(d["seed"]),
        trap=OpticalTrap(**d["trap"]),
        charge=SurfaceChargeParams(**d["charge"]),
        model=ZeroFreqModel[d["model"]],
        env=HydroEnvironment(
            SpherePairGeometry(R1=g["R1"], R2=g["R2"], L=g["L"], T=g["T"]),
            eta=d["env"]["eta"], h=d["env"]["h"],
        ),
        T=d["T"], L0_contact=d["L0_contact"],
    )


def load_trajectory(path) -> Trajectory:
    """Read a trajectory CSV and its sidecar JSON (if present)."""
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        raise DomainError(f"no samples in {path}")
    meta = None
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        with open(sidecar) as fh:
            meta = _config_from_dict(json.load(fh))
    return Trajectory(t=data[:, 0], x=data[:, 1], y=data[:, 2], meta=meta)


def default_timestep(trap: OpticalTrap, env: HydroEnvironment, W: float,
                     L_ref: float | None = None) -> float:
    """min(tau_C/200, W/10): resolve both relaxation and exposure."""
    gamma = drag_coefficient(env, trap.L_eq_opt if L_ref is None else L_ref)
    return min(gamma / trap.k_x / 200.0, W / 10.0)


@njit(cache=True)
def _pp_eval(x, x0, inv_dx, c):
    """Piecewise cubic in CubicSpline coefficient layout, edge-clamped."""
    i = int((x - x0) * inv_dx)
    m = c.shape[1]
    if i < 0:
        i = 0
    elif i >= m:
        i = m - 1
    t = x - (x0 + i / inv_dx)
    return ((c[0, i] * t + c[1, i]) * t + c[2, i]) * t + c[3, i]


@njit(cache=True)
def _em_kernel(L_init, n_frames, n_sub, m_W, dt, kx, ky, L_eq, kT,
               f_x0, f_inv_dx, c_feff, g_x0, g_inv_dx, c_invg,
               noise, L_contact):
    out_x = np.empty(n_frames)
    out_y = np.empty(n_frames)
    L = L_init
    y = 0.0
    step = 0
    for k in range(n_frames):
        acc_x = 0.0
        acc_y = 0.0
        for j in range(n_sub):
            if j < m_W:
                acc_x += L
                acc_y += y
            inv_g = _pp_eval(L, g_x0, g_inv_dx, c_invg)
            f_eff = _pp_eval(L, f_x0, f_inv_dx, c_feff)
            amp = math.sqrt(2.0 * kT * inv_g * dt)
            L += (f_eff - kx * (L - L_eq)) * inv_g * dt + amp * noise[step, 0]
            y += -ky * y * inv_g * dt + amp * noise[step, 1]
            step += 1
            if L <= L_contact:
                out_x[k] = L
                out_y[k] = y
                return out_x, out_y, k + 1, step
        out_x[k] = acc_x / m_W
        out_y[k] = acc_y / m_W
    return out_x, out_y, n_frames, -1


def _ion_density_for_screening(lambda_D: float, solvent, T: float) -> float:
    """Monovalent-salt number density whose Debye length equals lambda_D."""
    eps = CONSTANTS.eps0 * solvent.static_eps
    return eps * CONSTANTS.k_B * T / (2.0 * (CONSTANTS.e * lambda_D) ** 2)


def _default_interaction(cfg: SimulationConfig, materials):
    """DL + PFA Casimir force on silica spheres, salt matched to lambda_D."""
    geo = cfg.env.geo
    if materials is None:
        water = load_material("water")
        gap_medium = ElectrolyteMedium(
            water,
            n_inf=_ion_density_for_screening(cfg.charge.lambda_D, water, cfg.T),
            T=cfg.T,
        )
        silica = load_material("silica")
        materials = SphereMaterials(silica, silica, gap_medium)
    curve = planar_energy_curve(materials.sphere1, materials.sphere2,
                                materials.gap, T=cfg.T, model=cfg.model)
    return lambda L: interaction_force(L, cfg.charge, geo, materials,
                                       model=cfg.model, engine="pfa",
                                       planar_curve=curve)


def simulate_trajectory(cfg: SimulationConfig, interaction=None,
                        materials=None) -> Trajectory:
    """Generate one camera-sampled trajectory under the configured physics.

    ``interaction`` is the pair force L -> N [negative = attraction]; by
    default it is built from ``cfg.charge`` and ``cfg.model`` (double
    layer plus PFA Casimir on silica spheres in water, salt matched to
    the configured screening length).  Pass an explicit callable to
    impose a synthetic interaction, or ``materials`` to change the
    dielectric composition of the default.  The run starts at the
    optical equilibrium gap and stops early if the gap reaches
    ``cfg.L0_contact`` (contact flag set, touch recorded as the final
    sample).
    """
    trap, geo = cfg.trap, cfg.env.geo
    kT = CONSTANTS.k_B * cfg.T

    frame = 1.0 / cfg.f_s
    n_sub = int(math.ceil(frame / cfg.dt))
    dt = frame / n_sub
    m_W = max(1, int(round(cfg.W / dt)))
    n_frames = int(math.floor(cfg.duration * cfg.f_s))

    sigma_x = math.sqrt(kT / trap.k_x)
    lo = cfg.L0_contact if cfg.L0_contact > 0.0 else 1e-9
    hi = trap.L_eq_opt + 12.0 * sigma_x
    if not lo < trap.L_eq_opt:
        raise DomainError("contact offset must sit below the trap equilibrium")

    if interaction is None:
        interaction = _default_interaction(cfg, materials)

    # interaction force: cubic on a 1 nm grid (per-step evaluation of the
    # Casimir backend is unaffordable); drag: 10 nm is ample, it varies
    # on the scale of the sphere radius
    f_grid = np.arange(lo, hi + 1e-9, 1e-9)
    f_vals = np.array([interaction(L) for L in f_grid])
    if not np.all(np.isfinite(f_vals)):
        raise DomainError("interaction force not finite over the gap range")
    f_spline = CubicSpline(f_grid, f_vals)

    g_grid = np.arange(lo, hi + 10e-9, 10e-9)
    g_vals = np.array([drag_coefficient(cfg.env, L) for L in g_grid])
    ln_g = CubicSpline(g_grid, np.log(g_vals))
    # fold the spurious-drift term into the effective force so the kernel
    # sees plain F(L)/gamma(L) + noise
    feff = CubicSpline(f_grid, f_vals - kT * ln_g(f_grid, 1))
    inv_g = CubicSpline(g_grid, 1.0 / g_vals)

    rng = np.random.Generator(np.random.Philox(int(cfg.seed)))
    noise = rng.standard_normal((n_frames * n_sub, 2))

    out_x, out_y, n_valid, contact_step = _em_kernel(
        trap.L_eq_opt, n_frames, n_sub, m_W, dt,
        trap.k_x, trap.k_y, trap.L_eq_opt, kT,
        float(f_grid[0]), 1.0 / 1e-9, np.ascontiguousarray(feff.c),
        float(g_grid[0]), 1.0 / 10e-9, np.ascontiguousarray(inv_g.c),
        noise, cfg.L0_contact,
    )
    t = np.arange(n_valid) * frame
    hit = contact_step >= 0
    return Trajectory(
        t=t, x=out_x[:n_valid], y=out_y[:n_valid], meta=cfg,
        contact=hit,
        contact_time=float(contact_step * dt) if hit else None,
    )


def detect_contact(traj: Trajectory, L0: float):
    """Index of the first sample at or below the contact gap, or None."""
    below = np.nonzero(traj.x <= L0)[0]
    return int(below[0]) if len(below) else None
