"""Tests for the synthetic-experiment generator.

Statistical assertions run on fixed seeds; the tolerances leave several
standard errors of headroom at the chosen run lengths, so they are
deterministic, not flaky.
"""

import math

import numpy as np
import pytest
from scipy import stats

from beadlab.colloid import OpticalTrap, SurfaceChargeParams
from beadlab.errors import DomainError
from beadlab.geometry import SpherePairGeometry
from beadlab.hydro import HydroEnvironment, correlation_time, drag_coefficient
from beadlab.medium import CONSTANTS
from beadlab.planar import ZeroFreqModel
from beadlab.simulate import (
    SimulationConfig,
    Trajectory,
    default_timestep,
    detect_contact,
    load_trajectory,
    simulate_trajectory,
)

T_LAB = 296.0
KT = CONSTANTS.k_B * T_LAB

GEO = SpherePairGeometry(R1=2.35e-6, R2=11.74e-6, L=1e-6, T=T_LAB)
ENV = HydroEnvironment(GEO, eta=0.95e-3, h=12e-6)
CHARGE0 = SurfaceChargeParams(sigma=0.0, lambda_D=29.3e-9)
NO_FORCE = lambda L: 0.0


def make_config(**kw):
    base = dict(dt=5e-4, duration=400.0, W=5e-3, f_s=20.0, seed=42,
                trap=OpticalTrap(k_x=1e-6, k_y=1e-6, L_eq_opt=1e-6),
                charge=CHARGE0, model=ZeroFreqModel.OMIT, env=ENV)
    base.update(kw)
    return SimulationConfig(**base)


class TestConfigValidation:
    def test_accepts_reference_setup(self):
        make_config()

    @pytest.mark.parametrize("kw", [
        dict(dt=1e-3),                 # dt > W/10
        dict(W=6e-2),                  # W >= 1/f_s
        dict(duration=1.0),            # fewer than 100 frames
        dict(L0_contact=-1e-9),
        dict(T=0.0),
        dict(seed=-1),
        dict(seed=2**64),
    ])
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            make_config(**kw)

    def test_contact_above_trap_rejected_at_run_time(self):
        cfg = make_config(L0_contact=2e-6)
        with pytest.raises(DomainError):
            simulate_trajectory(cfg, interaction=NO_FORCE)

    def test_default_timestep_limits(self):
        trap = OpticalTrap(k_x=1e-6, k_y=1e-6, L_eq_opt=1e-6)
        tau = correlation_time(drag_coefficient(ENV, 1e-6), trap.k_x)
        # wide exposure: relaxation-limited
        assert default_timestep(trap, ENV, W=1.0) == pytest.approx(tau / 200)
        # short exposure: window-limited
        assert default_timestep(trap, ENV, W=1e-4) == pytest.approx(1e-5)


class TestTrajectoryType:
    def test_lengths_must_agree(self):
        with pytest.raises(DomainError):
            Trajectory(t=[0.0, 0.1], x=[1e-6], y=[0.0, 0.0])

    def test_sampling_must_be_uniform(self):
        with pytest.raises(DomainError):
            Trajectory(t=[0.0, 0.1, 0.35], x=[1e-6] * 3, y=[0.0] * 3)

    def test_frame_rate(self):
        traj = Trajectory(t=[0.0, 0.05, 0.10], x=[1e-6] * 3, y=[0.0] * 3)
        assert traj.f_s == pytest.approx(20.0)


@pytest.fixture(scope="module")
def free_run():
    """Long no-interaction run in the reference trap."""
    return simulate_trajectory(make_config(duration=1200.0),
                               interaction=NO_FORCE)


class TestEquilibriumStatistics:
    def test_equipartition(self, free_run):
        # k_x = 1 fN/nm at 296 K -> sigma_x = 63.9 nm
        sigma = math.sqrt(KT / 1e-6)
        assert np.std(free_run.x) == pytest.approx(sigma, rel=0.05)
        assert np.std(free_run.y) == pytest.approx(sigma, rel=0.05)
        assert abs(np.mean(free_run.x) - 1e-6) < 5e-9
        assert abs(np.mean(free_run.y)) < 5e-9

    def test_no_contact_in_trap(self, free_run):
        assert not free_run.contact
        assert free_run.contact_time is None
        assert detect_contact(free_run, 0.2e-6) is None

    def test_boltzmann_histogram(self):
        # stiff trap: correlation time ~14 ms << frame interval, so the
        # 5000 frames are effectively independent and a plain Pearson
        # chi^2 against the configured optical potential applies
        cfg = make_config(dt=5e-5, duration=500.0, W=6e-4, f_s=10.0,
                          trap=OpticalTrap(k_x=1e-5, k_y=1e-5,
                                           L_eq_opt=0.8e-6),
                          seed=2024)
        traj = simulate_trajectory(cfg, interaction=NO_FORCE)
        sigma = math.sqrt(KT / 1e-5)
        edges = 0.8e-6 + np.arange(-15, 16) * 4e-9
        counts, _ = np.histogram(traj.x, bins=edges)
        cdf = stats.norm.cdf(edges, loc=0.8e-6, scale=sigma)
        expected = counts.sum() * np.diff(cdf) / (cdf[-1] - cdf[0])
        keep = expected >= 5
        chi2 = np.sum((counts[keep] - expected[keep]) ** 2 / expected[keep])
        p = stats.chi2.sf(chi2, np.sum(keep) - 1)
        assert p > 0.01

    def test_exposure_blur_shrinks_variance(self):
        # same noise stream, wider window -> more averaging
        sharp = simulate_trajectory(make_config(dt=2e-4, W=2e-3),
                                    interaction=NO_FORCE)
        blurred = simulate_trajectory(make_config(dt=2e-4, W=48e-3),
                                      interaction=NO_FORCE)
        assert np.var(blurred.x) < 0.95 * np.var(sharp.x)

    def test_relaxation_time(self, free_run):
        # fluctuation-dissipation: ACF decay time = gamma/k_x; fit only
        # the first few lags, where the log of the ACF is clean
        x = free_run.x - np.mean(free_run.x)
        acf = [float(np.mean(x[:-k] * x[k:]) / np.mean(x * x))
               for k in range(1, 6)]
        lags = np.arange(1, 6) / free_run.f_s
        tau_fit = -1.0 / np.polyfit(lags, np.log(acf), 1)[0]
        tau_ref = correlation_time(drag_coefficient(ENV, 1e-6), 1e-6)
        assert tau_fit == pytest.approx(tau_ref, rel=0.10)


class TestReproducibility:
    def test_fixed_seed_bitwise(self):
        cfg = make_config(duration=10.0)
        a = simulate_trajectory(cfg, interaction=NO_FORCE)
        b = simulate_trajectory(cfg, interaction=NO_FORCE)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)

    def test_thread_count_irrelevant(self):
        import numba

        cfg = make_config(duration=10.0)
        numba.set_num_threads(1)
        a = simulate_trajectory(cfg, interaction=NO_FORCE)
        numba.set_num_threads(min(2, numba.config.NUMBA_NUM_THREADS))
        b = simulate_trajectory(cfg, interaction=NO_FORCE)
        assert np.array_equal(a.x, b.x)

    def test_seed_matters(self):
        a = simulate_trajectory(make_config(duration=10.0, seed=1),
                                interaction=NO_FORCE)
        b = simulate_trajectory(make_config(duration=10.0, seed=2),
                                interaction=NO_FORCE)
        assert not np.array_equal(a.x, b.x)


STEEP_PULL = lambda L: -1e-8 * math.exp(-L / 0.2e-6)


class TestContact:
    def test_unstable_regime_raises_flag(self):
        # this force has no stable balance with the reference trap
        # (colloid.equilibrium_position reports jump-into-contact for it)
        cfg = make_config(dt=2e-4, duration=100.0, W=2e-3, f_s=1.0)
        traj = simulate_trajectory(cfg, interaction=STEEP_PULL)
        assert traj.contact
        assert traj.contact_time is not None and traj.contact_time < 1.0
        assert traj.x[-1] <= cfg.L0_contact
        assert detect_contact(traj, cfg.L0_contact) == len(traj.x) - 1

    def test_ensemble_contact_rate(self):
        hits = 0
        for seed in range(20):
            cfg = make_config(dt=2e-4, duration=100.0, W=2e-3, f_s=1.0,
                              seed=seed)
            traj = simulate_trajectory(cfg, interaction=STEEP_PULL)
            if detect_contact(traj, cfg.L0_contact) is not None:
                hits += 1
        assert hits >= 18

    def test_descent_crossing_index(self):
        x = np.linspace(0.5e-6, 0.1e-6, 11)
        traj = Trajectory(t=np.arange(11) * 0.1, x=x, y=np.zeros(11))
        k = detect_contact(traj, 0.2e-6)
        assert k == int(np.argmax(x <= 0.2e-6))

    def test_single_sample(self):
        traj = Trajectory(t=[0.0], x=[0.1e-6], y=[0.0])
        assert detect_contact(traj, 0.2e-6) == 0


class TestRoundTrip:
    def test_csv_and_sidecar(self, tmp_path):
        cfg = make_config(dt=5e-4, duration=5.0, W=5e-3, f_s=20.0, seed=7)
        traj = simulate_trajectory(cfg, interaction=NO_FORCE)
        out = tmp_path / "run.csv"
        traj.to_csv(out)
        assert (tmp_path / "run.json").exists()
        assert out.read_text().startswith("t_s,x_m,y_m\n")
        back = load_trajectory(out)
        np.testing.assert_array_equal(back.t, traj.t)
        np.testing.assert_array_equal(back.x, traj.x)
        np.testing.assert_array_equal(back.y, traj.y)
        assert back.meta == cfg

    def test_missing_interaction_grid_guard(self):
        cfg = make_config(duration=10.0)
        with pytest.raises(DomainError):
            simulate_trajectory(cfg, interaction=lambda L: float("nan"))


def test_screening_density_inversion():
    # the default interaction builds its electrolyte by inverting the
    # Debye length; the round trip must be exact
    from beadlab.medium import ElectrolyteMedium, debye_length, load_material
    from beadlab.simulate import _ion_density_for_screening

    water = load_material("water")
    for lam in (0.6458e-9, 29.3e-9, 100e-9):
        n = _ion_density_for_screening(lam, water, T_LAB)
        med = ElectrolyteMedium(water, n_inf=n, T=T_LAB)
        assert debye_length(med) == pytest.approx(lam, rel=1e-12)
