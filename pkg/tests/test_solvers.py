import numpy as np
import pytest
from scipy.integrate import solve_ivp

from pmno import tensor as T
from pmno.errors import NumericalAbort
from pmno.grid import Grid, GridField
from pmno.io import read_grid_file, write_grid_file
from pmno.pde import PdeSystem, get_system, laplacian
from pmno.solvers import (
    advection_exact,
    generate_dataset,
    initial_condition,
    lambda_omega_initial,
    load_dataset,
    reference_trajectory,
    spectral_rk4_solve,
)


class PeriodicHeat(PdeSystem):
    name = "periodic-heat"

    def __init__(self, alpha):
        self.alpha = alpha

    def rhs(self, u, t, grid):
        return laplacian(u, "spectral", grid) * self.alpha


class Blowup(PdeSystem):
    name = "blowup"

    def rhs(self, u, t, grid):
        return u * u * 1e3


def reaction_oracle(t_end, u0=(1.0, 0.0), lam=0.98, omega=1.0):
    def f(_, y):
        r2 = y[0] ** 2 + y[1] ** 2
        return [lam * y[0] - omega * y[1] - r2 * y[0], omega * y[0] + lam * y[1] - r2 * y[1]]

    return solve_ivp(f, (0, t_end), u0, method="DOP853", rtol=1e-13, atol=1e-14, dense_output=True)


class TestAdvectionExact:
    def test_peak_at_t0(self):
        g = Grid((4, 4), (0.25, 0.0), (1.0, 1.0))
        assert advection_exact(g, 0.0).values[0, 0, 0] == 1.0

    def test_peak_at_half_period(self):
        g = Grid((4, 4), (-0.25, 0.0), (1.0, 1.0))
        assert advection_exact(g, 0.5).values[0, 0, 0] == pytest.approx(1.0, abs=1e-14)

    def test_period_one(self):
        g = get_system("advection2d").grid(32)
        a, b = advection_exact(g, 0.37).values, advection_exact(g, 1.37).values
        assert np.max(np.abs(a - b)) < 1e-13


class TestRk4:
    def test_heat_eigenmode(self):
        P, alpha, n = 2.0, 0.05, 32
        g = Grid((n, n), (0.0, 0.0), (P, P))
        X, _ = g.mesh()
        u0 = np.sin(2 * np.pi * X / P)[..., None]
        traj = spectral_rk4_solve(PeriodicHeat(alpha), GridField(g, u0), 0.1, 10)
        for f in traj.fields:
            exact = np.exp(-alpha * (2 * np.pi / P) ** 2 * f.t) * u0
            assert np.max(np.abs(f.values - exact)) < 1e-6

    def test_reaction_orbit(self):
        sysm = get_system("lambda_omega_rd")
        g = sysm.grid(8)
        u0 = np.zeros((8, 8, 2))
        u0[..., 0] = 1.0
        traj = spectral_rk4_solve(sysm, GridField(g, u0), 0.05, 40)
        sol = reaction_oracle(2.0)
        for f in traj.fields:
            assert np.max(np.abs(f.values - sol.sol(f.t)[None, None, :])) < 1e-6

    def test_fourth_order_in_inner_step(self):
        sysm = get_system("lambda_omega_rd")
        g = sysm.grid(4)
        u0 = np.zeros((4, 4, 2))
        u0[..., 0] = 0.2
        ref = reaction_oracle(1.0, (0.2, 0.0)).sol(1.0)
        errs = []
        for h in (0.1, 0.05, 0.025):
            end = spectral_rk4_solve(sysm, GridField(g, u0), 1.0, 1, inner_dt=h).fields[-1]
            errs.append(np.max(np.abs(end.values[0, 0] - ref)))
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(np.abs(rates - 4) < 0.3)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_blowup_aborts(self):
        g = Grid((4, 4))
        with pytest.raises(NumericalAbort):
            spectral_rk4_solve(Blowup(), GridField(g, np.full((4, 4, 1), 5.0)), 1.0, 3)

    def test_analytic_and_numeric_advection_agree(self):
        sysm = get_system("advection2d")
        g = sysm.grid(128)
        num = spectral_rk4_solve(sysm, advection_exact(g, 0.0), 0.02, 10)
        for f in num.fields:
            diff = f.values - advection_exact(g, f.t).values
            assert np.sqrt(np.mean(diff**2)) < 1e-6

    def test_heat_energy_nonincreasing(self):
        sysm = get_system("heat_star")
        g = sysm.grid(32)
        sysm.alpha = 0.01
        traj = spectral_rk4_solve(sysm, initial_condition(sysm, g), 0.5, 8)
        energy = [np.linalg.norm(f.values) for f in traj.fields]
        assert np.all(np.diff(energy) <= 0)


class TestInitialConditions:
    def test_spiral_seed(self):
        g = get_system("lambda_omega_rd").grid(64)
        uv = lambda_omega_initial(g)
        assert uv.shape == (64, 64, 2)
        assert np.max(np.hypot(uv[..., 0], uv[..., 1])) < 1.0
        assert np.hypot(*uv[32, 32]) == 0.0  # node at the exact center

    def test_heat_masked(self):
        sysm = get_system("heat_star")
        g = sysm.grid(32)
        u = initial_condition(sysm, g).values[..., 0]
        assert np.all(u[~sysm.mask(g).inside] == 0.0)


class TestDatasets:
    def test_advection_dataset_is_analytic(self, tmp_path):
        traj = generate_dataset("advection2d", 0.02, 6, 32, tmp_path)
        g = traj.grid
        for i in range(6):
            stored = read_grid_file(tmp_path / f"u_{i:05d}.pmno")
            assert np.max(np.abs(stored - advection_exact(g, i * 0.02).values)) < 1e-14

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        generate_dataset("heat_star", 0.1, 3, 16, a, seed=3)
        generate_dataset("heat_star", 0.1, 3, 16, b, seed=3)
        for fa in sorted(a.iterdir()):
            assert fa.read_bytes() == (b / fa.name).read_bytes()

    def test_spiral_dataset(self, tmp_path):
        traj = generate_dataset("lambda_omega_rd", 0.05, 3, 256, tmp_path)
        assert len(list(tmp_path.glob("u_*.pmno"))) == 3
        assert traj.fields[-1].values.shape == (256, 256, 2)
        assert np.all(np.isfinite(traj.array()))
        back = load_dataset(tmp_path)
        assert back.system == "lambda_omega_rd" and back.grid == traj.grid
        assert all(np.array_equal(x.values, y.values) for x, y in zip(back.fields, traj.fields))

    def test_round_trip_bit_exact(self, tmp_path):
        traj = reference_trajectory(get_system("lambda_omega_rd"), get_system("lambda_omega_rd").grid(16), 0.1, 3)
        for i, f in enumerate(traj.fields):
            write_grid_file(tmp_path / f"{i}.pmno", f.values)
            assert np.array_equal(read_grid_file(tmp_path / f"{i}.pmno"), f.values)

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match=str(blocker)):
            generate_dataset("advection2d", 0.02, 2, 8, blocker / "sub")
