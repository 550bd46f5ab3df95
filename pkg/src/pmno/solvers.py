"""Reference trajectories: the analytic advection solution and RK4
method-of-lines solves for the other presets."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensor as T
from .errors import NumericalAbort
from .grid import Grid, GridField
from .pde import Advection2D, HeatStar, LambdaOmega, PdeSystem, advection_velocity, get_system


@dataclass
class Trajectory:
    system: str
    dt: float
    grid: Grid
    fields: list[GridField]
    provenance: str = "analytic"
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.fields)

    @property
    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.fields])

    def array(self) -> np.ndarray:
        """(M, H, W, C) stack of snapshot values."""
        return np.stack([f.values for f in self.fields])

    def window(self, start: int, count: int) -> list[GridField]:
        return self.fields[start : start + count]


# ------------------------------------------------------------------ analytic
def advection_exact(grid: Grid, t: float, A: float = 100.0, radius: float = 0.25) -> GridField:
    X, Y = grid.mesh()
    v1, v2 = advection_velocity(t, radius)
    u = np.exp(-A * ((X - v1) ** 2 + (Y - v2) ** 2))
    return GridField(grid, u[..., None], t=float(t))


def lambda_omega_initial(grid: Grid) -> np.ndarray:
    """Spiral seed u = tanh(r) cos(theta - r), v = tanh(r) sin(theta - r)
    about the domain center."""
    X, Y = grid.mesh()
    cx = grid.lower[0] + 0.5 * grid.length[0]
    cy = grid.lower[1] + 0.5 * grid.length[1]
    r = np.hypot(X - cx, Y - cy)
    th = np.arctan2(Y - cy, X - cx)
    return np.stack([np.tanh(r) * np.cos(th - r), np.tanh(r) * np.sin(th - r)], axis=-1)


def heat_initial(grid: Grid, system: HeatStar) -> np.ndarray:
    X, Y = grid.mesh()
    u = np.sin(np.pi * X) * np.sin(np.pi * Y) * system.mask(grid).inside
    return u[..., None]


def initial_condition(system: PdeSystem, grid: Grid) -> GridField:
    if isinstance(system, Advection2D):
        return advection_exact(grid, 0.0, system.A, system.radius)
    if isinstance(system, LambdaOmega):
        return GridField(grid, lambda_omega_initial(grid))
    if isinstance(system, HeatStar):
        return GridField(grid, heat_initial(grid, system))
    raise ValueError(f"no preset initial condition for {system.name}")


# ------------------------------------------------------------------- RK4 MOL
def spectral_rk4_solve(system: PdeSystem, u0: GridField, dt: float, steps: int, inner_dt: float | None = None,
                       t0: float | None = None) -> Trajectory:
    """Classical RK4 on du/dt = N[u](t) with snapshots every ``dt``.

    The inner step defaults to dt/20 and is shrunk so that it divides dt.
    """
    inner_dt = dt / 20 if inner_dt is None else inner_dt
    n_inner = max(1, int(np.ceil(dt / inner_dt - 1e-9)))
    h = dt / n_inner
    grid = u0.grid
    t = u0.t if t0 is None else t0

    def f(u, s):
        return system.rhs(T.Tensor(u[None]), s, grid).data[0]

    u = u0.values.copy()
    out = [GridField(grid, u.copy(), t)]
    with T.no_grad():
        for n in range(steps):
            for _ in range(n_inner):
                k1 = f(u, t)
                k2 = f(u + 0.5 * h * k1, t + 0.5 * h)
                k3 = f(u + 0.5 * h * k2, t + 0.5 * h)
                k4 = f(u + h * k3, t + h)
                u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                t = t + h
            if not np.all(np.isfinite(u)):
                raise NumericalAbort(f"reference solve of {system.name} became non-finite at snapshot {n + 1}")
            t = (u0.t if t0 is None else t0) + (n + 1) * dt
            out.append(GridField(grid, u.copy(), t))
    return Trajectory(system.name, dt, grid, out, provenance=f"numeric(rk4, inner_dt={h!r})")


def reference_trajectory(system: PdeSystem, grid: Grid, dt: float, n_snapshots: int, t0: float = 0.0,
                         inner_dt: float | None = None) -> Trajectory:
    """Snapshots u(t0), ..., u(t0 + (n-1) dt); analytic where available."""
    if isinstance(system, Advection2D):
        fields = [advection_exact(grid, t0 + i * dt, system.A, system.radius) for i in range(n_snapshots)]
        return Trajectory(system.name, dt, grid, fields, "analytic")
    u0 = initial_condition(system, grid)
    u0.t = t0
    return spectral_rk4_solve(system, u0, dt, n_snapshots - 1, inner_dt)


def generate_dataset(system_name: str, dt: float, n_snapshots: int, n: int, out_dir: str | Path, seed: int = 0,
                     inner_dt: float | None = None) -> Trajectory:
    """Write snapshots as grid files plus a plain-text manifest.

    The presets are deterministic; ``seed`` is recorded for provenance.
    """
    from .io import write_grid_file, write_manifest

    system = get_system(system_name)
    grid = system.grid(n)
    traj = reference_trajectory(system, grid, dt, n_snapshots, inner_dt=inner_dt)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for i, f in enumerate(traj.fields):
            write_grid_file(out / f"u_{i:05d}.pmno", f.values)
        write_manifest(
            out / "manifest.txt",
            {
                "system": system.name,
                "dt": dt,
                "grid": f"{grid.shape[0]}x{grid.shape[1]}",
                "lower": f"{grid.lower[0]!r},{grid.lower[1]!r}",
                "length": f"{grid.length[0]!r},{grid.length[1]!r}",
                "count": len(traj),
                "seed": seed,
                "provenance": traj.provenance,
            },
        )
    except OSError as exc:
        raise OSError(f"cannot write dataset to {out}: {exc}") from exc
    return traj


def load_dataset(path: str | Path) -> Trajectory:
    from .io import read_grid_file, read_manifest

    path = Path(path)
    man = read_manifest(path / "manifest.txt")
    system = get_system(man["system"])
    H, W = (int(x) for x in man["grid"].split("x"))
    grid = system.grid((H, W))
    dt = float(man["dt"])
    fields = []
    for i in range(int(man["count"])):
        fields.append(GridField(grid, read_grid_file(path / f"u_{i:05d}.pmno"), t=i * dt))
    return Trajectory(system.name, dt, grid, fields, man.get("provenance", "analytic"), meta=man)
