"""Right-hand sides N[u] of the in-scope systems and their spatial operators.

Grid tensors use the layout (B, H, W, C). Point "jets" carry a value and its
first and pure second coordinate derivatives at N scattered points, layout
(B, 5, N, C) with components ordered as ``JET_COMPONENTS``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError, ShapeError
from .fft import spectral_derivative
from .grid import Grid
from .tensor import Tensor

JET_COMPONENTS = ("u", "ux", "uy", "uxx", "uyy")
U, UX, UY, UXX, UYY = range(5)


# --------------------------------------------------------------- derivatives
def _central_fd(f: Tensor, axis: int, order: int, h: float, periodic: bool) -> Tensor:
    if periodic:
        fp = T.roll(f, -1, axis)
        fm = T.roll(f, 1, axis)
        if order == 1:
            return (fp - fm) * (0.5 / h)
        return (fp - 2.0 * f + fm) * (1.0 / h**2)

    n = f.shape[axis]
    if n < 4:
        raise ShapeError(f"one-sided stencils need at least 4 nodes, got {n}")

    def sl(lo, hi=None):
        idx = [slice(None)] * f.ndim
        idx[axis] = slice(lo, hi)
        return f[tuple(idx)]

    if order == 1:
        interior = (sl(2) - sl(0, -2)) * (0.5 / h)
        first = (-3.0 * sl(0, 1) + 4.0 * sl(1, 2) - sl(2, 3)) * (0.5 / h)
        last = (3.0 * sl(-1) - 4.0 * sl(-2, -1) + sl(-3, -2)) * (0.5 / h)
    else:
        interior = (sl(2) - 2.0 * sl(1, -1) + sl(0, -2)) * (1.0 / h**2)
        first = (2.0 * sl(0, 1) - 5.0 * sl(1, 2) + 4.0 * sl(2, 3) - sl(3, 4)) * (1.0 / h**2)
        last = (2.0 * sl(-1) - 5.0 * sl(-2, -1) + 4.0 * sl(-3, -2) - sl(-4, -3)) * (1.0 / h**2)
    return T.concat([first, interior, last], axis=axis)


def spatial_derivative(f: Tensor, axis: int, order: int, scheme: str, grid: Grid) -> Tensor:
    """Derivative of a (B, H, W, C) field along spatial ``axis`` (0 = x, 1 = y).

    ``spectral`` multiplies by (ik)^order and needs a periodic grid;
    ``central-fd`` uses second-order stencils, one-sided at the edges of
    non-periodic grids.
    """
    f = T.as_tensor(f)
    if axis not in (0, 1):
        raise ConfigError(f"spatial axis must be 0 or 1, got {axis}")
    if scheme == "spectral":
        if not grid.periodic:
            raise ConfigError("spectral derivatives need a periodic grid")
        return spectral_derivative(f, axis + 1, order, grid.length[axis])
    if scheme == "central-fd":
        if order not in (1, 2):
            raise ConfigError(f"central-fd supports order 1 or 2, got {order}")
        return _central_fd(f, axis + 1, order, grid.spacing[axis], grid.periodic)
    raise ConfigError(f"unknown derivative scheme {scheme!r}")


def laplacian(f: Tensor, scheme: str, grid: Grid) -> Tensor:
    return spatial_derivative(f, 0, 2, scheme, grid) + spatial_derivative(f, 1, 2, scheme, grid)


def masked_laplacian(f: Tensor, inside: np.ndarray, grid: Grid) -> Tensor:
    """Five-point Laplacian with every node outside the mask read as zero."""
    m = inside[None, :, :, None].astype(np.float64)
    fm = f * m
    p = T.pad(fm, ((0, 0), (1, 1), (1, 1), (0, 0)))
    hx, hy = grid.spacing
    lap_x = (p[:, 2:, 1:-1, :] + p[:, :-2, 1:-1, :] - 2.0 * fm) * (1.0 / hx**2)
    lap_y = (p[:, 1:-1, 2:, :] + p[:, 1:-1, :-2, :] - 2.0 * fm) * (1.0 / hy**2)
    return (lap_x + lap_y) * m


# ---------------------------------------------------------------- star mask
@dataclass(frozen=True)
class DomainMask:
    grid: Grid
    inside: np.ndarray
    boundary_band: np.ndarray

    @property
    def count(self) -> int:
        return int(self.inside.sum())


def star_radius(theta, R: float):
    theta = np.asarray(theta, dtype=np.float64)
    return R * (1.0 + 0.5 * np.sin(5.0 * theta)) / (1.0 + 0.5 * np.abs(np.sin(2.5 * theta)))


def star_polar(x, y, x0: float, y0: float):
    dx = np.asarray(x, dtype=np.float64) - x0
    dy = np.asarray(y, dtype=np.float64) - y0
    r = np.hypot(dx, dy)
    theta = np.mod(np.arctan2(dy, dx), 2.0 * np.pi)
    return r, theta


def star_inside(x, y, x0: float = 0.5, y0: float = 0.5, R: float = 0.38):
    r, theta = star_polar(x, y, x0, y0)
    return r <= star_radius(theta, R)


def star_distance(x, y, x0: float = 0.5, y0: float = 0.5, R: float = 0.38):
    """``max(0, 1 - r / rho(theta))``: 1 at the center, 0 on and outside the star."""
    r, theta = star_polar(x, y, x0, y0)
    return np.maximum(0.0, 1.0 - r / star_radius(theta, R))


def star_mask(grid: Grid, x0: float = 0.5, y0: float = 0.5, R: float = 0.38) -> DomainMask:
    X, Y = grid.mesh()
    inside = star_inside(X, Y, x0, y0, R)
    # Nodes whose 4-neighbourhood straddles the inside/outside transition.
    padded = np.pad(inside, 1, mode="edge")
    nb = [padded[2:, 1:-1], padded[:-2, 1:-1], padded[1:-1, 2:], padded[1:-1, :-2]]
    band = np.zeros_like(inside)
    for n in nb:
        band |= n != inside
    return DomainMask(grid=grid, inside=inside, boundary_band=band)


# ------------------------------------------------------------------ systems
def advection_velocity(t, radius: float = 0.25, omega: float = 2.0 * np.pi):
    """Peak position v(t) of the transported Gaussian."""
    t = np.asarray(t, dtype=np.float64)
    return radius * np.cos(omega * t), radius * np.sin(omega * t)


def advection_coefficients(t, radius: float = 0.25, omega: float = 2.0 * np.pi):
    """a(t) = -dv/dt."""
    t = np.asarray(t, dtype=np.float64)
    return radius * omega * np.sin(omega * t), -radius * omega * np.cos(omega * t)


def advection_rhs(u: Tensor, t, grid: Grid, scheme: str = "spectral") -> Tensor:
    """N[u] = a1(t) u_x + a2(t) u_y for a (B, H, W, 1) field; ``t`` scalar or (B,)."""
    u = T.as_tensor(u)
    a1, a2 = advection_coefficients(np.broadcast_to(np.asarray(t, dtype=np.float64), (u.shape[0],)))
    ux = spatial_derivative(u, 0, 1, scheme, grid)
    uy = spatial_derivative(u, 1, 1, scheme, grid)
    return ux * a1[:, None, None, None] + uy * a2[:, None, None, None]


def lambda_omega_reaction(u: Tensor, v: Tensor, lam: float, omega: float) -> tuple[Tensor, Tensor]:
    r2 = u * u + v * v
    return lam * u - omega * v - r2 * u, omega * u + lam * v - r2 * v


def lambda_omega_rhs(
    uv: Tensor, grid: Grid, D: float = 0.001, lam: float = 0.98, omega: float = 1.0, scheme: str = "spectral"
) -> Tensor:
    uv = T.as_tensor(uv)
    if uv.shape[-1] != 2:
        raise ShapeError(f"lambda-omega system has 2 channels, got {uv.shape[-1]}")
    lap = laplacian(uv, scheme, grid)
    u, v = uv[..., 0:1], uv[..., 1:2]
    fu, fv = lambda_omega_reaction(u, v, lam, omega)
    return lap * D + T.concat([fu, fv], axis=-1)


def heat_rhs(u: Tensor, mask: DomainMask, alpha: float = 0.001) -> Tensor:
    return masked_laplacian(T.as_tensor(u), mask.inside, mask.grid) * alpha


class PdeSystem:
    """Residual evaluator N, boundary treatment, and domain of one system."""

    name = "custom"
    channels = 1
    bc_kind = "periodic"
    lower = (0.0, 0.0)
    length = (1.0, 1.0)
    scheme = "spectral"

    def grid(self, n: int | tuple[int, int]) -> Grid:
        shape = (n, n) if isinstance(n, int) else tuple(n)
        return Grid(shape, self.lower, self.length, periodic=self.bc_kind == "periodic")

    def rhs(self, u: Tensor, t, grid: Grid) -> Tensor:
        raise NotImplementedError

    def rhs_jet(self, jet: Tensor, t, points: np.ndarray) -> Tensor:
        raise NotImplementedError(f"{self.name} has no pointwise residual")

    def mask(self, grid: Grid) -> DomainMask | None:
        return None

    def hard_bc(self):
        """(g, p) boundary functions for a Dirichlet wrap, or None."""
        return None


class Advection2D(PdeSystem):
    name = "advection2d"
    channels = 1
    bc_kind = "periodic"

    def __init__(self, l: float = 0.6, A: float = 100.0, radius: float = 0.25):
        self.l, self.A, self.radius = l, A, radius
        self.lower = (-l, -l)
        self.length = (2 * l, 2 * l)

    def rhs(self, u, t, grid):
        return advection_rhs(u, t, grid, self.scheme)

    def rhs_jet(self, jet, t, points):
        t = np.broadcast_to(np.asarray(t, dtype=np.float64), (jet.shape[0],))
        a1, a2 = advection_coefficients(t, self.radius)
        return jet[:, UX] * a1[:, None, None] + jet[:, UY] * a2[:, None, None]


class LambdaOmega(PdeSystem):
    name = "lambda_omega_rd"
    channels = 2
    bc_kind = "periodic"
    lower = (0.0, 0.0)
    length = (10.0, 10.0)

    def __init__(self, D: float = 0.001, lam: float = 0.98, omega: float = 1.0):
        self.D, self.lam, self.omega = D, lam, omega

    def rhs(self, u, t, grid):
        return lambda_omega_rhs(u, grid, self.D, self.lam, self.omega, self.scheme)

    def rhs_jet(self, jet, t, points):
        val = jet[:, U]
        u, v = val[..., 0:1], val[..., 1:2]
        fu, fv = lambda_omega_reaction(u, v, self.lam, self.omega)
        return (jet[:, UXX] + jet[:, UYY]) * self.D + T.concat([fu, fv], axis=-1)


class HeatStar(PdeSystem):
    name = "heat_star"
    channels = 1
    bc_kind = "dirichlet-mask"
    scheme = "central-fd"

    def __init__(self, alpha: float = 0.001, x0: float = 0.5, y0: float = 0.5, R: float = 0.38):
        self.alpha, self.x0, self.y0, self.R = alpha, x0, y0, R

    def mask(self, grid):
        return star_mask(grid, self.x0, self.y0, self.R)

    def rhs(self, u, t, grid):
        return heat_rhs(u, self.mask(grid), self.alpha)

    def rhs_jet(self, jet, t, points):
        inside = star_inside(points[:, 0], points[:, 1], self.x0, self.y0, self.R).astype(np.float64)
        return (jet[:, UXX] + jet[:, UYY]) * (self.alpha * inside[None, :, None])

    def hard_bc(self):
        def g(points):
            return np.zeros(len(points))

        def p(points):
            return star_distance(points[:, 0], points[:, 1], self.x0, self.y0, self.R)

        return g, p


SYSTEMS = {"advection2d": Advection2D, "lambda_omega_rd": LambdaOmega, "heat_star": HeatStar}


def get_system(name: str, **params) -> PdeSystem:
    try:
        cls = SYSTEMS[name]
    except KeyError:
        raise ConfigError(f"unknown system {name!r}; expected one of {sorted(SYSTEMS)}") from None
    return cls(**params)
