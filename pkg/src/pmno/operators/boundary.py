"""Hard-constraint Dirichlet wrapping and periodic trunk features."""
from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..errors import ConfigError
from ..grid import Grid


def hard_bc_wrap(raw, g, p):
    """``g + raw * p``. Works on arrays or tensors; ``g`` and ``p`` are
    values of the boundary data and of a function vanishing on the boundary,
    broadcastable against ``raw``."""
    if isinstance(raw, T.Tensor):
        return T.add(T.mul(raw, p), g)
    return np.asarray(g) + np.asarray(raw) * np.asarray(p)


def fourier_features(points, M_x: int, M_y: int) -> np.ndarray:
    """Blocks cos*cos, cos*sin, sin*cos, sin*sin over frequency pairs
    (1..M_x) x (1..M_y). ``points`` are angles already scaled to period 2*pi."""
    if M_x < 1 or M_y < 1:
        raise ConfigError(f"Fourier feature counts must be positive, got ({M_x}, {M_y})")
    return fourier_feature_jet(points, M_x, M_y, (1.0, 1.0))[0]


def fourier_feature_jet(points, M_x: int, M_y: int, scale=(1.0, 1.0)) -> np.ndarray:
    """Features and their coordinate derivatives, shape (5, N, 4*M_x*M_y).

    The features are evaluated at ``scale * points``; derivatives are taken
    with respect to the unscaled coordinates.
    """
    if M_x < 1 or M_y < 1:
        raise ConfigError(f"Fourier feature counts must be positive, got ({M_x}, {M_y})")
    pts = np.asarray(points, dtype=np.float64)
    sx, sy = scale
    m = np.arange(1, M_x + 1, dtype=np.float64)
    n = np.arange(1, M_y + 1, dtype=np.float64)
    ax = sx * pts[:, 0:1] * m  # (N, Mx)
    ay = sy * pts[:, 1:2] * n  # (N, My)
    cx, sxn = np.cos(ax), np.sin(ax)
    cy, syn = np.cos(ay), np.sin(ay)
    kx = (sx * m)[None, :, None]
    ky = (sy * n)[None, None, :]

    def outer(a, b):
        return a[:, :, None] * b[:, None, :]

    # value, d/dx, d/dy, d2/dx2, d2/dy2 of each product block
    blocks = []
    for fx, dfx in ((cx, -sxn), (sxn, cx)):
        for fy, dfy in ((cy, -syn), (syn, cy)):
            v = outer(fx, fy)
            blocks.append(
                np.stack([v, kx * outer(dfx, fy), ky * outer(fx, dfy), -(kx**2) * v, -(ky**2) * v], axis=0)
            )
    N = pts.shape[0]
    return np.concatenate([b.reshape(5, N, -1) for b in blocks], axis=-1)


class HardDirichlet:
    """Dirichlet data ``g`` and a distance-like ``p`` (zero on the boundary),
    evaluated on grids or at scattered points."""

    def __init__(self, g_fn, p_fn, fd_step: float = 1e-4):
        self.g_fn = g_fn
        self.p_fn = p_fn
        self.fd_step = fd_step
        self._cache: dict = {}

    def on_grid(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        key = ("grid", grid)
        if key not in self._cache:
            pts = grid.points()
            shape = (1,) + grid.shape + (1,)
            self._cache[key] = (self.g_fn(pts).reshape(shape), self.p_fn(pts).reshape(shape))
        return self._cache[key]

    def jets(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(5, N, 1) jets of g and p by central differences of the closed forms."""
        key = ("pts", points.tobytes())
        if key not in self._cache:
            self._cache[key] = (self._fd_jet(self.g_fn, points), self._fd_jet(self.p_fn, points))
        return self._cache[key]

    def _fd_jet(self, fn, pts: np.ndarray) -> np.ndarray:
        h = self.fd_step
        ex = np.array([h, 0.0])
        ey = np.array([0.0, h])
        f0 = fn(pts)
        fxp, fxm = fn(pts + ex), fn(pts - ex)
        fyp, fym = fn(pts + ey), fn(pts - ey)
        jet = np.stack(
            [f0, (fxp - fxm) / (2 * h), (fyp - fym) / (2 * h), (fxp - 2 * f0 + fxm) / h**2, (fyp - 2 * f0 + fym) / h**2]
        )
        return jet[:, :, None]
