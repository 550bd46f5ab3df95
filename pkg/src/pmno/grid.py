"""Uniform rectangular grids and fields sampled on them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class Grid:
    """Cell-vertex grid on ``[lower, lower + length)`` per axis.

    Node ``i`` sits at ``lower + i * length / n``; the right end is excluded,
    so grids of extent n and 2n share every node of the coarser one.
    """

    shape: tuple[int, int]
    lower: tuple[float, float] = (0.0, 0.0)
    length: tuple[float, float] = (1.0, 1.0)
    periodic: bool = True

    @property
    def spacing(self) -> tuple[float, float]:
        return (self.length[0] / self.shape[0], self.length[1] / self.shape[1])

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        hx, hy = self.spacing
        x = self.lower[0] + hx * np.arange(self.shape[0])
        y = self.lower[1] + hy * np.arange(self.shape[1])
        return x, y

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.axes()
        return np.meshgrid(x, y, indexing="ij")

    def points(self) -> np.ndarray:
        X, Y = self.mesh()
        return np.stack([X.ravel(), Y.ravel()], axis=-1)

    def with_shape(self, shape: tuple[int, int]) -> Grid:
        return Grid(tuple(shape), self.lower, self.length, self.periodic)

    def refine(self, factor: int) -> Grid:
        return self.with_shape((self.shape[0] * factor, self.shape[1] * factor))

    def stride_to(self, coarse: Grid) -> tuple[int, int]:
        """Integer stride such that ``self[::s0, ::s1]`` are the nodes of ``coarse``."""
        if coarse.lower != self.lower or coarse.length != self.length:
            raise ShapeError("grids cover different domains")
        s0, r0 = divmod(self.shape[0], coarse.shape[0])
        s1, r1 = divmod(self.shape[1], coarse.shape[1])
        if r0 or r1 or s0 < 1 or s1 < 1:
            raise ShapeError(f"grid {self.shape} does not contain the nodes of {coarse.shape}")
        return s0, s1


@dataclass
class GridField:
    """Multi-channel field ``values[ix, iy, c]`` at time ``t``."""

    grid: Grid
    values: np.ndarray
    t: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim == 2:
            self.values = self.values[..., None]
        if self.values.shape[:2] != self.grid.shape:
            raise ShapeError(f"field extents {self.values.shape[:2]} do not match grid {self.grid.shape}")

    @property
    def channels(self) -> int:
        return self.values.shape[2]
