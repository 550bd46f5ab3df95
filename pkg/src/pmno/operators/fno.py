"""Fourier neural operator backbone."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .. import tensor as T
from ..errors import ConfigError, ShapeError
from ..fft import spectral_conv2d
from ..grid import Grid
from ..tensor import Tensor
from .layers import xavier_uniform


@lru_cache(maxsize=16)
def coordinate_channels(grid: Grid) -> np.ndarray:
    """(H, W, 4): sin/cos of 2*pi*(x - lower)/length per axis.

    Periodic, band-limited encoding of position; raw coordinates would add a
    sawtooth jump at the wrap and break agreement across resolutions.
    """
    X, Y = grid.mesh()
    ax = 2 * np.pi * (X - grid.lower[0]) / grid.length[0]
    ay = 2 * np.pi * (Y - grid.lower[1]) / grid.length[1]
    c = np.stack([np.sin(ax), np.cos(ax), np.sin(ay), np.cos(ay)], axis=-1)
    c.flags.writeable = False
    return c


COORD_CHANNELS = 4


class Fno:
    """lift -> [spectral conv + pointwise linear, activation] x layers -> project.

    The activation is skipped after the last Fourier layer; the projection is
    a two-layer pointwise map with the activation in between.
    """

    def __init__(
        self,
        channels: int = 1,
        width: int = 32,
        modes: int | tuple[int, int] = 8,
        layers: int = 3,
        proj_hidden: int | None = None,
        activation: str = "gelu",
        coords: bool = True,
        seed: int = 0,
    ):
        T.activation(activation)
        rng = np.random.default_rng(seed)
        self.channels = channels
        self.width = width
        self.modes = (modes, modes) if isinstance(modes, int) else tuple(modes)
        self.n_layers = layers
        self.activation = activation
        self.coords = coords
        self.proj_hidden = proj_hidden or 2 * width
        cin = channels + (COORD_CHANNELS if coords else 0)
        self.in_channels = cin
        m1, m2 = self.modes
        self.params: dict[str, Tensor] = {}

        def dense(name, a, b):
            self.params[f"{name}.w"] = Tensor(xavier_uniform(rng, a, b), requires_grad=True, name=f"{name}.w")
            self.params[f"{name}.b"] = Tensor(np.zeros(b), requires_grad=True, name=f"{name}.b")

        dense("lift", cin, width)
        scale = 1.0 / (width * width)
        for i in range(layers):
            shape = (2, m1, m2, width, width)
            self.params[f"layer{i}.r_re"] = Tensor(scale * rng.random(shape), requires_grad=True, name=f"layer{i}.r_re")
            self.params[f"layer{i}.r_im"] = Tensor(scale * rng.random(shape), requires_grad=True, name=f"layer{i}.r_im")
            dense(f"layer{i}.pw", width, width)
        dense("proj1", width, self.proj_hidden)
        dense("proj2", self.proj_hidden, channels)

    def named_parameters(self) -> dict[str, Tensor]:
        return dict(self.params)

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def with_coordinates(self, fields, grid: Grid) -> Tensor:
        fields = T.as_tensor(fields)
        if not self.coords:
            return fields
        B = fields.shape[0]
        c = np.broadcast_to(coordinate_channels(grid)[None], (B,) + grid.shape + (COORD_CHANNELS,))
        return T.concat([fields, T.Tensor(c)], axis=-1)

    def apply(self, fields: Tensor, grid: Grid, points=None):
        if points is not None:
            raise ConfigError("the FNO backbone evaluates on grid nodes only")
        if fields.shape[1:3] != grid.shape:
            raise ShapeError(f"field extents {fields.shape[1:3]} do not match grid {grid.shape}")
        return fno_forward(self, self.with_coordinates(fields, grid)), None

    def __call__(self, fields, grid: Grid) -> Tensor:
        return self.apply(T.as_tensor(fields), grid)[0]

    def config(self) -> dict:
        return {
            "kind": "fno",
            "channels": self.channels,
            "width": self.width,
            "modes": list(self.modes),
            "layers": self.n_layers,
            "proj_hidden": self.proj_hidden,
            "activation": self.activation,
            "coords": self.coords,
        }


def fno_forward(model: Fno, inp) -> Tensor:
    """Apply the FNO to a (B, H, W, in_channels) input whose trailing
    channels already hold the coordinate encoding."""
    inp = T.as_tensor(inp)
    if inp.ndim != 4 or inp.shape[-1] != model.in_channels:
        raise ShapeError(f"FNO expects (B, H, W, {model.in_channels}) input, got {inp.shape}")
    P = model.params
    act = T.activation(model.activation)
    v = T.linear(inp, P["lift.w"], P["lift.b"])
    for i in range(model.n_layers):
        k = spectral_conv2d(v, P[f"layer{i}.r_re"], P[f"layer{i}.r_im"])
        v = k + T.linear(v, P[f"layer{i}.pw.w"], P[f"layer{i}.pw.b"])
        if i < model.n_layers - 1:
            v = act(v)
    v = act(T.linear(v, P["proj1.w"], P["proj1.b"]))
    return T.linear(v, P["proj2.w"], P["proj2.b"])
