"""DeepONet backbone: branch net on sensor values, trunk net on coordinates."""
from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..errors import ConfigError, ShapeError
from ..grid import Grid
from ..tensor import Tensor
from .boundary import fourier_feature_jet
from .layers import DenseStack, xavier_uniform


def deeponet_combine(branch_out, trunk_out, b0) -> Tensor:
    """G(u)(y) = (1/p) sum_i b_i(u) t_i(y) + b0.

    branch_out: (B, D, p); trunk_out: (N, p); b0: (D,). Returns (B, N, D).
    """
    branch_out, trunk_out = T.as_tensor(branch_out), T.as_tensor(trunk_out)
    p = branch_out.shape[-1]
    if trunk_out.shape[-1] != p:
        raise ShapeError(f"branch width {p} differs from trunk width {trunk_out.shape[-1]}")
    return T.einsum("bdp,np->bnd", branch_out, trunk_out) * (1.0 / p) + b0


def _coordinate_jet(points: np.ndarray) -> np.ndarray:
    N = len(points)
    jet = np.zeros((5, N, 2))
    jet[0] = points
    jet[1, :, 0] = 1.0
    jet[2, :, 1] = 1.0
    return jet


class DeepOnet:
    """Branch (dense or conv) and trunk (dense) nets with a shared width p.

    For D output channels the branch emits D groups of p coefficients and the
    trunk is shared. The trunk sees raw coordinates or the periodic Fourier
    product features; the latter make every output exactly periodic.
    """

    def __init__(
        self,
        sensor_grid: Grid,
        channels: int = 1,
        p: int = 100,
        branch: str = "mlp",
        branch_hidden=(100, 100),
        trunk_hidden=(100, 100),
        activation: str = "tanh",
        trunk_features: str = "raw",
        fourier_modes: tuple[int, int] = (7, 7),
        conv_channels: int = 1,
        kernel: int = 5,
        seed: int = 0,
    ):
        rng = np.random.default_rng(seed)
        self.sensor_grid = sensor_grid
        self.channels = channels
        self.p = p
        self.branch_kind = branch
        self.activation = activation
        self.trunk_features = trunk_features
        self.fourier_modes = tuple(fourier_modes)
        H, W = sensor_grid.shape
        if branch == "mlp":
            self.branch_net = DenseStack([H * W * channels, *branch_hidden, channels * p], activation, rng, "branch")
            self.conv_w = self.conv_b = None
        elif branch == "cnn":
            if kernel % 2 == 0:
                raise ConfigError(f"conv kernel must be odd, got {kernel}")
            fan_in, fan_out = channels * kernel * kernel, conv_channels * kernel * kernel
            self.conv_w = Tensor(
                xavier_uniform(rng, fan_in, fan_out, (conv_channels, channels, kernel, kernel)),
                requires_grad=True,
                name="branch.conv.w",
            )
            self.conv_b = Tensor(np.zeros(conv_channels), requires_grad=True, name="branch.conv.b")
            self.branch_net = DenseStack([conv_channels * H * W, channels * p], "identity", rng, "branch")
        else:
            raise ConfigError(f"unknown branch kind {branch!r}")
        if trunk_features == "raw":
            d_in = 2
        elif trunk_features == "fourier":
            d_in = 4 * self.fourier_modes[0] * self.fourier_modes[1]
        else:
            raise ConfigError(f"unknown trunk feature map {trunk_features!r}")
        self.trunk_net = DenseStack([d_in, *trunk_hidden, p], activation, rng, "trunk")
        self.b0 = Tensor(np.zeros(channels), requires_grad=True, name="b0")
        self._trunk_cache: dict = {}

    def named_parameters(self) -> dict[str, Tensor]:
        out = {}
        if self.conv_w is not None:
            out[self.conv_w.name] = self.conv_w
            out[self.conv_b.name] = self.conv_b
        out.update(self.branch_net.named_parameters())
        out.update(self.trunk_net.named_parameters())
        out[self.b0.name] = self.b0
        return out

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    # -------------------------------------------------------------- branch
    def sensors(self, fields: Tensor, grid: Grid) -> Tensor:
        """Sensor values: the fields at the nodes of the training grid."""
        if grid.shape == self.sensor_grid.shape:
            return fields
        s0, s1 = grid.stride_to(self.sensor_grid)
        return fields[:, ::s0, ::s1, :]

    def branch(self, sensors: Tensor) -> Tensor:
        sensors = T.as_tensor(sensors)
        if sensors.shape[1:] != self.sensor_grid.shape + (self.channels,):
            raise ShapeError(
                f"branch expects sensors {self.sensor_grid.shape + (self.channels,)}, got {sensors.shape[1:]}"
            )
        B = sensors.shape[0]
        if self.branch_kind == "mlp":
            out = self.branch_net(T.reshape(sensors, (B, -1)))
        else:
            img = T.transpose(sensors, (0, 3, 1, 2))
            feat = T.activation(self.activation)(T.conv2d(img, self.conv_w, self.conv_b))
            out = self.branch_net(T.reshape(feat, (B, -1)))
        return T.reshape(out, (B, self.channels, self.p))

    # --------------------------------------------------------------- trunk
    def _trunk_input_jet(self, points: np.ndarray) -> np.ndarray:
        if self.trunk_features == "raw":
            return _coordinate_jet(points)
        g = self.sensor_grid
        scale = (2 * np.pi / g.length[0], 2 * np.pi / g.length[1])
        shifted = points - np.asarray(g.lower)
        return fourier_feature_jet(shifted, *self.fourier_modes, scale=scale)

    def trunk(self, points: np.ndarray) -> Tensor:
        return self.trunk_net(self._trunk_input_jet(points)[0])

    def trunk_jet(self, points: np.ndarray) -> Tensor:
        return self.trunk_net.jet(self._trunk_input_jet(points))

    # ------------------------------------------------------------- forward
    def forward(self, sensors, points: np.ndarray) -> Tensor:
        """Output (B, N, D) at query ``points`` (N, 2)."""
        return deeponet_combine(self.branch(sensors), self.trunk(points), self.b0)

    def forward_jet(self, sensors, points: np.ndarray) -> Tensor:
        """Output jets (B, 5, N, D) at ``points``."""
        b = self.branch(sensors)
        tj = self.trunk_jet(points)
        e0 = np.zeros((1, 5, 1, 1))
        e0[0, 0] = 1.0
        return T.einsum("bdp,jnp->bjnd", b, tj) * (1.0 / self.p) + T.reshape(self.b0, (1, 1, 1, -1)) * e0

    def apply(self, fields: Tensor, grid: Grid, points: np.ndarray | None = None):
        """Backbone contract: values on ``grid`` nodes and optional jets at ``points``."""
        b = self.branch(self.sensors(fields, grid))
        B = fields.shape[0]
        t_grid = self.trunk(grid.points())
        vals = deeponet_combine(b, t_grid, self.b0)
        vals = T.reshape(vals, (B,) + grid.shape + (self.channels,))
        jet = None
        if points is not None:
            tj = self.trunk_jet(points)
            e0 = np.zeros((1, 5, 1, 1))
            e0[0, 0] = 1.0
            jet = T.einsum("bdp,jnp->bjnd", b, tj) * (1.0 / self.p) + T.reshape(self.b0, (1, 1, 1, -1)) * e0
        return vals, jet

    def config(self) -> dict:
        return {
            "kind": "deeponet",
            "sensor_shape": list(self.sensor_grid.shape),
            "channels": self.channels,
            "p": self.p,
            "branch": self.branch_kind,
            "activation": self.activation,
            "trunk_features": self.trunk_features,
            "fourier_modes": list(self.fourier_modes),
        }


def deeponet_forward(model: DeepOnet, u_sensors, query_points: np.ndarray) -> Tensor:
    return model.forward(u_sensors, query_points)
