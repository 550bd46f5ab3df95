"""Multi-step predictor: u_{i+k} = sum_j [lam_j u_{i+j} + dt delta_j G(u_{i+j})]."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError, ContractError, ShapeError
from .grid import Grid, GridField
from .operators.boundary import HardDirichlet
from .pde import UX, UXX, UY, UYY
from .tensor import Tensor


@dataclass
class State:
    """One time level: values on grid nodes (B, H, W, C) and, for
    point-wise backbones, jets at sample points (B, 5, N, C)."""

    values: Tensor
    jet: Tensor | None = None
    t: float = 0.0

    def field(self, grid: Grid, index: int = 0) -> GridField:
        return GridField(grid, self.values.data[index].copy(), self.t)


class HistoryWindow:
    """Fixed-length deque of the k most recent states, oldest first."""

    def __init__(self, states, grid: Grid, points: np.ndarray | None = None):
        states = list(states)
        if not states:
            raise ContractError("history window needs at least one state")
        self.k = len(states)
        self.grid = grid
        self.points = points
        self._q: deque[State] = deque(maxlen=self.k)
        for s in states:
            self._check(s)
            self._q.append(s)

    @classmethod
    def from_fields(cls, fields, points=None, jets=None) -> HistoryWindow:
        fields = list(fields)
        grid = fields[0].grid
        states = []
        for i, f in enumerate(fields):
            if f.grid != grid:
                raise ShapeError("history fields live on different grids")
            jet = None if jets is None else T.Tensor(np.asarray(jets[i])[None])
            states.append(State(T.Tensor(f.values[None]), jet, f.t))
        return cls(states, grid, points)

    def _check(self, s: State) -> None:
        if s.values.shape[1:3] != self.grid.shape:
            raise ShapeError(f"state extents {s.values.shape[1:3]} do not match grid {self.grid.shape}")
        if self._q and s.values.shape != self._q[0].values.shape:
            raise ShapeError("history states differ in layout")

    def push(self, s: State) -> None:
        self._check(s)
        self._q.append(s)

    def __len__(self) -> int:
        return len(self._q)

    def __iter__(self):
        return iter(self._q)

    def __getitem__(self, i) -> State:
        return self._q[i]

    def states(self) -> list[State]:
        return list(self._q)

    def copy(self) -> HistoryWindow:
        return HistoryWindow(self.states(), self.grid, self.points)


def _product_jet(raw: Tensor, g: np.ndarray, p: np.ndarray) -> Tensor:
    """Jets of g + raw * p by the product rule; raw (B, 5, N, C), g/p (5, N, 1)."""
    r = [raw[:, j] for j in range(5)]
    u = r[0] * p[0] + g[0]
    ux = r[UX] * p[0] + r[0] * p[UX] + g[UX]
    uy = r[UY] * p[0] + r[0] * p[UY] + g[UY]
    uxx = r[UXX] * p[0] + 2.0 * (r[UX] * p[UX]) + r[0] * p[UXX] + g[UXX]
    uyy = r[UYY] * p[0] + 2.0 * (r[UY] * p[UY]) + r[0] * p[UYY] + g[UYY]
    return T.stack([u, ux, uy, uxx, uyy], axis=1)


class PmnoPredictor:
    """Predictor P with one shared backbone G and learnable mixing weights."""

    def __init__(self, backbone, k: int, dt: float, bc: HardDirichlet | None = None, seed: int = 0):
        if not isinstance(k, int) or k < 1:
            raise ConfigError(f"k must be a positive integer, got {k!r}")
        rng = np.random.default_rng(seed)
        lam = np.zeros(k)
        lam[-1] = 1.0
        self.k = k
        self.dt = float(dt)
        self.backbone = backbone
        self.bc = bc
        self.lam = Tensor(lam, requires_grad=True, name="lambda")
        self.delta = Tensor(rng.uniform(-0.01, 0.01, k), requires_grad=True, name="delta")
        self.backbone_calls = 0

    def named_parameters(self) -> dict[str, Tensor]:
        out = {"lambda": self.lam, "delta": self.delta}
        out.update({f"backbone.{n}": p for n, p in self.backbone.named_parameters().items()})
        return out

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    # --------------------------------------------------------------- pieces
    def backbone_outputs(self, states: list[State], grid: Grid, points) -> list[State]:
        """G applied to each state; evaluated as one batch, counted per state."""
        B = states[0].values.shape[0]
        fields = states[0].values if len(states) == 1 else T.concat([s.values for s in states], axis=0)
        vals, jet = self.backbone.apply(fields, grid, points)
        self.backbone_calls += len(states)
        out = []
        for i in range(len(states)):
            sl = slice(i * B, (i + 1) * B)
            out.append(State(vals[sl], None if jet is None else jet[sl]))
        return out

    def _mix(self, us: list[Tensor], gs: list[Tensor]) -> Tensor:
        shape = us[0].shape
        U = T.reshape(T.stack(us, axis=0), (self.k, -1))
        G = T.reshape(T.stack(gs, axis=0), (self.k, -1))
        lam = T.reshape(self.lam, (1, self.k))
        dd = T.reshape(self.delta, (1, self.k)) * self.dt
        return T.reshape(T.matmul(lam, U) + T.matmul(dd, G), shape)

    def combine(self, hist: list[State], gout: list[State], grid: Grid, points) -> State:
        if len(hist) != self.k or len(gout) != self.k:
            raise ContractError(f"predictor expects {self.k} history states")
        values = self._mix([s.values for s in hist], [g.values for g in gout])
        jet = None
        if hist[0].jet is not None and gout[0].jet is not None:
            jet = self._mix([s.jet for s in hist], [g.jet for g in gout])
        if self.bc is not None:
            g, p = self.bc.on_grid(grid)
            values = values * p + g
            if jet is not None:
                gj, pj = self.bc.jets(points)
                jet = _product_jet(jet, gj, pj)
        return State(values, jet, hist[-1].t + self.dt)

    # ------------------------------------------------------------ public API
    def predict_next(self, h: HistoryWindow) -> State:
        if len(h) != self.k:
            raise ShapeError(f"history holds {len(h)} states, predictor needs {self.k}")
        hist = h.states()
        return self.combine(hist, self.backbone_outputs(hist, h.grid, h.points), h.grid, h.points)

    def rollout(self, init: HistoryWindow, steps: int, reuse_backbone: bool = False) -> list[State]:
        """Iterate predict_next, pushing each prediction into a copy of ``init``.

        With ``reuse_backbone`` the backbone output of a state is computed
        once and reused for the k steps that state stays in the window. The
        arithmetic is identical; only the number of backbone evaluations drops
        from steps*k to steps+k-1.
        """
        if steps < 0:
            raise ContractError(f"rollout length must be >= 0, got {steps}")
        h = init.copy()
        if len(h) != self.k:
            raise ShapeError(f"history holds {len(h)} states, predictor needs {self.k}")
        out: list[State] = []
        cache: dict[int, State] = {}
        for _ in range(steps):
            hist = h.states()
            if reuse_backbone:
                missing = [s for s in hist if id(s) not in cache]
                if missing:
                    for s, g in zip(missing, self.backbone_outputs(missing, h.grid, h.points)):
                        cache[id(s)] = g
                gout = [cache[id(s)] for s in hist]
            else:
                gout = self.backbone_outputs(hist, h.grid, h.points)
            nxt = self.combine(hist, gout, h.grid, h.points)
            if reuse_backbone:
                cache.pop(id(hist[0]), None)
            h.push(nxt)
            out.append(nxt)
        return out

    def extrapolate(self, init: HistoryWindow, steps: int, train_grid: Grid | None = None) -> list[State]:
        """Rollout on another resolution with the tape disabled.

        DeepONet branches keep their training sensors; the new grid must
        contain those nodes, and explicitly resampled sensors are rejected.
        """
        sensor_grid = getattr(self.backbone, "sensor_grid", None)
        if sensor_grid is not None:
            try:
                init.grid.stride_to(sensor_grid)
            except ShapeError as exc:
                raise ContractError(f"DeepONet sensors are fixed to {sensor_grid.shape}: {exc}") from None
            if train_grid is not None and train_grid.shape != sensor_grid.shape:
                raise ContractError("DeepONet sensor positions cannot be resampled")
        with T.no_grad():
            return self.rollout(init, steps)
