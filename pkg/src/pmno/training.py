"""BDF-guided causal training of the multi-step predictor."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import tensor as T
from .bdf import BdfScheme, bdf_coefficients
from .errors import ConfigError, ContractError, NumericalAbort, ShapeError
from .grid import Grid, GridField
from .operators.boundary import HardDirichlet
from .operators.deeponet import DeepOnet
from .operators.fno import Fno
from .pde import PdeSystem, get_system, spatial_derivative
from .predictor import HistoryWindow, PmnoPredictor, State
from .tensor import Tensor

DIVERGENCE_LIMIT = 1e6
BACKBONES = ("deeponet_mlp", "deeponet_cnn", "fno")


# ------------------------------------------------------------------- losses
def step_loss(scheme: BdfScheme, window, system: PdeSystem, grid: Grid | None, t_last: float, dt: float,
              points=None, mask=None) -> Tensor:
    """Monte Carlo BDF residual of one window u_i..u_{i+k} (oldest first).

    Grid windows hold (B, H, W, C) tensors and use every node (inside the
    mask, if any) as a sample point. Jet windows hold (B, 5, N, C) tensors
    at ``points``.
    """
    window = list(window)
    if len(window) != scheme.k + 1:
        raise ContractError(f"BDF-{scheme.k} window needs {scheme.k + 1} states, got {len(window)}")
    stack = T.stack([T.as_tensor(w) for w in window], axis=0)
    return step_losses(scheme, stack, system, grid, t_last, points, mask, n_steps=1, dt=dt)[0]


def step_losses(
    scheme: BdfScheme,
    seq: Tensor,
    system: PdeSystem,
    grid: Grid,
    t_first_target: float,
    points=None,
    mask=None,
    n_steps: int | None = None,
    dt: float | None = None,
) -> Tensor:
    """All step losses L_0..L_{n-1} of a sequence u_0..u_{n+k-1}, batched.

    ``seq`` has shape (S, B, H, W, C) for grid states or (S, B, 5, N, C) for
    jets. ``t_first_target`` is the time of u_k. Returns a (n,) tensor.
    """
    k = scheme.k
    S = seq.shape[0]
    n = S - k if n_steps is None else n_steps
    if n < 1 or n + k != S:
        raise ContractError(f"sequence of {S} states cannot hold {n} BDF-{k} windows")
    if dt is None:
        raise ContractError("dt is required")
    times = t_first_target + dt * np.arange(n)
    jets = points is not None
    head = seq[k : k + n]
    B = seq.shape[1]
    if jets:
        tgt = T.reshape(head, (n * B,) + head.shape[2:])
        rhs = system.rhs_jet(tgt, np.repeat(times, B), points)
        rhs = T.reshape(rhs, (n, B) + rhs.shape[1:])
        vals = seq[:, :, 0]
    else:
        tgt = T.reshape(head, (n * B,) + head.shape[2:])
        rhs = system.rhs(tgt, np.repeat(times, B), grid)
        rhs = T.reshape(rhs, (n, B) + rhs.shape[1:])
        vals = seq
    res = rhs * (-dt * scheme.b_k)
    for j, a in enumerate(scheme.a):
        if a != 0.0:
            res = res + vals[j : j + n] * a
    sq = T.tsum(res * res, axis=-1)  # sum over channels
    if jets:
        return T.mean(sq, axis=(1, 2))
    if mask is not None:
        w = mask.astype(np.float64)[None, None]
        return T.tsum(sq * w, axis=(1, 2, 3)) * (1.0 / (B * w.sum()))
    return T.mean(sq, axis=(1, 2, 3))


def causal_weights(losses, epsilon: float) -> np.ndarray:
    """w_i = exp(-eps * sum_{j<i} L_j), returned as detached constants."""
    L = np.asarray(losses.data if isinstance(losses, Tensor) else losses, dtype=np.float64)
    if np.any(L < 0):
        raise ContractError("step losses must be nonnegative")
    partial = np.concatenate([[0.0], np.cumsum(L)[:-1]])
    return np.exp(-epsilon * partial)


def weighted_loss(losses: Tensor, epsilon: float) -> tuple[Tensor, np.ndarray]:
    w = causal_weights(losses, epsilon)
    return T.tsum(losses * w) * (1.0 / losses.shape[0]), w


# ---------------------------------------------------------------- optimizer
def lr_at(it: int, lr0: float = 1e-3, every: int = 200, rate: float = 0.99) -> float:
    return lr0 * rate ** (it // every)


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0


def adam_update(params: dict, grads: dict, state: AdamState, it: int, lr0=1e-3, every=200, rate=0.99,
                beta1=0.9, beta2=0.999, eps=1e-8) -> float:
    """One in-place Adam step on named parameter tensors. Returns the lr used."""
    lr = lr_at(it, lr0, every, rate)
    state.step += 1
    c1 = 1.0 - beta1**state.step
    c2 = 1.0 - beta2**state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.data.shape:
            raise ContractError(f"gradient for {name} has shape {g.shape}, parameter {p.data.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p.data = p.data - lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return lr


# ------------------------------------------------------------------- config
@dataclass
class TrainConfig:
    system: str = "advection2d"
    k: int = 5
    dt: float = 0.02
    L: int = 20
    epochs: int = 3000
    epsilon_causal: float = 1.0
    lr0: float = 1e-3
    lr_decay_every: int = 200
    lr_decay_rate: float = 0.99
    seed: int = 0
    grid: int = 64
    n_samples: int = 1000
    backbone: str = "fno"
    modes: int = 8
    width: int = 16
    tau: float = 0.1
    layers: int = 3
    p: int = 100
    hidden: int = 100
    activation: str = "tanh"
    trunk_features: str = "raw"
    fourier_modes: int = 7
    checkpoint_every: int = 0
    eval_steps: int = 100
    eval_grid: int = 0
    t0: float = 0.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not 1 <= self.k <= 6:
            raise ConfigError(f"k must lie in 1..6, got {self.k}")
        if self.L < 1:
            raise ConfigError(f"L must be >= 1, got {self.L}")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.backbone not in BACKBONES:
            raise ConfigError(f"backbone must be one of {BACKBONES}, got {self.backbone!r}")
        if self.epsilon_causal < 0:
            raise ConfigError("epsilon_causal must be nonnegative")
        get_system(self.system)

    @property
    def horizon(self) -> float:
        return (self.L + self.k - 1) * self.dt

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]


# ------------------------------------------------------------ construction
def build_backbone(cfg: TrainConfig, system: PdeSystem, grid: Grid):
    C = system.channels
    if cfg.backbone == "fno":
        return Fno(channels=C, width=cfg.width, modes=cfg.modes, layers=cfg.layers, seed=cfg.seed)
    hidden = (cfg.hidden,) * max(cfg.layers - 1, 1)
    return DeepOnet(
        grid,
        channels=C,
        p=cfg.p,
        branch="mlp" if cfg.backbone == "deeponet_mlp" else "cnn",
        branch_hidden=hidden,
        trunk_hidden=hidden,
        activation=cfg.activation,
        trunk_features=cfg.trunk_features,
        fourier_modes=(cfg.fourier_modes, cfg.fourier_modes),
        seed=cfg.seed,
    )


def build_bc(system: PdeSystem) -> HardDirichlet | None:
    fns = system.hard_bc()
    return None if fns is None else HardDirichlet(*fns)


def build_predictor(cfg: TrainConfig, system: PdeSystem | None = None, grid: Grid | None = None) -> PmnoPredictor:
    system = system or get_system(cfg.system)
    grid = grid or system.grid(cfg.grid)
    return PmnoPredictor(build_backbone(cfg, system, grid), cfg.k, cfg.dt, bc=build_bc(system), seed=cfg.seed)


def sample_points(system: PdeSystem, grid: Grid, n: int, seed: int) -> np.ndarray:
    """Indices of n distinct grid nodes inside the domain, drawn once per run."""
    mask = system.mask(grid)
    candidates = np.flatnonzero(mask.inside.ravel()) if mask is not None else np.arange(grid.size)
    if n > candidates.size:
        raise ConfigError(f"n_samples={n} exceeds the {candidates.size} available nodes")
    rng = np.random.default_rng(seed + 7919)
    return np.sort(rng.choice(candidates, size=n, replace=False))


def field_jet(values: np.ndarray, system: PdeSystem, grid: Grid, idx: np.ndarray) -> np.ndarray:
    """(5, N, C) jet of a labeled (H, W, C) field at flat node indices ``idx``."""
    u = Tensor(values[None])
    with T.no_grad():
        parts = [u]
        for axis in (0, 1):
            parts.append(spatial_derivative(u, axis, 1, system.scheme, grid))
        for axis in (0, 1):
            parts.append(spatial_derivative(u, axis, 2, system.scheme, grid))
    C = values.shape[-1]
    return np.stack([p.data[0].reshape(-1, C)[idx] for p in parts], axis=0)


def initial_window(predictor: PmnoPredictor, data, system: PdeSystem, idx: np.ndarray | None = None) -> HistoryWindow:
    data = list(data)
    if len(data) != predictor.k:
        raise ShapeError(f"need {predictor.k} labeled fields, got {len(data)}")
    grid = data[0].grid
    points = None
    jets = None
    if idx is not None:
        points = grid.points()[idx]
        jets = [field_jet(f.values, system, grid, idx) for f in data]
    return HistoryWindow.from_fields(data, points=points, jets=jets)


# --------------------------------------------------------------------- run
@dataclass
class TrainRun:
    config: TrainConfig
    predictor: PmnoPredictor
    losses: list = field(default_factory=list)
    lrs: list = field(default_factory=list)
    step_loss_history: list = field(default_factory=list)
    weight_history: list = field(default_factory=list)
    epoch_seconds: list = field(default_factory=list)
    status: str = "ok"
    points_idx: np.ndarray | None = None

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")


def epoch_loss(predictor: PmnoPredictor, window: HistoryWindow, cfg: TrainConfig, system: PdeSystem, scheme: BdfScheme,
               reuse_backbone: bool = True):
    """Roll out L steps on the tape and return (total, step losses, weights)."""
    preds = predictor.rollout(window, cfg.L, reuse_backbone=reuse_backbone)
    states = window.states() + preds
    jets = window.points is not None
    seq = T.stack([s.jet if jets else s.values for s in states], axis=0)
    mask = system.mask(window.grid)
    t_first = window[-1].t + cfg.dt
    losses = step_losses(
        scheme, seq, system, window.grid, t_first,
        points=window.points, mask=None if mask is None else mask.inside, n_steps=cfg.L, dt=cfg.dt,
    )
    total, w = weighted_loss(losses, cfg.epsilon_causal)
    return total, losses, w


def _write_loss_csv(path: Path, run: TrainRun) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["epoch", "total_loss", "lr"])
        for i, (loss, lr) in enumerate(zip(run.losses, run.lrs)):
            wr.writerow([i, repr(float(loss)), repr(float(lr))])


def train(cfg: TrainConfig, data, out_dir: str | Path | None = None, log=None, predictor: PmnoPredictor | None = None,
          keep_history: bool = True, system: PdeSystem | None = None) -> TrainRun:
    """Algorithm: per epoch roll out L steps, weight the BDF step losses
    causally, backpropagate, take one Adam step.

    Raises NumericalAbort (after writing a diagnostic checkpoint when
    ``out_dir`` is set) if the loss is non-finite or exceeds the guard.
    """
    from .io import save_checkpoint

    system = system or get_system(cfg.system)
    data = list(data)
    grid = data[0].grid
    for f in data:
        if f.channels != system.channels or f.grid != grid:
            raise ShapeError("labeled fields do not match the system layout")
    scheme = bdf_coefficients(cfg.k)
    predictor = predictor or build_predictor(cfg, system, grid)
    idx = None
    if isinstance(predictor.backbone, DeepOnet):
        idx = sample_points(system, grid, cfg.n_samples, cfg.seed)
    window = initial_window(predictor, data, system, idx)
    run = TrainRun(cfg, predictor, points_idx=idx)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    params = predictor.named_parameters()
    opt = AdamState()
    for epoch in range(cfg.epochs):
        t_start = time.perf_counter()
        for p in params.values():
            p.grad = None
        # overflow inside a diverging rollout is reported by the guard below
        with np.errstate(over="ignore", invalid="ignore"):
            total, losses, w = epoch_loss(predictor, window, cfg, system, scheme)
        value = total.item()
        if not math.isfinite(value) or value > DIVERGENCE_LIMIT:
            run.status = "diverged"
            if out is not None:
                save_checkpoint(out / "diverged.ckpt", predictor, cfg, extra={"epoch": epoch, "loss": value})
                _write_loss_csv(out / "loss.csv", run)
            raise NumericalAbort(f"training diverged at epoch {epoch}: loss={value!r}")
        T.backward(total)
        grads = {n: p.grad for n, p in params.items()}
        lr = adam_update(params, grads, opt, epoch, cfg.lr0, cfg.lr_decay_every, cfg.lr_decay_rate)
        run.losses.append(value)
        run.lrs.append(lr)
        if keep_history:
            run.step_loss_history.append(losses.data.copy())
            run.weight_history.append(w)
        run.epoch_seconds.append(time.perf_counter() - t_start)
        if log is not None:
            log(epoch, value, lr)
        if out is not None and cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0:
            save_checkpoint(out / f"epoch{epoch + 1:06d}.ckpt", predictor, cfg, extra={"epoch": epoch + 1})
    if out is not None:
        _write_loss_csv(out / "loss.csv", run)
        save_checkpoint(out / "final.ckpt", predictor, cfg, extra={"epoch": cfg.epochs})
    return run
