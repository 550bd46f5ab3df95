"""Evaluation of trained predictors and parameter sweeps."""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import NumericalAbort
from .metrics import ErrorCurve, rmse_curve, valid_time
from .pde import get_system
from .predictor import PmnoPredictor
from .solvers import reference_trajectory
from .training import TrainConfig, TrainRun, initial_window, train


@dataclass
class Evaluation:
    curve: ErrorCurve
    valid_time: float | None
    train_mean: float
    predictions: list


def evaluate(predictor: PmnoPredictor, cfg: TrainConfig, steps: int | None = None, n: int | None = None,
             reference=None) -> Evaluation:
    """Roll out from the reference's first k snapshots and score against the rest.

    ``n`` selects the evaluation grid (default: the training grid); the
    initial window comes from the reference solver on that grid.
    """
    system = get_system(cfg.system)
    steps = cfg.eval_steps if steps is None else steps
    n = n or cfg.eval_grid or cfg.grid
    grid = system.grid(n)
    if reference is None:
        reference = reference_trajectory(system, grid, cfg.dt, cfg.k + steps, t0=cfg.t0)
    window = initial_window(predictor, reference.fields[: cfg.k], system)
    preds = predictor.extrapolate(window, steps)
    pred_values = [p.values.data[0] for p in preds]
    mask = system.mask(grid)
    ref_fields = reference.fields[cfg.k : cfg.k + steps]
    ref_values = [f.values for f in ref_fields]
    if mask is not None:
        pred_values = [v * mask.inside[..., None] for v in pred_values]
    times = np.array([f.t for f in ref_fields])
    curve = rmse_curve(pred_values, ref_values, times=times, train_horizon=cfg.t0 + cfg.horizon)
    return Evaluation(curve, valid_time(curve, cfg.tau), curve.window_mean(times[0], cfg.t0 + cfg.horizon), pred_values)


def training_data(cfg: TrainConfig):
    system = get_system(cfg.system)
    return reference_trajectory(system, system.grid(cfg.grid), cfg.dt, cfg.k, t0=cfg.t0).fields


@dataclass
class SweepResult:
    setting: str
    seed: int
    final_loss: float
    valid_time: float | None
    train_mean: float
    status: str
    run: TrainRun | None = None


def _tv_key(tv):
    return np.inf if tv is None else tv


def median_valid_time(values) -> float | None:
    m = float(np.median([_tv_key(v) for v in values]))
    return None if np.isinf(m) else m


def run_one(cfg: TrainConfig, out_dir=None) -> SweepResult:
    try:
        run = train(cfg, training_data(cfg), out_dir=out_dir, keep_history=False)
    except NumericalAbort:
        return SweepResult("", cfg.seed, float("nan"), None, float("nan"), "failed")
    ev = evaluate(run.predictor, cfg)
    return SweepResult("", cfg.seed, run.final_loss, ev.valid_time, ev.train_mean, "ok", run)


def _run_job(job) -> SweepResult:
    cfg, sub = job
    r = run_one(cfg, sub)
    r.run = None  # predictors stay in the worker
    return r


def run_sweep(base: TrainConfig, axis: str, values, seeds=(0, 1, 2), out_dir=None, log=None,
              workers: int = 1) -> list[dict]:
    """Train every (setting, seed) pair; aggregate medians per setting.

    An aborting run marks its setting as failed; the sweep continues. With
    ``workers > 1`` runs fan out over processes, one run per worker; each run
    is seeded on its own, so results do not depend on scheduling.
    """
    if axis not in ("k", "L"):
        raise ValueError(f"sweep axis must be 'k' or 'L', got {axis!r}")
    jobs = []
    for v in values:
        for s in seeds:
            cfg = replace(base, **{axis: int(v), "seed": int(s)})
            sub = None if out_dir is None else Path(out_dir) / f"{axis}{v}_seed{s}"
            jobs.append((cfg, sub))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            done = list(pool.map(_run_job, jobs))
    else:
        done = [run_one(*job) for job in jobs]
    rows = []
    n = len(seeds)
    for i, v in enumerate(values):
        results = done[i * n : (i + 1) * n]
        for r in results:
            r.setting = f"{axis}={v}"
            if log is not None:
                log(r)
        ok = [r for r in results if r.status == "ok"]
        rows.append(
            {
                "setting": f"{axis}={v}",
                "final_loss": float(np.median([r.final_loss for r in ok])) if ok else float("nan"),
                "T_v": median_valid_time([r.valid_time for r in ok]) if ok else None,
                "status": "ok" if len(ok) == len(results) else "failed",
                "runs": results,
            }
        )
    if out_dir is not None:
        write_sweep_csv(Path(out_dir) / "sweep.csv", rows)
    return rows


def write_sweep_csv(path, rows) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["setting", "final_loss", "T_v", "status"])
        for r in rows:
            tv = "none" if r["T_v"] is None else repr(r["T_v"])
            wr.writerow([r["setting"], repr(r["final_loss"]), tv, r["status"]])
