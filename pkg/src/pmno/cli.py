"""Command-line entry point: gen-data, train, rollout, eval, sweep."""
from __future__ import annotations

import argparse
import csv
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import dump_config, load_config
from .errors import ConfigError, ContractError, NumericalAbort
from .io import load_checkpoint, write_grid_file, write_manifest
from .pde import get_system
from .solvers import generate_dataset, load_dataset, reference_trajectory
from .training import train

log = logging.getLogger("pmno")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _manifest(out: Path, verb: str, cfg=None, **extra) -> None:
    entries = {"verb": verb, "pmno": __version__, "numpy": np.__version__, "python": platform.python_version()}
    if cfg is not None:
        entries.update(cfg.as_dict())
    entries.update(extra)
    write_manifest(out / "run_manifest.txt", entries)


def _config(args, require_all=True):
    return load_config(args.config, args.set or (), require_all=require_all)


def cmd_gen_data(args) -> int:
    cfg = _config(args, require_all=False)
    n = args.grid or cfg.grid
    count = args.snapshots or cfg.k + cfg.eval_steps
    out = Path(args.out)
    traj = generate_dataset(cfg.system, cfg.dt, count, n, out, seed=cfg.seed)
    _manifest(out, "gen-data", cfg, snapshots=len(traj))
    print(f"wrote {len(traj)} snapshots of {cfg.system} on {n}x{n} to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(dump_config(cfg))
    if args.data:
        traj = load_dataset(args.data)
        if traj.system != cfg.system or traj.grid.shape != (cfg.grid, cfg.grid):
            raise ConfigError(f"dataset {args.data} does not match system/grid of the config")
        data = traj.fields[: cfg.k]
    else:
        system = get_system(cfg.system)
        data = reference_trajectory(system, system.grid(cfg.grid), cfg.dt, cfg.k, t0=cfg.t0).fields
    _manifest(out, "train", cfg, data=args.data or "reference solver")

    def progress(epoch, loss, lr):
        if args.verbose and (epoch % 100 == 0 or epoch == cfg.epochs - 1):
            log.info("epoch %d loss %.6e lr %.3e", epoch, loss, lr)

    run = train(cfg, data, out_dir=out, log=progress)
    print(f"final loss {run.final_loss:.6e} after {len(run.losses)} epochs; checkpoint {out / 'final.ckpt'}")
    return EXIT_OK


def cmd_rollout(args) -> int:
    meta, predictor = load_checkpoint(args.checkpoint)
    from .training import TrainConfig, initial_window

    cfg = TrainConfig(**meta["config"])
    system = get_system(cfg.system)
    grid = system.grid(args.grid or cfg.grid)
    ref = reference_trajectory(system, grid, cfg.dt, cfg.k, t0=cfg.t0)
    window = initial_window(predictor, ref.fields, system)
    steps = args.steps if args.steps is not None else cfg.eval_steps
    preds = predictor.extrapolate(window, steps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, p in enumerate(preds):
        write_grid_file(out / f"pred_{i:05d}.pmno", p.values.data[0])
    _manifest(out, "rollout", cfg, checkpoint=args.checkpoint, steps=steps, eval_grid=grid.shape[0])
    print(f"wrote {len(preds)} predicted snapshots to {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .experiment import evaluate
    from .training import TrainConfig

    meta, predictor = load_checkpoint(args.checkpoint)
    cfg = TrainConfig(**meta["config"])
    if args.tau is not None:
        cfg.tau = args.tau
    ev = evaluate(predictor, cfg, steps=args.steps, n=args.grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "error_curve.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "epsilon"])
        for t, e in zip(ev.curve.times, ev.curve.values):
            wr.writerow([repr(float(t)), repr(float(e))])
    tv = "none" if ev.valid_time is None else f"{ev.valid_time:g}"
    _manifest(out, "eval", cfg, checkpoint=args.checkpoint, reference="reference solver", T_v=tv)
    print(f"training-window mean error {ev.train_mean:.4e}; T_v (tau={cfg.tau:g}) = {tv}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .experiment import run_sweep

    cfg = _config(args)
    values = [int(v) for v in args.values.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _manifest(out, "sweep", cfg, axis=args.axis, values=args.values, seeds=args.seeds)

    def progress(r):
        log.info("%s seed %d: %s final_loss=%.4e T_v=%s", r.setting, r.seed, r.status, r.final_loss, r.valid_time)

    rows = run_sweep(cfg, args.axis, values, seeds, out_dir=out, log=progress, workers=args.workers)
    for r in rows:
        print(f"{r['setting']}\t{r['final_loss']:.6e}\t{r['T_v']}\t{r['status']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmno", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pmno {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    def with_config(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
        return p

    p = with_config(sub.add_parser("gen-data", help="write a reference trajectory as grid files"))
    p.add_argument("--out", required=True)
    p.add_argument("--grid", type=int)
    p.add_argument("--snapshots", type=int)
    p.set_defaults(func=cmd_gen_data)

    p = with_config(sub.add_parser("train", help="train a predictor"))
    p.add_argument("--out", required=True)
    p.add_argument("--data", help="dataset directory from gen-data (default: solve on the fly)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rollout", help="roll a trained predictor forward")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--grid", type=int, help="resolution of the rollout (default: training grid)")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("eval", help="error curve and valid time against the reference")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--tau", type=float)
    p.set_defaults(func=cmd_eval)

    p = with_config(sub.add_parser("sweep", help="train over k or L settings and several seeds"))
    p.add_argument("--axis", choices=("k", "L"), required=True)
    p.add_argument("--values", required=True, help="comma-separated settings")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--workers", type=int, default=1, help="parallel training processes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
