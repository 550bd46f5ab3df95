"""Flat ``key = value`` configuration files with command-line overrides."""
from __future__ import annotations

from dataclasses import fields
from pathlib import Path

from .errors import ConfigError
from .training import TrainConfig

REQUIRED_KEYS = (
    "system", "k", "dt", "L", "epochs", "epsilon_causal", "lr0", "lr_decay_every",
    "lr_decay_rate", "seed", "grid", "n_samples", "backbone", "modes", "width", "tau",
)

_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def parse_pairs(lines, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected key = value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{n}: empty key")
        out[key] = value
    return out


def _convert(key: str, value: str):
    kind = _TYPES.get(key)
    if kind is None:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        if kind in ("int", int):
            return int(value)
        if kind in ("float", float):
            return float(value)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {value!r} as {kind}") from None
    return value


def load_config(path: str | Path | None = None, overrides=(), require_all: bool = True) -> TrainConfig:
    """Read a config file, apply ``key=value`` overrides, and validate."""
    pairs: dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        pairs.update(parse_pairs(text.splitlines(), str(path)))
    pairs.update(parse_pairs(overrides, "--set"))
    if require_all:
        missing = [k for k in REQUIRED_KEYS if k not in pairs]
        if missing:
            raise ConfigError(f"missing config keys: {', '.join(missing)}")
    values = {k: _convert(k, v) for k, v in pairs.items()}
    return TrainConfig(**values)


def dump_config(cfg: TrainConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.as_dict().items())
