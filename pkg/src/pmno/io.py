"""Binary grid files, checkpoint containers, and plain-text manifests.

Grid file layout (little-endian):
    b"PMNO"  u16 version  u8 ndim  u32 extents[ndim]  u32 channels
    payload: float64 values, row-major over (extents..., channels)

Checkpoint layout:
    b"PMCK"  u16 version  u32 meta_len  meta (UTF-8 JSON)
    u32 block_count, then per block: u16 name_len, name, u64 byte_len, grid file bytes
"""
from __future__ import annotations

import io as _io
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ContractError

GRID_MAGIC = b"PMNO"
GRID_VERSION = 1
CKPT_MAGIC = b"PMCK"
CKPT_VERSION = 1


def encode_grid(values: np.ndarray) -> bytes:
    """Trailing axis is the channel axis; a 1-D array is one channel."""
    a = np.asarray(values, dtype="<f8")
    if a.ndim == 1:
        a = a[:, None]
    extents, channels = a.shape[:-1], a.shape[-1]
    head = GRID_MAGIC + struct.pack("<HB", GRID_VERSION, len(extents))
    head += struct.pack(f"<{len(extents)}I", *extents) + struct.pack("<I", channels)
    return head + np.ascontiguousarray(a).tobytes()


def decode_grid(buf: bytes) -> np.ndarray:
    if buf[:4] != GRID_MAGIC:
        raise ContractError("not a grid file (bad magic)")
    version, ndim = struct.unpack_from("<HB", buf, 4)
    if version != GRID_VERSION:
        raise ContractError(f"unsupported grid file version {version}")
    off = 7
    extents = struct.unpack_from(f"<{ndim}I", buf, off)
    off += 4 * ndim
    (channels,) = struct.unpack_from("<I", buf, off)
    off += 4
    count = int(np.prod(extents, dtype=np.int64)) * channels
    if len(buf) - off != 8 * count:
        raise ContractError(f"grid payload holds {len(buf) - off} bytes, expected {8 * count}")
    data = np.frombuffer(buf, dtype="<f8", count=count, offset=off)
    return data.reshape(tuple(extents) + (channels,)).astype(np.float64)


def write_grid_file(path, values: np.ndarray) -> None:
    Path(path).write_bytes(encode_grid(values))


def read_grid_file(path) -> np.ndarray:
    return decode_grid(Path(path).read_bytes())


# -------------------------------------------------------------- checkpoints
def write_container(path, meta: dict, blocks: dict[str, np.ndarray]) -> None:
    out = _io.BytesIO()
    m = json.dumps(meta, sort_keys=True).encode()
    out.write(CKPT_MAGIC + struct.pack("<HI", CKPT_VERSION, len(m)) + m)
    out.write(struct.pack("<I", len(blocks)))
    for name, arr in blocks.items():
        nb = name.encode()
        payload = encode_grid(np.asarray(arr).reshape(-1) if np.ndim(arr) == 0 else arr)
        out.write(struct.pack("<H", len(nb)) + nb + struct.pack("<Q", len(payload)) + payload)
    Path(path).write_bytes(out.getvalue())


def read_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    buf = Path(path).read_bytes()
    if buf[:4] != CKPT_MAGIC:
        raise ContractError(f"{path} is not a checkpoint")
    version, mlen = struct.unpack_from("<HI", buf, 4)
    if version != CKPT_VERSION:
        raise ContractError(f"unsupported checkpoint version {version}")
    off = 10
    meta = json.loads(buf[off : off + mlen].decode())
    off += mlen
    (count,) = struct.unpack_from("<I", buf, off)
    off += 4
    blocks = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", buf, off)
        off += 2
        name = buf[off : off + nlen].decode()
        off += nlen
        (blen,) = struct.unpack_from("<Q", buf, off)
        off += 8
        blocks[name] = decode_grid(buf[off : off + blen])
        off += blen
    return meta, blocks


def save_checkpoint(path, predictor, cfg=None, extra: dict | None = None) -> None:
    """Predictor kind, k, dt, lambda, delta and backbone parameters.

    Parameters are stored with their trailing axis as the channel axis;
    the shape recorded in the metadata restores them exactly.
    """
    params = predictor.named_parameters()
    meta = {
        "kind": predictor.backbone.config()["kind"],
        "k": predictor.k,
        "dt": predictor.dt,
        "backbone": predictor.backbone.config(),
        "shapes": {n: list(p.shape) for n, p in params.items()},
    }
    if cfg is not None:
        meta["config"] = cfg.as_dict()
    if extra:
        meta["extra"] = extra
    write_container(path, meta, {n: p.data for n, p in params.items()})


def load_checkpoint(path, predictor=None):
    """Return (meta, predictor). Without a predictor one is rebuilt from the
    stored config."""
    meta, blocks = read_container(path)
    if predictor is None:
        from .training import TrainConfig, build_predictor

        if "config" not in meta:
            raise ContractError("checkpoint carries no config; pass a predictor to load into")
        predictor = build_predictor(TrainConfig(**meta["config"]))
    params = predictor.named_parameters()
    for name, shape in meta["shapes"].items():
        if name not in params:
            raise ContractError(f"checkpoint parameter {name} has no counterpart")
        params[name].data = blocks[name].reshape(shape).copy()
    return meta, predictor


# ---------------------------------------------------------------- manifests
def write_manifest(path, entries: dict) -> None:
    lines = [f"{k} = {v}" for k, v in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
