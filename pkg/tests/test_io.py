import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pmno.errors import ContractError
from pmno.io import (
    decode_grid,
    encode_grid,
    load_checkpoint,
    read_container,
    read_grid_file,
    save_checkpoint,
    write_container,
    write_grid_file,
)
from pmno.training import TrainConfig, build_predictor


def test_header_layout():
    buf = encode_grid(np.arange(6.0).reshape(3, 2, 1))
    assert buf[:4] == b"PMNO"
    version, ndim = struct.unpack_from("<HB", buf, 4)
    assert (version, ndim) == (1, 2)
    assert struct.unpack_from("<3I", buf, 7) == (3, 2, 1)
    payload = buf[19:]
    assert len(payload) == 6 * 8
    assert np.array_equal(np.frombuffer(payload, "<f8"), np.arange(6.0))


def test_row_major_channels_last():
    a = np.arange(12.0).reshape(2, 3, 2)
    payload = encode_grid(a)[-96:]
    assert np.frombuffer(payload, "<f8")[1] == a[0, 0, 1]


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(1, 3))))
def test_round_trip_bytes(a):
    buf = encode_grid(a)
    back = decode_grid(buf)
    assert encode_grid(back) == buf
    assert back.tobytes() == a.tobytes()


def test_file_round_trip(tmp_path):
    a = np.random.default_rng(0).standard_normal((16, 8, 2))
    write_grid_file(tmp_path / "a.pmno", a)
    assert np.array_equal(read_grid_file(tmp_path / "a.pmno"), a)


def test_corrupt_inputs():
    with pytest.raises(ContractError):
        decode_grid(b"XXXX" + bytes(20))
    buf = encode_grid(np.ones((2, 2, 1)))
    with pytest.raises(ContractError):
        decode_grid(buf[:-8])


def test_container_round_trip(tmp_path):
    blocks = {"w": np.random.rand(3, 4), "b": np.random.rand(4), "s": np.array(2.5)}
    write_container(tmp_path / "c.ckpt", {"kind": "x", "n": 3}, blocks)
    meta, back = read_container(tmp_path / "c.ckpt")
    assert meta == {"kind": "x", "n": 3}
    assert np.array_equal(back["w"].reshape(3, 4), blocks["w"])
    assert back["s"].item() == 2.5


def test_checkpoint_restores_predictor(tmp_path):
    cfg = TrainConfig(k=3, grid=16, modes=4, width=4, seed=2, epochs=1)
    p = build_predictor(cfg)
    p.lam.data = np.array([0.1, 0.2, 0.7])
    save_checkpoint(tmp_path / "p.ckpt", p, cfg)
    meta, q = load_checkpoint(tmp_path / "p.ckpt")
    assert meta["kind"] == "fno" and meta["k"] == 3 and meta["dt"] == cfg.dt
    for (n, a), (m, b) in zip(p.named_parameters().items(), q.named_parameters().items()):
        assert n == m and np.array_equal(a.data, b.data)
    save_checkpoint(tmp_path / "q.ckpt", q, cfg)
    assert (tmp_path / "p.ckpt").read_bytes() == (tmp_path / "q.ckpt").read_bytes()
