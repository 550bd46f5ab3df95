import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmno import tensor as T
from pmno.errors import ConfigError
from pmno.fft import fft_nd, ifft_nd, spectral_conv, spectral_conv2d, spectral_derivative
from pmno.tensor import Tensor

from oracles import grad_check, naive_dft_nd, rel_err


def identity_weights(m1, m2, c):
    re = np.zeros((2, m1, m2, c, c))
    re[..., np.arange(c), np.arange(c)] = 1.0
    return re, np.zeros_like(re)


def test_constant_field_spectrum():
    s = fft_nd(Tensor(np.full(16, 2.5)))
    assert s.re.data[0] == pytest.approx(2.5 * 16)
    assert np.allclose(s.re.data[1:], 0, atol=1e-12)
    assert np.allclose(s.im.data, 0, atol=1e-12)


@pytest.mark.parametrize("shape", [(8,), (16, 4), (2, 8, 32), (64, 64)])
def test_round_trip(shape):
    x = np.random.default_rng(0).standard_normal(shape)
    back = ifft_nd(fft_nd(Tensor(x)))
    assert rel_err(back.data, x) < 1e-12


def test_single_frequency():
    N, k = 32, 3
    x = np.sin(2 * np.pi * k * np.arange(N) / N)
    s = fft_nd(Tensor(x)).to_complex()
    nz = np.flatnonzero(np.abs(s) > 1e-9)
    assert list(nz) == [k, N - k]


def test_matches_naive_dft():
    x = np.random.default_rng(1).standard_normal((4, 8))
    s = fft_nd(Tensor(x)).to_complex()
    assert np.allclose(s, naive_dft_nd(x, (0, 1)), atol=1e-10)


def test_conjugate_symmetry():
    x = np.random.default_rng(2).standard_normal((8, 16))
    s = fft_nd(Tensor(x)).to_complex()
    mirror = np.conj(s[(-np.arange(8)) % 8][:, (-np.arange(16)) % 16])
    assert np.allclose(s, mirror, atol=1e-12)


@pytest.mark.parametrize("n", [3, 12, 24])
def test_non_power_of_two(n):
    with pytest.raises(ConfigError):
        fft_nd(Tensor(np.ones(n)))


def test_fft_gradients():
    rng = np.random.default_rng(3)
    x = Tensor(rng.standard_normal((4, 8)), requires_grad=True)
    wr, wi = rng.standard_normal((2, 4, 8))

    def build():
        s = fft_nd(x)
        return T.tsum(s.re * wr) + T.tsum(s.im * wi)

    assert grad_check(build, {"x": x}) < 1e-6
    w = rng.standard_normal((4, 8))
    sr = Tensor(rng.standard_normal((4, 8)), requires_grad=True)
    si = Tensor(rng.standard_normal((4, 8)), requires_grad=True)
    from pmno.fft import ComplexSpectrum

    assert grad_check(lambda: T.tsum(ifft_nd(ComplexSpectrum(sr, si, (0, 1))) * w), {"re": sr, "im": si}) < 1e-6


class TestSpectralConv:
    def grid_field(self, fn, n=32, c=1):
        x = np.arange(n) / n
        X, Y = np.meshgrid(x, x, indexing="ij")
        return np.repeat(fn(X, Y)[None, :, :, None], c, axis=-1)

    @pytest.mark.parametrize("conv", [spectral_conv2d, spectral_conv])
    def test_doubles_constant(self, conv):
        re, im = identity_weights(4, 4, 1)
        re[0, 0, 0] *= 2
        out = conv(Tensor(np.full((1, 16, 16, 1), 1.5)), Tensor(re), Tensor(im))
        assert np.allclose(out.data, 3.0, atol=1e-12)

    @pytest.mark.parametrize("conv", [spectral_conv2d, spectral_conv])
    def test_truncates_high_mode(self, conv):
        f = self.grid_field(lambda X, Y: np.sin(9 * 2 * np.pi * X))
        out = conv(Tensor(f), *map(Tensor, identity_weights(8, 8, 1)))
        assert np.max(np.abs(out.data)) < 1e-12

    @pytest.mark.parametrize("conv", [spectral_conv2d, spectral_conv])
    def test_band_limited_fixed_point(self, conv):
        f = self.grid_field(
            lambda X, Y: 0.3 + np.cos(2 * np.pi * (3 * X - 2 * Y)) + np.sin(2 * np.pi * (7 * Y)) * np.cos(2 * np.pi * 5 * X),
            c=2,
        )
        out = conv(Tensor(f), *map(Tensor, identity_weights(8, 8, 2)))
        assert np.max(np.abs(out.data - f)) < 1e-10

    def test_modes_beyond_nyquist(self):
        with pytest.raises(ConfigError):
            spectral_conv2d(Tensor(np.ones((1, 8, 8, 1))), *map(Tensor, identity_weights(5, 4, 1)))

    def test_fused_equals_composed(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((2, 16, 8, 3))
        re, im = rng.standard_normal((2, 2, 4, 3, 3, 5))
        a = spectral_conv2d(Tensor(x), Tensor(re), Tensor(im)).data
        b = spectral_conv(Tensor(x), Tensor(re), Tensor(im)).data
        assert np.max(np.abs(a - b)) < 1e-12

    def test_translation_equivariance(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((1, 16, 16, 2))
        # diagonal in channels per mode
        re = np.zeros((2, 4, 4, 2, 2))
        im = np.zeros_like(re)
        for c in range(2):
            re[..., c, c] = rng.standard_normal((2, 4, 4))
            im[..., c, c] = rng.standard_normal((2, 4, 4))
        y = spectral_conv2d(Tensor(x), Tensor(re), Tensor(im)).data
        ys = spectral_conv2d(Tensor(np.roll(x, (3, -5), axis=(1, 2))), Tensor(re), Tensor(im)).data
        assert np.max(np.abs(np.roll(y, (3, -5), axis=(1, 2)) - ys)) < 1e-10

    @pytest.mark.parametrize("conv", [spectral_conv2d, spectral_conv])
    def test_gradients(self, conv):
        rng = np.random.default_rng(5)
        x = Tensor(rng.standard_normal((2, 8, 8, 2)), requires_grad=True)
        re = Tensor(rng.standard_normal((2, 3, 3, 2, 3)), requires_grad=True)
        im = Tensor(rng.standard_normal((2, 3, 3, 2, 3)), requires_grad=True)
        w = rng.standard_normal((2, 8, 8, 3))
        assert grad_check(lambda: T.tsum(conv(x, re, im) * w), {"x": x, "re": re, "im": im}) < 1e-6


class TestSpectralDerivative:
    def test_sine(self):
        P, n = 3.0, 64
        x = P * np.arange(n) / n
        d = spectral_derivative(Tensor(np.sin(2 * np.pi * x / P)), 0, 1, P).data
        assert np.max(np.abs(d - (2 * np.pi / P) * np.cos(2 * np.pi * x / P))) < 1e-10

    def test_second_order(self):
        P, n = 2.0, 32
        x = P * np.arange(n) / n
        f = np.cos(3 * 2 * np.pi * x / P)
        d = spectral_derivative(Tensor(f), 0, 2, P).data
        assert np.max(np.abs(d + (6 * np.pi / P) ** 2 * f)) < 1e-9

    @pytest.mark.parametrize("order", [1, 2])
    def test_gradient(self, order):
        rng = np.random.default_rng(order)
        u = Tensor(rng.standard_normal((2, 8, 4)), requires_grad=True)
        w = rng.standard_normal((2, 8, 4))
        assert grad_check(lambda: T.tsum(spectral_derivative(u, 1, order, 1.7) * w), {"u": u}) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([1, 2, 4, 8, 16]), st.sampled_from([1, 2, 8, 32]), st.integers(0, 2**31 - 1))
def test_round_trip_property(a, b, seed):
    x = np.random.default_rng(seed).standard_normal((a, b))
    assert rel_err(ifft_nd(fft_nd(Tensor(x))).data, x) < 1e-12
