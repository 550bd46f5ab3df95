"""Differentiable multi-dimensional Fourier transforms on power-of-two grids.

Complex values travel as paired real tensors (``re``, ``im``). Gradients of
every transform are the adjoints of the corresponding real-linear maps.
The transforms themselves are delegated to ``scipy.fft`` (pocketfft).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError, ShapeError
from .tensor import Tensor, _node, as_tensor


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def check_extents(shape, axes) -> None:
    for ax in axes:
        n = shape[ax]
        if not is_power_of_two(n):
            raise ConfigError(f"FFT extent {n} on axis {ax} is not a power of two")


def _norm_axes(ndim: int, axes) -> tuple[int, ...]:
    if axes is None:
        return tuple(range(ndim))
    return tuple(a % ndim for a in axes)


@dataclass
class ComplexSpectrum:
    re: Tensor
    im: Tensor
    axes: tuple[int, ...]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.re.shape

    def to_complex(self) -> np.ndarray:
        return self.re.data + 1j * self.im.data


def fft_nd(x, axes=None) -> ComplexSpectrum:
    """Unnormalized forward transform over ``axes`` (default: all)."""
    x = as_tensor(x)
    axes = _norm_axes(x.ndim, axes)
    check_extents(x.shape, axes)
    spec = sfft.fftn(x.data, axes=axes)
    n = int(np.prod([x.shape[a] for a in axes]))

    # Re(Fx) has adjoint n*Re(ifft(g)); Im(Fx) has adjoint -n*Im(ifft(g)).
    def bw_re(g):
        return (n * sfft.ifftn(g, axes=axes).real,)

    def bw_im(g):
        return (-n * sfft.ifftn(g, axes=axes).imag,)

    re = _node(spec.real.copy(), (x,), bw_re)
    im = _node(spec.imag.copy(), (x,), bw_im)
    return ComplexSpectrum(re, im, axes)


def ifft_nd(s: ComplexSpectrum) -> Tensor:
    """Inverse transform (carries 1/N); returns the real part."""
    axes = s.axes
    if s.re.shape != s.im.shape:
        raise ShapeError("spectrum real and imaginary parts differ in shape")
    check_extents(s.re.shape, axes)
    out = sfft.ifftn(s.re.data + 1j * s.im.data, axes=axes).real
    n = int(np.prod([s.re.shape[a] for a in axes]))

    def bw(g):
        f = sfft.fftn(g, axes=axes)
        return f.real / n, f.imag / n

    return _node(out, (s.re, s.im), bw)


# ------------------------------------------------------------ spectral conv
def _half_weights(w: int, m2: int) -> np.ndarray:
    # Columns 0 and w/2 of a real half-spectrum appear once; the rest twice.
    c = np.full(m2, 2.0)
    c[0] = 1.0
    if w % 2 == 0 and m2 > w // 2:
        c[w // 2] = 1.0
    return c


def spectral_conv2d(x, r_re, r_im) -> Tensor:
    """Fourier integral operator on a (B, H, W, C) field.

    ``r_re``/``r_im`` have shape (2, m1, m2, Cin, Cout): block 0 multiplies
    rows kx in [0, m1), block 1 rows kx in [H-m1, H); columns ky in [0, m2)
    of the real half-spectrum. All other modes are discarded.
    """
    x, r_re, r_im = as_tensor(x), as_tensor(r_re), as_tensor(r_im)
    if x.ndim != 4:
        raise ShapeError(f"spectral_conv2d expects (B, H, W, C), got {x.shape}")
    B, H, W, cin = x.shape
    _, m1, m2, rin, cout = r_re.shape
    if r_im.shape != r_re.shape or r_re.shape[0] != 2:
        raise ShapeError("spectral weights must both have shape (2, m1, m2, Cin, Cout)")
    if rin != cin:
        raise ShapeError(f"spectral weights expect {rin} channels, field has {cin}")
    check_extents(x.shape, (1, 2))
    if m1 > H // 2 or m2 > W // 2 or m1 < 1 or m2 < 1:
        raise ConfigError(f"modes ({m1}, {m2}) exceed Nyquist for grid {H}x{W}")

    # Only columns [0, m2) of the half-spectrum survive, so the transform
    # along H runs on those columns alone.
    X = sfft.fft(sfft.rfft(x.data, axis=2)[:, :, :m2, :], axis=1)
    R = r_re.data + 1j * r_im.data
    rows = (slice(0, m1), slice(H - m1, H))
    Y = np.zeros((B, H, m2, cout), dtype=np.complex128)
    Xs = []
    for blk, rs in enumerate(rows):
        xs = X[:, rs]
        Xs.append(xs)
        # Batched over modes: (m1, m2, B, Cin) @ (m1, m2, Cin, Cout).
        Y[:, rs] = np.matmul(xs.transpose(1, 2, 0, 3), R[blk]).transpose(2, 0, 1, 3)
    out = sfft.irfft(sfft.ifft(Y, axis=1), n=W, axis=2)
    c = _half_weights(W, m2)[None, None, :, None]
    hw = float(H * W)

    def bw(g):
        G = sfft.fft(sfft.rfft(g, axis=2)[:, :, :m2, :], axis=1)
        gre = np.zeros_like(r_re.data) if (r_re.requires_grad or r_im.requires_grad) else None
        gim = np.zeros_like(r_im.data) if gre is not None else None
        Xbar = np.zeros((B, H, m2, cin), dtype=np.complex128) if x.requires_grad else None
        for blk, rs in enumerate(rows):
            Gy = G[:, rs] * (c / hw)
            if gre is not None:
                gr = np.matmul(np.conj(Xs[blk]).transpose(1, 2, 3, 0), Gy.transpose(1, 2, 0, 3))
                gre[blk] = gr.real
                gim[blk] = gr.imag
            if Xbar is not None:
                xb = np.matmul(Gy.transpose(1, 2, 0, 3), np.conj(R[blk]).transpose(0, 1, 3, 2))
                Xbar[:, rs] = xb.transpose(2, 0, 1, 3)
        gx = None
        if Xbar is not None:
            Xbar /= c
            gx = hw * sfft.irfft(sfft.ifft(Xbar, axis=1), n=W, axis=2)
        return gx, gre, gim

    return _node(out, (x, r_re, r_im), bw)


def spectral_conv(field, r_re, r_im) -> Tensor:
    """Composed reference path: full complex FFT, mode filter, complex
    multiply on paired real buffers, inverse FFT. Same contract as
    :func:`spectral_conv2d`; used to cross-check the fused kernel."""
    from .tensor import add, concat, einsum, mul, pad, sub

    field, r_re, r_im = as_tensor(field), as_tensor(r_re), as_tensor(r_im)
    B, H, W, cin = field.shape
    m1, m2 = r_re.shape[1], r_re.shape[2]
    if m1 > H // 2 or m2 > W // 2:
        raise ConfigError(f"modes ({m1}, {m2}) exceed Nyquist for grid {H}x{W}")
    spec = fft_nd(field, axes=(1, 2))
    parts_re, parts_im = [], []
    for blk, rs in enumerate((slice(0, m1), slice(H - m1, H))):
        xr = spec.re[:, rs, :m2, :]
        xi = spec.im[:, rs, :m2, :]
        rr, ri = r_re[blk], r_im[blk]
        parts_re.append(sub(einsum("bxyi,xyio->bxyo", xr, rr), einsum("bxyi,xyio->bxyo", xi, ri)))
        parts_im.append(add(einsum("bxyi,xyio->bxyo", xr, ri), einsum("bxyi,xyio->bxyo", xi, rr)))
    # One-sided spectrum in ky: interior columns stand for their conjugate
    # partners too, so they count twice under the real projection.
    c = _half_weights(W, m2)[None, None, :, None]

    def assemble(parts):
        top = parts[0]
        if H > 2 * m1:
            top = pad(top, ((0, 0), (0, H - 2 * m1), (0, 0), (0, 0)))
        full = concat([top, parts[1]], axis=1)
        return pad(mul(full, c), ((0, 0), (0, 0), (0, W - m2), (0, 0)))

    return ifft_nd(ComplexSpectrum(assemble(parts_re), assemble(parts_im), (1, 2)))


# -------------------------------------------------------- spectral derivative
def _derivative_multiplier(n: int, length: float, order: int) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=length / n)
    mult = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[-1] = 0.0
    return mult


def spectral_derivative(u, axis: int, order: int, length: float) -> Tensor:
    """``d^order u / dx^order`` along ``axis`` of a periodic field of
    period ``length``, by multiplication with (ik)^order in Fourier space."""
    u = as_tensor(u)
    axis = axis % u.ndim
    n = u.shape[axis]
    check_extents(u.shape, (axis,))
    if order < 1:
        raise ConfigError(f"derivative order must be >= 1, got {order}")
    mult = _derivative_multiplier(n, length, order)
    shape = [1] * u.ndim
    shape[axis] = mult.size
    mult = mult.reshape(shape)

    def apply(a):
        return sfft.irfft(sfft.rfft(a, axis=axis) * mult, n=n, axis=axis)

    sign = -1.0 if order % 2 else 1.0
    return _node(apply(u.data), (u,), lambda g: (sign * apply(g),))
