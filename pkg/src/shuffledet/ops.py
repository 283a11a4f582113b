"""Numeric kernels over NCHW tensors.

Standard, grouped and depthwise convolution, channel shuffle, max/average
pooling, inference-mode batch norm, ReLU, and bilinear-sampled deformable
convolution.  All kernels are pure functions over immutable tensors and are
deterministic: the same inputs always produce bitwise-identical outputs.

Accumulation is float32 throughout.  The inner products are evaluated with
numpy's BLAS-backed contractions, whose summation order is fixed for a given
shape, so determinism holds run to run.

Padding semantics: zero padding for convolution, minus infinity for max
pooling (a window must contain at least one real tap), and average pooling
divides by the count of non-padded taps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .tensor import Tensor

__all__ = [
    "ConvParams",
    "BnParams",
    "conv2d",
    "depthwise_conv2d",
    "channel_shuffle",
    "max_pool",
    "avg_pool",
    "batch_norm",
    "relu",
    "add",
    "deformable_conv2d",
    "conv_output_dim",
]


@dataclass(frozen=True)
class ConvParams:
    """Weights and geometry of one convolution.

    `weights` is shaped (Cout, Cin/groups, k, k); `bias` is an optional
    length-Cout vector.
    """

    weights: Tensor
    bias: np.ndarray | None = None
    stride: int = 1
    pad: int = 0
    groups: int = 1

    def __post_init__(self):
        cout, _, kh, kw = self.weights.shape
        if kh != kw or kh < 1:
            raise ShapeError(f"kernel must be square and >= 1, got {kh}x{kw}")
        if self.stride < 1 or self.pad < 0 or self.groups < 1:
            raise ShapeError("stride must be >= 1, pad >= 0, groups >= 1")
        if cout % self.groups != 0:
            raise ShapeError(f"Cout={cout} not divisible by groups={self.groups}")
        if self.bias is not None and len(self.bias) != cout:
            raise ShapeError(f"bias length {len(self.bias)} != Cout {cout}")

    @property
    def cout(self) -> int:
        return self.weights.shape.n

    @property
    def cin_per_group(self) -> int:
        return self.weights.shape.c

    @property
    def k(self) -> int:
        return self.weights.shape.h


@dataclass(frozen=True)
class BnParams:
    """Per-channel inference batch-norm parameters."""

    gamma: np.ndarray
    beta: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    eps: float = 1e-5

    def __post_init__(self):
        c = len(self.gamma)
        for name in ("beta", "mean", "var"):
            if len(getattr(self, name)) != c:
                raise ShapeError(f"batch-norm vector '{name}' length != {c}")
        if np.any(np.asarray(self.var) < 0):
            raise ShapeError("variance must be non-negative")
        if self.eps < 0:
            raise ShapeError("eps must be non-negative")

    @classmethod
    def identity(cls, c: int) -> "BnParams":
        return cls(
            gamma=np.ones(c, np.float32),
            beta=np.zeros(c, np.float32),
            mean=np.zeros(c, np.float32),
            var=np.ones(c, np.float32),
            eps=0.0,
        )


def conv_output_dim(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


def _pad_spatial(arr: np.ndarray, pad: int, value: float = 0.0) -> np.ndarray:
    if pad == 0:
        return arr
    return np.pad(arr, ((0, 0), (0, 0), (pad, pad), (pad, pad)), constant_values=value)


def _windows(padded: np.ndarray, k: int, stride: int, ho: int, wo: int) -> np.ndarray:
    """Strided view of padded input: (n, c, k, k, ho, wo). Read-only."""
    n, c, _, _ = padded.shape
    sn, sc, sh, sw = padded.strides
    return np.lib.stride_tricks.as_strided(
        padded,
        shape=(n, c, k, k, ho, wo),
        strides=(sn, sc, sh, sw, sh * stride, sw * stride),
        writeable=False,
    )


def _check_conv_geometry(x: Tensor, p: ConvParams) -> tuple[int, int]:
    n, cin, h, w = x.shape
    if cin != p.cin_per_group * p.groups:
        raise ShapeError(
            f"input C={cin} != weights Cin/groups*groups = "
            f"{p.cin_per_group}*{p.groups}"
        )
    if cin % p.groups != 0:
        raise ShapeError(f"C={cin} not divisible by groups={p.groups}")
    ho = conv_output_dim(h, p.k, p.stride, p.pad)
    wo = conv_output_dim(w, p.k, p.stride, p.pad)
    if ho < 1 or wo < 1:
        raise ShapeError(f"empty conv output for input {h}x{w}, k={p.k}, "
                         f"stride={p.stride}, pad={p.pad}")
    return ho, wo


def conv2d(x: Tensor, p: ConvParams) -> Tensor:
    """2-D convolution with zero padding and channel groups.

    Output channels of group g read only the input channels of group g.
    """
    n, cin, h, w = x.shape
    ho, wo = _check_conv_geometry(x, p)
    g, cpg, cout, k = p.groups, p.cin_per_group, p.cout, p.k
    opg = cout // g
    padded = _pad_spatial(x.data, p.pad)
    win = _windows(padded, k, p.stride, ho, wo)
    wmat = p.weights.data
    out = np.empty((n, cout, ho, wo), dtype=np.float32)
    for gi in range(g):
        wg = wmat[gi * opg:(gi + 1) * opg]          # (opg, cpg, k, k)
        xg = win[:, gi * cpg:(gi + 1) * cpg]        # (n, cpg, k, k, ho, wo)
        res = np.tensordot(wg, xg, axes=([1, 2, 3], [1, 2, 3]))
        out[:, gi * opg:(gi + 1) * opg] = np.moveaxis(res, 1, 0)
    if p.bias is not None:
        out += np.asarray(p.bias, np.float32).reshape(1, cout, 1, 1)
    return Tensor._wrap(out)


def depthwise_conv2d(x: Tensor, p: ConvParams) -> Tensor:
    """Depthwise convolution: one group per channel, channel i reads only
    channel i."""
    n, cin, h, w = x.shape
    if not (p.groups == cin == p.cout):
        raise ShapeError(
            f"depthwise requires groups == Cin == Cout, got groups={p.groups}, "
            f"Cin={cin}, Cout={p.cout}"
        )
    ho, wo = _check_conv_geometry(x, p)
    padded = _pad_spatial(x.data, p.pad)
    win = _windows(padded, p.k, p.stride, ho, wo)
    wmat = p.weights.data[:, 0]                     # (c, k, k)
    out = np.einsum("ckl,ncklhw->nchw", wmat, win, optimize=True)
    out = np.ascontiguousarray(out, dtype=np.float32)
    if p.bias is not None:
        out += np.asarray(p.bias, np.float32).reshape(1, cin, 1, 1)
    return Tensor._wrap(out)


def channel_shuffle(x: Tensor, g: int) -> Tensor:
    """Interleave channels across g groups (reshape-transpose permutation).

    Input channel c lands at output position (c mod (C/g))*g + c//(C/g).
    """
    n, c, h, w = x.shape
    if c % g != 0:
        raise ShapeError(f"C={c} not divisible by shuffle groups={g}")
    per = c // g
    out = x.data.reshape(n, g, per, h, w).transpose(0, 2, 1, 3, 4).reshape(n, c, h, w)
    return Tensor._wrap(np.ascontiguousarray(out))


def _check_pool_geometry(h: int, w: int, k: int, stride: int, pad: int) -> tuple[int, int]:
    if k < 1 or stride < 1 or pad < 0:
        raise ShapeError("pool needs k >= 1, stride >= 1, pad >= 0")
    if pad >= k:
        raise ShapeError(f"pad={pad} >= k={k} would create fully padded windows")
    ho = conv_output_dim(h, k, stride, pad)
    wo = conv_output_dim(w, k, stride, pad)
    if ho < 1 or wo < 1:
        raise ShapeError(f"empty pool output for {h}x{w}, k={k}, stride={stride}, pad={pad}")
    return ho, wo


def max_pool(x: Tensor, k: int, stride: int, pad: int = 0) -> Tensor:
    n, c, h, w = x.shape
    ho, wo = _check_pool_geometry(h, w, k, stride, pad)
    padded = _pad_spatial(x.data, pad, value=-np.inf)
    win = _windows(padded, k, stride, ho, wo)
    out = win.max(axis=(2, 3))
    return Tensor._wrap(np.ascontiguousarray(out))


def avg_pool(x: Tensor, k: int, stride: int, pad: int = 0) -> Tensor:
    """Average pooling; the mean is taken over non-padded taps only."""
    n, c, h, w = x.shape
    ho, wo = _check_pool_geometry(h, w, k, stride, pad)
    padded = _pad_spatial(x.data, pad)
    win = _windows(padded, k, stride, ho, wo)
    total = win.sum(axis=(2, 3))
    ones = _pad_spatial(np.ones((1, 1, h, w), np.float32), pad)
    counts = _windows(ones, k, stride, ho, wo).sum(axis=(2, 3))
    out = total / counts
    return Tensor._wrap(np.ascontiguousarray(out, dtype=np.float32))


def batch_norm(x: Tensor, p: BnParams) -> Tensor:
    n, c, h, w = x.shape
    if len(p.gamma) != c:
        raise ShapeError(f"batch-norm expects {len(p.gamma)} channels, input has {c}")
    gamma = np.asarray(p.gamma, np.float32)
    beta = np.asarray(p.beta, np.float32)
    mean = np.asarray(p.mean, np.float32)
    var = np.asarray(p.var, np.float32)
    scale = gamma / np.sqrt(var + np.float32(p.eps))
    shift = beta - mean * scale
    out = x.data * scale.reshape(1, c, 1, 1) + shift.reshape(1, c, 1, 1)
    return Tensor._wrap(out)


def relu(x: Tensor) -> Tensor:
    return Tensor._wrap(np.maximum(x.data, np.float32(0.0)))


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"add shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")
    return Tensor._wrap(a.data + b.data)


def deformable_conv2d(x: Tensor, offsets: Tensor, p: ConvParams) -> Tensor:
    """Convolution whose kernel taps sample at fractional offsets.

    `offsets` is shaped (n, 2*k*k, ho, wo): channels [2t] and [2t+1] hold the
    (dy, dx) displacement of kernel tap t (taps enumerated row-major).  Each
    tap samples the input at base + offset via 4-neighbor bilinear
    interpolation; lattice neighbors outside the input contribute zero, so a
    zero offset field reproduces plain zero-padded convolution.
    """
    n, cin, h, w = x.shape
    if p.groups != 1:
        raise ShapeError("deformable convolution supports groups=1 only")
    ho, wo = _check_conv_geometry(x, p)
    k = p.k
    on, oc, oh, ow = offsets.shape
    if oc != 2 * k * k:
        raise ShapeError(f"offset channels {oc} != 2*k*k = {2 * k * k}")
    if (on, oh, ow) != (n, ho, wo):
        raise ShapeError(
            f"offset field shape {(on, oh, ow)} != expected {(n, ho, wo)}"
        )

    k2 = k * k
    taps = np.arange(k2)
    ky = (taps // k).astype(np.float32)
    kx = (taps % k).astype(np.float32)
    off = offsets.data.reshape(n, k2, 2, ho, wo)
    base_y = (np.arange(ho, dtype=np.float32) * p.stride - p.pad)
    base_x = (np.arange(wo, dtype=np.float32) * p.stride - p.pad)
    # sample coordinates, shape (n, k2, ho, wo)
    py = off[:, :, 0] + base_y.reshape(1, 1, ho, 1) + ky.reshape(1, k2, 1, 1)
    px = off[:, :, 1] + base_x.reshape(1, 1, 1, wo) + kx.reshape(1, k2, 1, 1)

    y0 = np.floor(py)
    x0 = np.floor(px)
    fy = (py - y0).astype(np.float32)
    fx = (px - x0).astype(np.float32)
    y0 = y0.astype(np.int64)
    x0 = x0.astype(np.int64)

    sampled = np.zeros((n, cin, k2, ho, wo), dtype=np.float32)
    for dy_i, wy in ((0, 1.0 - fy), (1, fy)):
        yc = y0 + dy_i
        yv = (yc >= 0) & (yc < h)
        ycl = np.clip(yc, 0, h - 1)
        for dx_i, wx in ((0, 1.0 - fx), (1, fx)):
            xc = x0 + dx_i
            valid = yv & (xc >= 0) & (xc < w)
            xcl = np.clip(xc, 0, w - 1)
            weight = (wy * wx * valid).astype(np.float32)
            for b in range(n):
                vals = x.data[b][:, ycl[b], xcl[b]]      # (cin, k2, ho, wo)
                sampled[b] += vals * weight[b][None]

    wmat = p.weights.data.reshape(p.cout, cin, k2)
    out = np.einsum("ocl,nclhw->nohw", wmat, sampled, optimize=True)
    out = np.ascontiguousarray(out, dtype=np.float32)
    if p.bias is not None:
        out += np.asarray(p.bias, np.float32).reshape(1, p.cout, 1, 1)
    return Tensor._wrap(out)
