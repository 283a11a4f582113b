"""Dense 4-D tensors in NCHW layout.

Every activation and weight buffer in the engine is a :class:`Tensor`: an
immutable wrapper over a C-contiguous float32 numpy array of shape
``(n, c, h, w)``.  The flat buffer index of element ``(n, c, h, w)`` is
``((n*C + c)*H + h)*W + w``, i.e. plain row-major order, which is what a
C-contiguous numpy array already guarantees.

Tensors are immutable after construction; all operations return fresh
copies, never views, so concurrent readers are always safe.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .errors import ShapeError


class Shape4(NamedTuple):
    """Batch, channel, height, width extents of a tensor."""

    n: int
    c: int
    h: int
    w: int

    @property
    def count(self) -> int:
        """Total number of elements."""
        return self.n * self.c * self.h * self.w

    def index(self, n: int, c: int, h: int, w: int) -> int:
        """Flat buffer offset of element (n, c, h, w)."""
        return ((n * self.c + c) * self.h + h) * self.w + w


class Tensor:
    """Immutable float32 NCHW array."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        arr = np.array(data, dtype=np.float32, order="C", copy=True)
        if arr.ndim != 4:
            raise ShapeError(f"tensor must be 4-D (n,c,h,w), got ndim={arr.ndim}")
        if min(arr.shape) < 1:
            raise ShapeError(f"tensor dims must all be >= 1, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Tensor":
        # Internal fast path for freshly allocated arrays: no copy, just freeze.
        t = object.__new__(cls)
        if arr.dtype != np.float32 or not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr, dtype=np.float32)
        if arr.ndim != 4:
            raise ShapeError(f"tensor must be 4-D, got ndim={arr.ndim}")
        arr.flags.writeable = False
        object.__setattr__(t, "data", arr)
        return t

    @property
    def shape(self) -> Shape4:
        return Shape4(*self.data.shape)

    @property
    def flat(self) -> np.ndarray:
        """The backing buffer in layout order (read-only view)."""
        return self.data.reshape(-1)

    def at(self, n: int, c: int, h: int, w: int) -> float:
        return float(self.data[n, c, h, w])

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    def __repr__(self) -> str:
        n, c, h, w = self.data.shape
        return f"Tensor(n={n}, c={c}, h={h}, w={w})"


def tensor_new(shape: Shape4 | tuple, fill: float | Sequence[float] | np.ndarray = 0.0) -> Tensor:
    """Create a tensor of `shape`, filled with a scalar or an explicit buffer.

    A buffer must contain exactly ``shape.count`` values; it is consumed in
    layout order.
    """
    shape = Shape4(*shape)
    if min(shape) < 1:
        raise ShapeError(f"all dims must be >= 1, got {tuple(shape)}")
    if np.isscalar(fill):
        arr = np.full(tuple(shape), float(fill), dtype=np.float32)
    else:
        buf = np.asarray(fill, dtype=np.float32).reshape(-1)
        if buf.size != shape.count:
            raise ShapeError(
                f"buffer length {buf.size} does not match shape {tuple(shape)} "
                f"({shape.count} elements)"
            )
        arr = buf.reshape(tuple(shape)).copy()
    return Tensor._wrap(arr)


def slice_channels(t: Tensor, lo: int, hi: int) -> Tensor:
    """Copy channels ``[lo, hi)`` of `t` into a new tensor."""
    c = t.shape.c
    if not (0 <= lo < hi <= c):
        raise ShapeError(f"channel slice [{lo}, {hi}) out of range for C={c}")
    return Tensor._wrap(np.ascontiguousarray(t.data[:, lo:hi]))


def concat_channels(parts: Sequence[Tensor]) -> Tensor:
    """Concatenate tensors along the channel axis, in list order."""
    if not parts:
        raise ShapeError("concat_channels needs at least one tensor")
    n, _, h, w = parts[0].shape
    for p in parts[1:]:
        pn, _, ph, pw = p.shape
        if (pn, ph, pw) != (n, h, w):
            raise ShapeError(
                f"concat mismatch: expected n/h/w {(n, h, w)}, got {(pn, ph, pw)}"
            )
    if len(parts) == 1:
        return Tensor._wrap(parts[0].data.copy())
    return Tensor._wrap(np.concatenate([p.data for p in parts], axis=1))
