"""
Dense tensor representation and the multilinear algebra every spectral
functional is built on.

Tensors are stored row-major (last index fastest) as 64-bit floats and are
immutable once constructed, so they may be shared freely between threads and
pickled to worker processes.
"""

import math
import sys
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Optional, Sequence

import deal
import numpy as np


class ShapeError(ValueError):
    pass


class ShapeMismatchError(ValueError):
    pass


class NonFiniteError(ValueError):
    pass


# Upper bound on addressable float64 elements.
MAX_ELEMENTS = sys.maxsize // 8


@dataclass(frozen=True)
class Shape:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) < 2:
            raise ShapeError(f"Tensor order must be at least 2, got {dims}")
        if any(n < 1 for n in dims):
            raise ShapeError(f"Every dimension must be positive, got {dims}")
        if math.prod(dims) > MAX_ELEMENTS:
            raise ShapeError(f"Shape {dims} exceeds addressable memory")
        object.__setattr__(self, "dims", dims)

    def __iter__(self):
        return iter(self.dims)

    def __len__(self):
        return len(self.dims)

    def __getitem__(self, mode: int) -> int:
        return self.dims[mode]

    def __str__(self):
        return "x".join(str(n) for n in self.dims)

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)


@dataclass(frozen=True, eq=False)
class Tensor:
    """
    A dense d-way real array.

    The wrapped array is copied into a C-contiguous float64 buffer and
    marked read-only. Construction rejects NaN and infinite entries.
    """

    data: np.ndarray

    def __post_init__(self):
        array = np.array(self.data, dtype=np.float64, order="C", copy=True)
        Shape(array.shape)
        if not np.all(np.isfinite(array)):
            raise NonFiniteError("Tensor entries must be finite")
        array.setflags(write=False)
        object.__setattr__(self, "data", array)

    def __repr__(self):
        return f"<Tensor {self.shape}>"

    def __eq__(self, other):
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(
            np.array_equal(self.data, other.data)
        )

    def __add__(self, other: "Tensor") -> "Tensor":
        return Tensor(self.data + other.data)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return Tensor(self.data - other.data)

    def __rmul__(self, scalar: float) -> "Tensor":
        return Tensor(float(scalar) * self.data)

    @classmethod
    def from_flat(cls, shape: Shape, flat: Sequence[float]) -> "Tensor":
        flat_array = np.asarray(flat, dtype=np.float64)
        if flat_array.size != shape.size:
            raise ShapeMismatchError(
                f"{flat_array.size} values cannot fill shape {shape}"
            )
        return cls(flat_array.reshape(shape.dims))

    @classmethod
    def zeros(cls, shape: Shape) -> "Tensor":
        return cls(np.zeros(shape.dims))

    @classmethod
    def rank_one(cls, vectors: Iterable[np.ndarray], scale=1.0) -> "Tensor":
        outer = reduce(np.multiply.outer, [np.asarray(v) for v in vectors])
        return cls(scale * outer)

    @property
    def shape(self) -> Shape:
        return Shape(self.data.shape)

    @property
    def order(self) -> int:
        return self.data.ndim

    @property
    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def max_abs_entry(self) -> float:
        return float(np.max(np.abs(self.data)))


@dataclass(frozen=True, eq=False)
class VectorTuple:
    """One real vector per tensor mode, u_1, ..., u_d."""

    vectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        vectors = []
        for v in self.vectors:
            array = np.array(v, dtype=np.float64, copy=True).reshape(-1)
            array.setflags(write=False)
            vectors.append(array)
        object.__setattr__(self, "vectors", tuple(vectors))

    def __iter__(self):
        return iter(self.vectors)

    def __len__(self):
        return len(self.vectors)

    def __getitem__(self, mode: int) -> np.ndarray:
        return self.vectors[mode]

    @classmethod
    def repeated(cls, vector: np.ndarray, times: int) -> "VectorTuple":
        return cls(tuple(vector for _ in range(times)))

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(v.size for v in self.vectors)

    def check_shape(self, shape: Shape, skip_mode=None):
        if len(self.vectors) != shape.order:
            raise ShapeMismatchError(
                f"Expected {shape.order} vectors for shape {shape}, "
                f"got {len(self.vectors)}"
            )
        for mode, (v, n) in enumerate(zip(self.vectors, shape)):
            if mode != skip_mode and v.size != n:
                raise ShapeMismatchError(
                    f"Vector {mode} has length {v.size}, mode has size {n}"
                )

    def is_unit(self, p: float = 2.0, atol: float = 1e-12) -> bool:
        return all(abs(lp_norm(v, p) - 1.0) <= atol for v in self.vectors)

    def normalized(self, p: float = 2.0) -> "VectorTuple":
        return VectorTuple(tuple(v / lp_norm(v, p) for v in self.vectors))


@deal.pre(
    lambda shape, multi_index: len(multi_index) == shape.order
    and all(0 <= i < n for i, n in zip(multi_index, shape)),
    message="Multi-index out of range for shape",
)
def flat_index(shape: Shape, multi_index: Sequence[int]) -> int:
    """Row-major offset of a multi-index."""
    return int(np.ravel_multi_index(tuple(multi_index), shape.dims))


def contract_modes(
    data: np.ndarray, u: Sequence[np.ndarray], skip: Optional[int] = None
):
    """
    Unchecked contraction of a raw array with one vector per mode, leaving
    mode ``skip`` free when given.
    """
    # Contract from the last mode down so earlier axes keep their positions.
    result = data
    for mode in reversed(range(data.ndim)):
        if mode == skip:
            continue
        result = np.tensordot(result, u[mode], axes=([mode], [0]))
    return result


def rank1_value(t: Tensor, u: VectorTuple) -> float:
    """
    Evaluate the multilinear form <A, u_1 ⊗ ... ⊗ u_d>.
    """
    u.check_shape(t.shape)
    return float(contract_modes(t.data, u))


def contract_except(t: Tensor, u: VectorTuple, mode: int) -> np.ndarray:
    """
    Contract the tensor with every vector except the one at ``mode``.

    The result is the gradient of the multilinear form with respect to
    ``u[mode]``, so ``<contract_except(t, u, j), u[j]> == rank1_value(t, u)``.
    Only vectors at other modes need valid lengths.
    """
    if not 0 <= mode < t.order:
        raise ShapeMismatchError(f"Mode {mode} invalid for order {t.order}")
    u.check_shape(t.shape, skip_mode=mode)
    return np.asarray(contract_modes(t.data, u, skip=mode), dtype=np.float64)


@deal.pre(lambda v, p: p >= 1, message="lp_norm requires p >= 1")
def lp_norm(v: np.ndarray, p: float) -> float:
    array = np.abs(np.asarray(v, dtype=np.float64)).reshape(-1)
    if array.size == 0:
        return 0.0
    scale = float(array.max())
    if scale == 0.0:
        return 0.0
    # Scaling by the largest entry keeps |v_i|^p in range for large p.
    return scale * float(np.sum((array / scale) ** p) ** (1.0 / p))


def frobenius_norm(t: Tensor) -> float:
    return lp_norm(t.flat, 2.0)


def is_symmetric(t: Tensor, atol: float = 1e-12) -> bool:
    """True when every transpose of the tensor agrees with it."""
    n = t.data.shape[0]
    if any(k != n for k in t.data.shape):
        return False
    scale = atol * max(1.0, t.max_abs_entry())
    # Adjacent transpositions generate the full symmetric group.
    for mode in range(t.order - 1):
        axes = list(range(t.order))
        axes[mode], axes[mode + 1] = axes[mode + 1], axes[mode]
        if np.max(np.abs(t.data - t.data.transpose(axes))) > scale:
            return False
    return True


def is_partially_symmetric(t: Tensor, atol: float = 1e-12) -> bool:
    """Checks A_ijkl = A_kjil = A_ilkj for an (m, n, m, n) tensor."""
    dims = t.data.shape
    if len(dims) != 4 or dims[0] != dims[2] or dims[1] != dims[3]:
        return False
    scale = atol * max(1.0, t.max_abs_entry())
    for axes in ((2, 1, 0, 3), (0, 3, 2, 1)):
        if np.max(np.abs(t.data - t.data.transpose(axes))) > scale:
            return False
    return True


def is_piezoelectric(t: Tensor, atol: float = 1e-12) -> bool:
    """Checks A_ijk = A_ikj for an (n, n, n) tensor."""
    dims = t.data.shape
    if len(dims) != 3 or len(set(dims)) != 1:
        return False
    scale = atol * max(1.0, t.max_abs_entry())
    diff = t.data - t.data.transpose(0, 2, 1)
    return bool(np.max(np.abs(diff)) <= scale)
