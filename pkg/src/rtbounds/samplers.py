"""
Gaussian random tensor ensembles.

Four classes are supported:

- ``iid``: every entry an independent standard normal.
- ``symmetric``: one draw per permutation orbit of an index tuple with
  variance d / card(orbit), copied to the whole orbit. For d = 2 this is the
  Gaussian orthogonal ensemble.
- ``partially_symmetric``: (m, n, m, n) tensors with
  A_ijkl = A_kjil = A_ilkj = A_klij, one draw per orbit with variance
  2 / card(orbit).
- ``piezoelectric``: (n, n, n) tensors with A_ijk = A_ikj, off-diagonal
  (j != k) entries N(0, 1) and A_ijj ~ N(0, 2).

Orbit structure is computed once per class and cached; a sample is a
single vector of normals gathered onto the full index box, so copies
within an orbit are bit-identical.
"""

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Any, Optional, Sequence

import numpy as np

from rtbounds.kinds import TensorKind
from rtbounds.tensor import Shape, ShapeError, Tensor

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class InvalidClassError(ValueError):
    pass


def _splitmix64(x: int) -> int:
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class SeedSpec:
    """
    A (master seed, stream index) pair naming one random substream.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            value = getattr(self, name)
            if not 0 <= int(value) <= MASK64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer")
            object.__setattr__(self, name, int(value))

    @property
    def substream_seed(self) -> int:
        # Adding (index + 1) * gamma is injective in the index and the
        # splitmix64 finalizer is a bijection on 64-bit words.
        mixed = self.master_seed + (self.stream_index + 1) * GOLDEN_GAMMA
        return _splitmix64(mixed)

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self.substream_seed)

    def child(self, index: int) -> "SeedSpec":
        """A further substream keyed off this one."""
        return derive_substream(self.substream_seed, index)


def derive_substream(master_seed: int, trial_index: int) -> SeedSpec:
    return SeedSpec(master_seed=master_seed, stream_index=trial_index)


@dataclass(frozen=True)
class TensorClass:
    """
    A Gaussian ensemble and its size parameters.

    ``dims`` always holds the full tensor shape; use the named constructors
    to build consistent instances.
    """

    kind: TensorKind
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        object.__setattr__(self, "dims", dims)
        try:
            Shape(dims)
        except ShapeError as e:
            raise InvalidClassError(str(e)) from e

        if self.kind is TensorKind.symmetric and len(set(dims)) != 1:
            raise InvalidClassError(
                f"Symmetric tensors need equal dimensions, got {dims}"
            )
        if self.kind is TensorKind.partially_symmetric and (
            len(dims) != 4 or dims[0] != dims[2] or dims[1] != dims[3]
        ):
            raise InvalidClassError(
                f"Partially symmetric tensors have shape (m, n, m, n), "
                f"got {dims}"
            )
        if self.kind is TensorKind.piezoelectric and (
            len(dims) != 3 or len(set(dims)) != 1
        ):
            raise InvalidClassError(
                f"Piezoelectric tensors have shape (n, n, n), got {dims}"
            )

    def __str__(self):
        return f"{self.kind.name.replace('_', '-')}[{self.shape}]"

    @classmethod
    def iid(cls, dims: Sequence[int]) -> "TensorClass":
        return cls(TensorKind.iid, tuple(dims))

    @classmethod
    def symmetric(cls, order: int, n: int) -> "TensorClass":
        if order < 2:
            raise InvalidClassError(f"Order must be at least 2, got {order}")
        return cls(TensorKind.symmetric, (n,) * order)

    @classmethod
    def partially_symmetric(cls, m: int, n: int) -> "TensorClass":
        return cls(TensorKind.partially_symmetric, (m, n, m, n))

    @classmethod
    def piezoelectric(cls, n: int) -> "TensorClass":
        return cls(TensorKind.piezoelectric, (n, n, n))

    @property
    def shape(self) -> Shape:
        return Shape(self.dims)

    @property
    def order(self) -> int:
        return len(self.dims)

    def to_dict(self) -> dict[str, Any]:
        kind = self.kind.name.replace("_", "-")
        if self.kind is TensorKind.symmetric:
            return {"kind": kind, "order": self.order, "n": self.dims[0]}
        if self.kind is TensorKind.partially_symmetric:
            return {"kind": kind, "m": self.dims[0], "n": self.dims[1]}
        if self.kind is TensorKind.piezoelectric:
            return {"kind": kind, "n": self.dims[0]}
        return {"kind": kind, "dims": list(self.dims)}

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "TensorClass":
        try:
            kind = TensorKind[str(payload["kind"]).replace("-", "_").lower()]
            if kind is TensorKind.symmetric:
                return cls.symmetric(payload["order"], payload["n"])
            if kind is TensorKind.partially_symmetric:
                return cls.partially_symmetric(payload["m"], payload["n"])
            if kind is TensorKind.piezoelectric:
                return cls.piezoelectric(payload["n"])
            return cls.iid(payload["dims"])
        except KeyError as e:
            raise InvalidClassError(
                f"Tensor class description is missing {e}"
            ) from e


def multiset_orbit_card(index_tuple: Sequence[int]) -> int:
    """
    Number of distinct permutations of an index tuple,
    d! / prod(multiplicity!).
    """
    multiplicities = Counter(index_tuple).values()
    return math.factorial(len(index_tuple)) // math.prod(
        math.factorial(k) for k in multiplicities
    )


def partial_sym_orbit(
    i: int, j: int, k: int, l: int  # noqa: E741
) -> frozenset:
    """
    The orbit of (i, j, k, l) under the partial symmetries of an
    (m, n, m, n) tensor.
    """
    return frozenset(
        {(i, j, k, l), (k, j, i, l), (i, l, k, j), (k, l, i, j)}
    )


@dataclass(frozen=True)
class _OrbitLayout:
    """
    Maps each flat entry to the orbit representative it copies and holds
    the standard deviation of every representative.
    """

    representative: np.ndarray
    scales: np.ndarray


def _layout_from_keys(keys: np.ndarray, variances: np.ndarray):
    # np.unique sorts the canonical keys, fixing a deterministic draw order.
    _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    return _OrbitLayout(
        representative=inverse.reshape(-1),
        scales=np.sqrt(variances[first]),
    )


@lru_cache(maxsize=64)
def _orbit_layout(tensor_class: TensorClass) -> Optional[_OrbitLayout]:
    dims = tensor_class.dims
    box = np.indices(dims).reshape(len(dims), -1).T

    if tensor_class.kind is TensorKind.symmetric:
        d = len(dims)
        canonical = np.sort(box, axis=1)
        keys = np.ravel_multi_index(canonical.T, dims)
        cards = np.array([multiset_orbit_card(row) for row in canonical])
        return _layout_from_keys(keys, d / cards)

    if tensor_class.kind is TensorKind.partially_symmetric:
        keys = np.empty(len(box), dtype=np.int64)
        variances = np.empty(len(box))
        for pos, idx in enumerate(box):
            orbit = partial_sym_orbit(*(int(v) for v in idx))
            keys[pos] = np.ravel_multi_index(min(orbit), dims)
            variances[pos] = 2.0 / len(orbit)
        return _layout_from_keys(keys, variances)

    if tensor_class.kind is TensorKind.piezoelectric:
        i, j, k = box.T
        lo, hi = np.minimum(j, k), np.maximum(j, k)
        keys = np.ravel_multi_index((i, lo, hi), dims)
        variances = np.where(j == k, 2.0, 1.0)
        return _layout_from_keys(keys, variances)

    return None


def sample(tensor_class: TensorClass, seed: SeedSpec) -> Tensor:
    """
    Draw one tensor from ``tensor_class`` using the substream named by
    ``seed``. The same (class, seed) pair always yields the same tensor.
    """
    rng = seed.generator()
    layout = _orbit_layout(tensor_class)
    if layout is None:
        return Tensor(rng.standard_normal(tensor_class.dims))

    draws = rng.standard_normal(layout.scales.size) * layout.scales
    return Tensor(draws[layout.representative].reshape(tensor_class.dims))


def orbit_representatives(tensor_class: TensorClass) -> list[tuple[int, ...]]:
    """Canonical index tuples, one per independently drawn entry."""
    layout = _orbit_layout(tensor_class)
    dims = tensor_class.dims
    if layout is None:
        return [tuple(idx) for idx in product(*map(range, dims))]
    _, first = np.unique(layout.representative, return_index=True)
    return [
        tuple(int(v) for v in np.unravel_index(pos, dims)) for pos in first
    ]


def entry_variance(tensor_class: TensorClass, index: Sequence[int]) -> float:
    """The variance the ensemble assigns to the entry at ``index``."""
    layout = _orbit_layout(tensor_class)
    if layout is None:
        return 1.0
    pos = np.ravel_multi_index(tuple(index), tensor_class.dims)
    return float(layout.scales[layout.representative[pos]] ** 2)
