"""
On-disk formats: the RTB1 binary tensor file and the optional solver
defaults file.

RTB1 layout (all little-endian):

    bytes 0-3   magic ``RTB1``
    byte  4     order d (unsigned 8-bit)
    next 4*d    dims n_1..n_d (unsigned 32-bit)
    remainder   prod(n_j) IEEE-754 doubles, row-major
"""

import os
import struct
from pathlib import Path
from typing import Any, Union

import configurables as conf
import numpy as np
from loguru import logger

from rtbounds.tensor import Shape, ShapeError, Tensor

MAGIC = b"RTB1"
SOLVER_DEFAULTS: dict[str, Any] = {
    "restarts": 32,
    "max_iters": 500,
    "tol": 1e-10,
}

PathLike = Union[str, "os.PathLike[str]"]


class TensorFormatError(ValueError):
    pass


class MalformedHeaderError(TensorFormatError):
    pass


class LengthMismatchError(TensorFormatError):
    pass


class NonFinitePayloadError(TensorFormatError):
    pass


def encode_tensor(t: Tensor) -> bytes:
    dims = t.shape.dims
    header = MAGIC + struct.pack(f"<B{len(dims)}I", len(dims), *dims)
    return header + t.data.astype("<f8").tobytes(order="C")


def decode_tensor(blob: bytes) -> Tensor:
    if len(blob) < 5 or blob[:4] != MAGIC:
        raise MalformedHeaderError("Missing RTB1 magic bytes")
    order = blob[4]
    header_end = 5 + 4 * order
    if order < 2 or len(blob) < header_end:
        raise MalformedHeaderError(f"Invalid tensor order {order} in header")
    dims = struct.unpack(f"<{order}I", blob[5:header_end])
    try:
        shape = Shape(dims)
    except ShapeError as e:
        raise MalformedHeaderError(str(e)) from e

    payload = blob[header_end:]
    if len(payload) != 8 * shape.size:
        raise LengthMismatchError(
            f"Header declares {shape.size} values for shape {shape} but "
            f"payload holds {len(payload) / 8:g}"
        )
    values = np.frombuffer(payload, dtype="<f8")
    if not np.all(np.isfinite(values)):
        raise NonFinitePayloadError("Tensor payload contains NaN or Inf")
    return Tensor(values.reshape(shape.dims))


def write_tensor(t: Tensor, path: PathLike) -> None:
    Path(path).write_bytes(encode_tensor(t))
    logger.debug(f"Wrote {t} to {path}")


def read_tensor(path: PathLike) -> Tensor:
    t = decode_tensor(Path(path).read_bytes())
    logger.debug(f"Read {t} from {path}")
    return t


@conf.configurable("solver")
@conf.option("restarts", type=int, default=SOLVER_DEFAULTS["restarts"])
@conf.option("max_iters", type=int, default=SOLVER_DEFAULTS["max_iters"])
@conf.option("tol", type=float, default=SOLVER_DEFAULTS["tol"])
def _solver_defaults(restarts, max_iters, tol):
    return {"restarts": restarts, "max_iters": max_iters, "tol": tol}


def configure_solver(path: PathLike) -> dict:
    """
    Load solver defaults from a configuration file.

    Falls back to ``SOLVER_DEFAULTS`` when the file does not exist.
    """
    try:
        return _solver_defaults(os.path.expanduser(str(path)))
    except FileNotFoundError:
        return dict(SOLVER_DEFAULTS)
