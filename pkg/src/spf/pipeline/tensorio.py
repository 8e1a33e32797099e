"""Binary tensor files.

Layout (all little-endian)::

    b"SPF0"            magic
    u16                format version (1)
    u16                rank
    u64 * rank         dims
    f32 * prod(dims)   row-major data
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ..errors import InvalidInput

MAGIC = b"SPF0"
VERSION = 1


def encode(array) -> bytes:
    a = np.ascontiguousarray(np.asarray(array, dtype="<f4"))
    head = MAGIC + struct.pack("<HH", VERSION, a.ndim) + struct.pack(f"<{a.ndim}Q", *a.shape)
    return head + a.tobytes(order="C")


def decode(buf: bytes) -> np.ndarray:
    if buf[:4] != MAGIC:
        raise InvalidInput("not an SPF0 tensor (bad magic)")
    version, rank = struct.unpack_from("<HH", buf, 4)
    if version != VERSION:
        raise InvalidInput(f"unsupported tensor version {version}")
    dims = struct.unpack_from(f"<{rank}Q", buf, 8)
    off = 8 + 8 * rank
    count = int(np.prod(dims)) if rank else 1
    if len(buf) != off + 4 * count:
        raise InvalidInput(f"tensor payload is {len(buf) - off} bytes, expected {4 * count}")
    return np.frombuffer(buf, dtype="<f4", count=count, offset=off).reshape(dims)


def atomic_write(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def save(path, array):
    atomic_write(path, encode(array))


def load(path) -> np.ndarray:
    return decode(Path(path).read_bytes())
