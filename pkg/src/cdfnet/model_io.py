"""Binary container for named float64 tensors plus a text config block.

Layout (all integers little-endian):

    magic   4 bytes  b"CDFN"
    version u32      currently 1
    count   u32      number of tensors
    count * [ name_len u32, name bytes (utf-8),
              ndim u32, ndim * (dim u64),
              payload: prod(dims) little-endian float64 ]
    config_len u64, config bytes (utf-8)

Everything is 64-bit floating point, so save/load round-trips are
bit-exact and language neutral.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError

MAGIC = b"CDFN"
VERSION = 1


def write_container(path, tensors: dict[str, np.ndarray], config_text: str = "") -> None:
    """Write named tensors and a trailing text block; order is preserved."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(tensors)))
        for name, tensor in tensors.items():
            arr = np.ascontiguousarray(tensor, dtype="<f8")
            name_bytes = name.encode("utf-8")
            fh.write(struct.pack("<I", len(name_bytes)))
            fh.write(name_bytes)
            fh.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(arr.tobytes())
        config_bytes = config_text.encode("utf-8")
        fh.write(struct.pack("<Q", len(config_bytes)))
        fh.write(config_bytes)


def read_container(path) -> tuple[dict[str, np.ndarray], str]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        version = _read_struct(fh, path, "<I")[0]
        if version != VERSION:
            raise FormatError(
                f"{path}: unsupported container version {version}, expected {VERSION}"
            )
        count = _read_struct(fh, path, "<I")[0]
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            name_len = _read_struct(fh, path, "<I")[0]
            name = _read_exact(fh, path, name_len).decode("utf-8")
            ndim = _read_struct(fh, path, "<I")[0]
            shape = tuple(
                _read_struct(fh, path, "<Q")[0] for _ in range(ndim)
            )
            n_items = int(np.prod(shape, dtype=np.int64)) if shape else 1
            payload = _read_exact(fh, path, n_items * 8)
            tensors[name] = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
        config_len = _read_struct(fh, path, "<Q")[0]
        config_text = _read_exact(fh, path, config_len).decode("utf-8")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after config block")
    return tensors, config_text


def _read_exact(fh, path, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"{path}: truncated container (wanted {n} bytes, got {len(data)})")
    return data


def _read_struct(fh, path, fmt: str):
    return struct.unpack(fmt, _read_exact(fh, path, struct.calcsize(fmt)))
