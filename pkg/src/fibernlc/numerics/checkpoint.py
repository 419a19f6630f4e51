"""Versioned binary container of named float64 tensors plus a JSON config echo.

Layout (all integers little-endian)::

    b"FNLCCKPT"  u32 version
    u32 config_len   config_len bytes of UTF-8 JSON
    u32 tensor_count
    per tensor: u32 name_len, name, u32 ndim, ndim * u64 dims, raw <f8 data
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from fibernlc.errors import ConfigError

MAGIC = b"FNLCCKPT"
VERSION = 1


def save_tensors(path: str | Path, tensors: dict[str, np.ndarray], config: dict) -> None:
    cfg = json.dumps(config, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(cfg)), cfg]
    parts.append(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        arr = np.array(tensors[name], dtype="<f8", order="C")  # keeps 0-d shapes
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_tensors(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    buf = Path(path).read_bytes()
    if buf[:8] != MAGIC:
        raise ConfigError(f"{path}: not a checkpoint file")
    pos = 8

    def take(fmt):
        nonlocal pos
        vals = struct.unpack_from(fmt, buf, pos)
        pos += struct.calcsize(fmt)
        return vals

    (version,) = take("<I")
    if version != VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version {version}")
    (cfg_len,) = take("<I")
    config = json.loads(buf[pos : pos + cfg_len].decode("utf-8"))
    pos += cfg_len
    (count,) = take("<I")
    tensors = {}
    for _ in range(count):
        (name_len,) = take("<I")
        name = buf[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (ndim,) = take("<I")
        shape = take(f"<{ndim}Q")
        size = int(np.prod(shape, dtype=np.int64))
        tensors[name] = np.frombuffer(buf, dtype="<f8", count=size, offset=pos).reshape(shape).copy()
        pos += size * 8
    return tensors, config
