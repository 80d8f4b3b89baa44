"""Binary archive of named float32 arrays, used for checkpoints and caches.

Layout (all integers little-endian):

    magic         10 bytes  b"ABSA-CKPT\\0"
    version       1 byte    currently 1
    entry count   uint32
    per entry:
        name length   uint16
        name          UTF-8 bytes
        rank          uint8
        extents       rank x uint32
        values        product(extents) x float32, C order

Model checkpoints pair the archive with a ``<path>.meta.json`` sidecar
describing how to rebuild the model (architecture, dimensions, input
mode). Transfer-row caches reuse the same archive with one entry per
sentence id.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"ABSA-CKPT\x00"
VERSION = 1


def save_archive(path, entries: Mapping[str, np.ndarray]) -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", VERSION))
        fh.write(struct.pack("<I", len(entries)))
        for name, values in entries.items():
            arr = np.ascontiguousarray(values, dtype="<f4")
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValueError(f"entry name too long: {name[:40]}...")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            for extent in arr.shape:
                fh.write(struct.pack("<I", extent))
            fh.write(arr.tobytes(order="C"))


def load_archive(path) -> dict[str, np.ndarray]:
    path = Path(path)
    blob = path.read_bytes()
    view = memoryview(blob)
    if blob[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not an ABSA-CKPT archive")
    offset = len(MAGIC)

    def unpack(fmt):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(blob):
            raise ValueError(f"{path}: truncated archive at byte {offset}")
        out = struct.unpack_from(fmt, view, offset)
        offset += size
        return out

    (version,) = unpack("<B")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported archive version {version}")
    (count,) = unpack("<I")
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = unpack("<H")
        if offset + name_len > len(blob):
            raise ValueError(f"{path}: truncated archive at byte {offset}")
        name = bytes(view[offset : offset + name_len]).decode("utf-8")
        offset += name_len
        (rank,) = unpack("<B")
        shape = tuple(unpack(f"<{rank}I")) if rank else ()
        size = int(np.prod(shape)) if shape else 1
        nbytes = 4 * size
        if offset + nbytes > len(blob):
            raise ValueError(f"{path}: truncated values for entry {name!r}")
        arr = np.frombuffer(view, dtype="<f4", count=size, offset=offset).reshape(shape)
        offset += nbytes
        entries[name] = arr.copy()
    if offset != len(blob):
        raise ValueError(f"{path}: {len(blob) - offset} trailing bytes")
    return entries


def save_checkpoint(path, values: Mapping[str, np.ndarray], meta: dict) -> None:
    """Archive plus a JSON sidecar describing the model it belongs to."""
    save_archive(path, values)
    sidecar = Path(str(path) + ".meta.json")
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    values = load_archive(path)
    sidecar = Path(str(path) + ".meta.json")
    if not sidecar.exists():
        raise FileNotFoundError(f"missing checkpoint sidecar {sidecar}")
    meta = json.loads(sidecar.read_text(encoding="utf-8"))
    return values, meta
