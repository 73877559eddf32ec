"""Interchange-format I/O implemented against the published evaluation-toolkit
contracts: PMAP v1 probability rasters, strict 0/255 mask PNGs, and the
manifest v1 JSON schema. This package deliberately shares no code with the
toolkit; the byte layouts below are the interface.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

PMAP_MAGIC = b"PMAP"
PMAP_VERSION = 1
_HEADER = struct.Struct("<4sBIIB3s")


def write_pmap(values: np.ndarray, path: str | Path) -> None:
    """Write an (h, w) array of hand probabilities as a PMAP v1 file."""
    if values.ndim != 2:
        raise ValueError(f"expected a 2-d probability array, got shape {values.shape}")
    payload = np.ascontiguousarray(values, dtype="<f4")
    if not np.isfinite(payload).all() or payload.min() < 0.0 or payload.max() > 1.0:
        raise ValueError("probabilities must be finite and in [0, 1]")
    h, w = values.shape
    header = _HEADER.pack(PMAP_MAGIC, PMAP_VERSION, w, h, 1, b"\x00\x00\x00")
    Path(path).write_bytes(header + payload.tobytes())


def read_pmap(path: str | Path) -> np.ndarray:
    """Read a PMAP v1 file back into an (h, w) float32 array (used by tests)."""
    raw = Path(path).read_bytes()
    magic, version, w, h, channels, _ = _HEADER.unpack(raw[: _HEADER.size])
    if magic != PMAP_MAGIC or version != PMAP_VERSION or channels != 1:
        raise ValueError(f"{path}: not a PMAP v1 single-channel file")
    return np.frombuffer(raw[_HEADER.size :], dtype="<f4").reshape(h, w)


def read_mask(path: str | Path) -> np.ndarray:
    """Load a 0/255 mask PNG as a boolean array."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    stray = set(np.unique(arr)) - {0, 255}
    if stray:
        raise ValueError(f"{path}: mask has non-binary values {sorted(stray)}")
    return arr == 255


def read_image(path: str | Path) -> np.ndarray:
    """Load an RGB image as (h, w, 3) float32 in [0, 1]."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0


def load_manifest(path: str | Path) -> dict:
    path = Path(path)
    doc = json.loads(path.read_text())
    if doc.get("version") != 1:
        raise ValueError(f"{path}: unsupported manifest version {doc.get('version')!r}")
    doc["_base_dir"] = path.parent
    return doc
