"""Raster data model and bit-exact interchange formats.

Rasters are immutable after construction: the wrapped numpy arrays are
marked read-only, so instances are safe to share across threads.

PMAP binary layout (little-endian, 17-byte header + payload):

    magic    4 bytes  b"PMAP"
    version  u8       1
    width    u32
    height   u32
    channels u8       1
    reserved 3 bytes  zero
    payload  width*height float32, row-major, origin top-left

Masks are 8-bit single-channel PNG with 0 = background, 255 = hand.
Any other pixel value is an annotation-contract violation, never a
thing to threshold away.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import AmbiguousMaskError, DimensionError, FormatError, RangeError

PMAP_MAGIC = b"PMAP"
PMAP_VERSION = 1
_PMAP_HEADER = struct.Struct("<4sBIIB3s")
PMAP_HEADER_SIZE = _PMAP_HEADER.size  # 17 bytes


class Dims(NamedTuple):
    """Raster width/height in pixels; n_pixels is the N every mean divides by."""

    width: int
    height: int

    @property
    def n_pixels(self) -> int:
        return self.width * self.height


def _validate_dims(dims: Dims) -> None:
    if dims.width < 1 or dims.height < 1:
        raise RangeError(f"dims must be positive, got {dims.width}x{dims.height}")


def _freeze(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


def _check_shape(values: np.ndarray, dims: Dims, what: str) -> None:
    if values.shape != (dims.height, dims.width):
        raise DimensionError(
            f"{what} shape {values.shape} does not match dims {dims.width}x{dims.height}"
        )


def require_same_dims(a: Dims, b: Dims, context: str) -> None:
    """Fail before touching pixel data when two rasters disagree on size."""
    if a != b:
        raise DimensionError(f"{context}: {a.width}x{a.height} vs {b.width}x{b.height}")


@dataclass(frozen=True)
class ProbabilityMap:
    """Per-pixel hand probability; background probability is implicitly ``1 - v``.

    Values are float32 in the interchange format and may be float64 for
    in-memory results of ensemble arithmetic. Every value must lie in [0, 1].
    """

    dims: Dims
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        _validate_dims(self.dims)
        values = np.asarray(self.values)
        if values.dtype not in (np.float32, np.float64):
            values = values.astype(np.float64)
        _check_shape(values, self.dims, "probability map")
        bad = ~np.isfinite(values) | (values < 0.0) | (values > 1.0)
        if bad.any():
            idx = int(np.argmax(bad.ravel()))
            raise RangeError(
                f"probability out of [0, 1] at pixel {idx}: {values.ravel()[idx]!r}"
            )
        object.__setattr__(self, "values", _freeze(values))


@dataclass(frozen=True)
class GroundTruthMask:
    """Binary annotation raster; True marks hand pixels."""

    dims: Dims
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        _validate_dims(self.dims)
        values = np.asarray(self.values, dtype=bool)
        _check_shape(values, self.dims, "ground-truth mask")
        object.__setattr__(self, "values", _freeze(values))

    @property
    def n_hand(self) -> int:
        return int(np.count_nonzero(self.values))


@dataclass(frozen=True)
class PredictionMask:
    """Binary prediction raster; True marks predicted hand pixels."""

    dims: Dims
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        _validate_dims(self.dims)
        values = np.asarray(self.values, dtype=bool)
        _check_shape(values, self.dims, "prediction mask")
        object.__setattr__(self, "values", _freeze(values))


@dataclass(frozen=True)
class EntropyMap:
    """Per-pixel predictive entropy; bounded by log 2 in the configured base."""

    dims: Dims
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        _validate_dims(self.dims)
        values = np.asarray(self.values, dtype=np.float64)
        _check_shape(values, self.dims, "entropy map")
        bad = ~np.isfinite(values) | (values < 0.0)
        if bad.any():
            idx = int(np.argmax(bad.ravel()))
            raise RangeError(f"entropy negative or non-finite at pixel {idx}")
        object.__setattr__(self, "values", _freeze(values))


def write_pmap(pmap: ProbabilityMap, path: str | Path) -> None:
    """Serialize a probability map; the payload is always float32.

    Maps holding float64 values (e.g. fused ensemble outputs) are rounded
    to the nearest float32 on write; maps already in float32 round-trip
    bit-exactly.
    """
    payload = np.ascontiguousarray(pmap.values, dtype="<f4")
    header = _PMAP_HEADER.pack(
        PMAP_MAGIC, PMAP_VERSION, pmap.dims.width, pmap.dims.height, 1, b"\x00\x00\x00"
    )
    Path(path).write_bytes(header + payload.tobytes())


def read_pmap_dims(path: str | Path) -> Dims:
    """Read only the header and return the declared dimensions."""
    with open(path, "rb") as fh:
        header = fh.read(PMAP_HEADER_SIZE)
    return _parse_pmap_header(header, path)


def _parse_pmap_header(header: bytes, path: str | Path) -> Dims:
    if len(header) < PMAP_HEADER_SIZE:
        raise FormatError(f"{path}: truncated header ({len(header)} bytes)")
    magic, version, width, height, channels, reserved = _PMAP_HEADER.unpack(header)
    if magic != PMAP_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != PMAP_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if channels != 1:
        raise FormatError(f"{path}: expected 1 channel, got {channels}")
    if reserved != b"\x00\x00\x00":
        raise FormatError(f"{path}: reserved bytes must be zero")
    if width < 1 or height < 1:
        raise FormatError(f"{path}: non-positive dims {width}x{height}")
    return Dims(width, height)


def read_pmap(path: str | Path) -> ProbabilityMap:
    """Deserialize a PMAP file, validating payload length and value range."""
    raw = Path(path).read_bytes()
    dims = _parse_pmap_header(raw[:PMAP_HEADER_SIZE], path)
    payload = raw[PMAP_HEADER_SIZE:]
    expected = 4 * dims.n_pixels
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} "
            f"for {dims.width}x{dims.height}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(dims.height, dims.width)
    bad = ~np.isfinite(values) | (values < 0.0) | (values > 1.0)
    if bad.any():
        idx = int(np.argmax(bad.ravel()))
        raise RangeError(f"{path}: probability out of [0, 1] at pixel {idx}")
    return ProbabilityMap(dims, values.astype(np.float32))


def read_mask(path: str | Path) -> GroundTruthMask:
    """Load a strictly binary 0/255 mask PNG.

    Gray values are rejected rather than thresholded: the annotation
    contract is binary and ambiguity must surface as an error.
    """
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                raise FormatError(
                    f"{path}: mask must be 8-bit single-channel, got mode {img.mode!r}"
                )
            arr = np.asarray(img)
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: not a decodable image") from exc
    stray = (arr != 0) & (arr != 255)
    if stray.any():
        idx = int(np.argmax(stray.ravel()))
        raise AmbiguousMaskError(
            f"{path}: pixel {idx} has value {int(arr.ravel()[idx])}, expected 0 or 255"
        )
    dims = Dims(arr.shape[1], arr.shape[0])
    return GroundTruthMask(dims, arr == 255)


def write_mask(mask: GroundTruthMask | PredictionMask, path: str | Path) -> None:
    """Write a binary mask as an 8-bit 0/255 PNG."""
    arr = np.where(mask.values, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")
