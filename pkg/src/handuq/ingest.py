"""Turns raw recordings and annotation exports into evaluation inputs.

Covers three steps: annotation-export JSON to binary masks, greedy
near-duplicate frame filtering, and seeded balanced per-condition
sampling. The frame selector is an automated stand-in for a manual
review pass; it claims reproducibility, not equivalence to any manual
frame list.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DimensionError, FormatError, LabelError, SampleError
from .manifest import DatasetManifest
from .raster import Dims, GroundTruthMask, write_mask

HAND_LABEL = "hand"
SAMPLER_ALGORITHM = "pcg64-permutation-v1"


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def polygon_to_mask(points_pct: Sequence[Sequence[float]], dims: Dims) -> np.ndarray:
    """Rasterize one percent-coordinate polygon with the even-odd rule.

    Vertices convert from percent-of-dimension to the pixel lattice by
    round-half-up; a pixel belongs to the polygon iff its center passes an
    even-odd crossing test. Pinning both steps makes masks bit-reproducible
    across runs and machines.
    """
    if len(points_pct) < 3:
        raise FormatError(f"polygon needs at least 3 points, got {len(points_pct)}")
    xs = np.array([_round_half_up(p[0] / 100.0 * dims.width) for p in points_pct], dtype=np.float64)
    ys = np.array([_round_half_up(p[1] / 100.0 * dims.height) for p in points_pct], dtype=np.float64)

    row_centers = np.arange(dims.height, dtype=np.float64) + 0.5
    col_centers = np.arange(dims.width, dtype=np.float64) + 0.5
    parity = np.zeros((dims.height, dims.width), dtype=bool)
    for i in range(len(xs)):
        x1, y1 = xs[i], ys[i]
        x2, y2 = xs[(i + 1) % len(xs)], ys[(i + 1) % len(xs)]
        if y1 == y2:
            continue
        # half-open span so shared vertices count exactly once
        crossed = (y1 <= row_centers) != (y2 <= row_centers)
        if not crossed.any():
            continue
        x_at_row = x1 + (row_centers - y1) * (x2 - x1) / (y2 - y1)
        parity ^= crossed[:, None] & (col_centers[None, :] < x_at_row[:, None])
    return parity


def _self_intersects(points: Sequence[Sequence[float]]) -> bool:
    """Quadratic segment-pair check; polygons here have tens of vertices."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    n = len(points)
    segs = [(points[i], points[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            a, b = segs[i]
            c, d = segs[j]
            if (
                orient(a, b, c) * orient(a, b, d) < 0
                and orient(c, d, a) * orient(c, d, b) < 0
            ):
                return True
    return False


def _task_image_id(task: dict, index: int) -> str:
    data = task.get("data", {})
    for key in ("image", "img", "url"):
        if key in data:
            return Path(str(data[key])).stem
    return f"task-{task.get('id', index)}"


def import_annotations(
    export_file: str | Path,
    out_dir: str | Path,
    fallback_dims: Dims | None = None,
) -> list[tuple[str, Path]]:
    """Convert a labeling-tool JSON export into strict 0/255 mask PNGs.

    Supports polygon regions (percent coordinates). Regions labeled with
    anything other than the hand class raise LabelError. Tasks with zero
    regions become all-background masks (zero-hand frames are legal test
    data); they need ``fallback_dims`` because the export carries no image
    size for them.
    """
    export_file = Path(export_file)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        tasks = json.loads(export_file.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{export_file}: not valid JSON: {exc}") from exc
    if not isinstance(tasks, list):
        raise FormatError(f"{export_file}: expected a list of annotation tasks")

    results: list[tuple[str, Path]] = []
    for index, task in enumerate(tasks):
        image_id = _task_image_id(task, index)
        regions = []
        for annotation in task.get("annotations", []):
            regions.extend(annotation.get("result", []))

        dims: Dims | None = None
        mask = None
        for region in regions:
            value = region.get("value", {})
            labels = value.get("polygonlabels") or value.get("labels") or []
            for label in labels:
                if label.lower() != HAND_LABEL:
                    raise LabelError(
                        f"{image_id}: unknown label {label!r}, only {HAND_LABEL!r} is accepted"
                    )
            if region.get("type") not in ("polygonlabels", "polygon"):
                raise FormatError(
                    f"{image_id}: unsupported region type {region.get('type')!r}; "
                    "only polygon regions are accepted"
                )
            width = region.get("original_width")
            height = region.get("original_height")
            if not width or not height:
                raise FormatError(f"{image_id}: region missing original_width/height")
            region_dims = Dims(int(width), int(height))
            if dims is None:
                dims = region_dims
                mask = np.zeros((dims.height, dims.width), dtype=bool)
            elif region_dims != dims:
                raise DimensionError(
                    f"{image_id}: regions disagree on image size "
                    f"({region_dims} vs {dims})"
                )
            points = value.get("points")
            if not points:
                raise FormatError(f"{image_id}: polygon region without points")
            if _self_intersects(points):
                warnings.warn(
                    f"{image_id}: self-intersecting polygon rasterized with even-odd rule",
                    stacklevel=2,
                )
            # even-odd applies within a polygon; separate regions union
            mask |= polygon_to_mask(points, dims)

        if dims is None:
            if fallback_dims is None:
                raise FormatError(
                    f"{image_id}: no regions and no fallback dims; cannot size the empty mask"
                )
            dims = fallback_dims
            mask = np.zeros((dims.height, dims.width), dtype=bool)

        mask_path = out_dir / f"{image_id}.png"
        write_mask(GroundTruthMask(dims, mask), mask_path)
        results.append((image_id, mask_path))
    return results


def _load_luminance(path: str | Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError) as exc:
        raise OSError(f"{path}: cannot decode image: {exc}") from exc


def select_frames(frames: Sequence[str | Path], min_difference: float) -> list[Path]:
    """Greedy near-duplicate filter over an ordered frame sequence.

    Keeps the first frame, then every frame whose mean absolute luminance
    difference from the last kept frame is at least ``min_difference``
    (normalized to [0, 1]).
    """
    if not (0.0 <= min_difference <= 1.0):
        raise ValueError(f"min_difference must be in [0, 1], got {min_difference!r}")
    frames = [Path(f) for f in frames]
    if not frames:
        return []
    kept = [frames[0]]
    last = _load_luminance(frames[0])
    for frame in frames[1:]:
        current = _load_luminance(frame)
        if current.shape != last.shape:
            raise DimensionError(
                f"{frame}: size {current.shape[::-1]} differs from previous {last.shape[::-1]}"
            )
        if float(np.mean(np.abs(current - last))) >= min_difference:
            kept.append(frame)
            last = current
    return kept


def balanced_sample(
    manifest: DatasetManifest, n_per_condition: int, seed: int
) -> DatasetManifest:
    """Draw exactly n items per (condition cell, view) group, seeded.

    The condition cell is the tag combination plus background, so the
    benchmark's per-scenario cells stay distinct. Selection is a seeded
    permutation per group (PCG64); the sampler identity and seed are
    recorded in the returned manifest so the draw is reproducible.
    """
    if n_per_condition < 1:
        raise ValueError(f"n_per_condition must be >= 1, got {n_per_condition}")
    groups: dict[tuple[str, str], list[int]] = {}
    for index, item in enumerate(manifest.items):
        groups.setdefault((item.tags.cell, item.tags.view), []).append(index)

    rng = np.random.default_rng(seed)
    chosen: set[int] = set()
    for key in sorted(groups):
        members = groups[key]
        if len(members) < n_per_condition:
            raise SampleError(
                f"group {key[0]} view={key[1]} has {len(members)} items, "
                f"needs {n_per_condition}"
            )
        order = rng.permutation(len(members))[:n_per_condition]
        chosen.update(members[i] for i in order)

    items = tuple(item for i, item in enumerate(manifest.items) if i in chosen)
    return replace(
        manifest,
        items=items,
        sampler={
            "algorithm": SAMPLER_ALGORITHM,
            "seed": seed,
            "n_per_condition": n_per_condition,
        },
    )
