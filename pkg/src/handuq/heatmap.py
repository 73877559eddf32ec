"""Entropy heatmaps and prediction/ground-truth overlay images.

The fixed scale maps [0, log 2] to [0, 255] so heatmaps are comparable
across images and conditions; min-max scaling is available but would
exaggerate near-certain frames, so it is not the default. Rendering is
pure: identical inputs produce byte-identical files.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import RangeError
from .metrics import MetricConfig
from .raster import EntropyMap, GroundTruthMask, PredictionMask, require_same_dims

# Overlay legend: confusion category -> RGB
TP_COLOR = (0, 200, 80)
FP_COLOR = (230, 60, 50)
FN_COLOR = (60, 90, 240)

LEGEND = {
    "true_positive": TP_COLOR,
    "false_positive": FP_COLOR,
    "false_negative": FN_COLOR,
}

# 256-entry false-color table built from documented anchor points
# (black -> purple -> orange -> white), linearly interpolated.
_FIRE_ANCHORS = (
    (0, (0, 0, 0)),
    (85, (120, 0, 130)),
    (170, (255, 140, 0)),
    (255, (255, 255, 255)),
)


def _build_fire_table() -> np.ndarray:
    table = np.zeros((256, 3), dtype=np.uint8)
    for (lo, lo_rgb), (hi, hi_rgb) in zip(_FIRE_ANCHORS, _FIRE_ANCHORS[1:]):
        span = hi - lo
        for i in range(lo, hi + 1):
            t = (i - lo) / span
            table[i] = [round(a + (b - a) * t) for a, b in zip(lo_rgb, hi_rgb)]
    return table


FIRE_TABLE = _build_fire_table()


def render_entropy(
    emap: EntropyMap,
    scale: str = "fixed_0_to_log2",
    config: MetricConfig = MetricConfig(),
    colormap: str = "gray",
) -> Image.Image:
    """Render an entropy map to an 8-bit image.

    fixed_0_to_log2 maps [0, log 2 in the configured base] linearly onto
    [0, 255]; minmax stretches the map's own range and renders a constant
    map as uniform mid-gray with a warning.
    """
    values = emap.values
    if scale == "fixed_0_to_log2":
        levels = values / config.entropy_cap * 255.0
    elif scale == "minmax":
        span = float(values.max() - values.min())
        if span == 0.0:
            warnings.warn("minmax scale on a constant entropy map; rendering mid-gray")
            levels = np.full(values.shape, 128.0)
        else:
            levels = (values - values.min()) / span * 255.0
    else:
        raise RangeError(f"unknown scale {scale!r}; choose fixed_0_to_log2 or minmax")

    levels = np.clip(np.rint(levels), 0, 255).astype(np.uint8)
    if colormap == "gray":
        return Image.fromarray(levels, mode="L")
    if colormap == "fire":
        return Image.fromarray(FIRE_TABLE[levels], mode="RGB")
    raise RangeError(f"unknown colormap {colormap!r}; choose gray or fire")


def render_overlay(
    image: np.ndarray | None,
    gt: GroundTruthMask,
    pred: PredictionMask,
) -> Image.Image:
    """False-color confusion overlay: TP green, FP red, FN blue.

    ``image`` is an optional (h, w, 3) uint8 base rendered dimmed under
    the category colors; without one the background is black. Category
    pixel counts equal the confusion-matrix counts behind IoU.
    """
    require_same_dims(gt.dims, pred.dims, "ground truth vs prediction")
    h, w = gt.dims.height, gt.dims.width
    if image is not None:
        image = np.asarray(image)
        if image.shape != (h, w, 3):
            raise RangeError(
                f"base image must be {h}x{w}x3, got {image.shape}"
            )
        canvas = (image.astype(np.float64) * 0.4).astype(np.uint8)
    else:
        canvas = np.zeros((h, w, 3), dtype=np.uint8)

    tp = pred.values & gt.values
    fp = pred.values & ~gt.values
    fn = ~pred.values & gt.values
    canvas[tp] = TP_COLOR
    canvas[fp] = FP_COLOR
    canvas[fn] = FN_COLOR
    return Image.fromarray(canvas, mode="RGB")


def save_image(img: Image.Image, path: str | Path) -> None:
    img.save(path, format="PNG")
