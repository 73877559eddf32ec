"""Segmentation accuracy and predictive-uncertainty metrics.

Per-pixel binary entropy of the fused hand probability, its mean over the
whole image (e_bar) and over ground-truth hand pixels only (e_hand), plus
hand-class IoU and its per-image mean. All accumulation is float64;
rounding happens only at report serialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.special import xlogy

from .errors import EmptyAggregateError, RangeError
from .fusion import DEFAULT_TAU, EnsembleSet, fuse, threshold
from .raster import EntropyMap, GroundTruthMask, PredictionMask, ProbabilityMap, require_same_dims

LN2 = math.log(2.0)

LogBase = Literal["natural", "base2"]


@dataclass(frozen=True)
class MetricConfig:
    """Evaluation-run configuration.

    log_base is fixed for the lifetime of a run: mixing bases across
    records would make entropy columns incomparable. two_class_iou
    switches per-image IoU from hand-class only (default) to the mean of
    hand and background IoU; reports label the switch when it is on.
    """

    log_base: LogBase = "natural"
    tau: float = DEFAULT_TAU
    two_class_iou: bool = False

    def __post_init__(self):
        if self.log_base not in ("natural", "base2"):
            raise RangeError(f"log_base must be 'natural' or 'base2', got {self.log_base!r}")
        if not (0.0 <= self.tau <= 1.0):
            raise RangeError(f"tau must be in [0, 1], got {self.tau!r}")

    @property
    def entropy_cap(self) -> float:
        """Maximum attainable entropy: log 2 in the configured base."""
        return LN2 if self.log_base == "natural" else 1.0


@dataclass(frozen=True)
class ImageMetrics:
    """Per-image results; e_hand is None exactly when the frame has no hand pixels."""

    iou: float
    e_bar: float
    e_hand: float | None
    n_h: int


def pixel_entropy(p: float, config: MetricConfig = MetricConfig()) -> float:
    """Binary predictive entropy of one probability, with 0*log(0) := 0."""
    p = float(p)
    if not (math.isfinite(p) and 0.0 <= p <= 1.0):
        raise RangeError(f"probability must be in [0, 1], got {p!r}")
    e = 0.0
    for q in (p, 1.0 - p):
        if q > 0.0:
            e -= q * math.log(q)
    if config.log_base == "base2":
        e /= LN2
    return e


def entropy_map(pmap: ProbabilityMap, config: MetricConfig = MetricConfig()) -> EntropyMap:
    """Apply pixel_entropy over the whole raster."""
    p = pmap.values.astype(np.float64)
    e = -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p))
    if config.log_base == "base2":
        e /= LN2
    # -0.0 from xlogy at exact 0/1 would violate the non-negative invariant.
    np.maximum(e, 0.0, out=e)
    return EntropyMap(pmap.dims, e)


def mean_entropy(emap: EntropyMap) -> float:
    """Entropy averaged over every pixel of the image."""
    return float(np.mean(emap.values, dtype=np.float64))


def hand_entropy(emap: EntropyMap, gt: GroundTruthMask) -> float | None:
    """Entropy averaged over ground-truth hand pixels; None on zero-hand frames.

    Zero-hand frames are legal test data, and their hand-region mean is a
    division by zero: callers must exclude None from aggregation and count
    the exclusion instead of hiding it.
    """
    require_same_dims(emap.dims, gt.dims, "entropy map vs ground truth")
    n_h = gt.n_hand
    if n_h == 0:
        return None
    return float(emap.values[gt.values].sum(dtype=np.float64) / n_h)


def iou(pred: PredictionMask, gt: GroundTruthMask) -> float:
    """Hand-class intersection over union; both-empty masks score 1.0.

    A model that predicts no hands on a no-hand frame is correct; scoring
    that case 0 or NaN would corrupt condition means.
    """
    require_same_dims(pred.dims, gt.dims, "prediction vs ground truth")
    inter = int(np.count_nonzero(pred.values & gt.values))
    union = int(np.count_nonzero(pred.values | gt.values))
    if union == 0:
        return 1.0
    return inter / union


def two_class_iou(pred: PredictionMask, gt: GroundTruthMask) -> float:
    """Mean of hand IoU and background IoU (the class-averaged alternative)."""
    require_same_dims(pred.dims, gt.dims, "prediction vs ground truth")
    hand = iou(pred, gt)
    bg = iou(
        PredictionMask(pred.dims, ~pred.values),
        GroundTruthMask(gt.dims, ~gt.values),
    )
    return 0.5 * (hand + bg)


def mean_iou(records: Sequence[ImageMetrics]) -> float:
    """Arithmetic mean of per-image IoU values."""
    if not records:
        raise EmptyAggregateError("mean_iou over an empty record list")
    return float(np.mean([r.iou for r in records], dtype=np.float64))


def evaluate_image(
    ensemble: EnsembleSet,
    gt: GroundTruthMask,
    config: MetricConfig = MetricConfig(),
) -> ImageMetrics:
    """Full per-image pipeline: fuse, threshold, IoU, entropy means."""
    require_same_dims(ensemble.dims, gt.dims, "ensemble vs ground truth")
    fused = fuse(ensemble)
    pred = threshold(fused, config.tau)
    emap = entropy_map(fused, config)
    score = two_class_iou(pred, gt) if config.two_class_iou else iou(pred, gt)
    return ImageMetrics(
        iou=score,
        e_bar=mean_entropy(emap),
        e_hand=hand_entropy(emap, gt),
        n_h=gt.n_hand,
    )
