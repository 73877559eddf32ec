"""Deterministic synthetic scenes for desk-scale pipeline testing.

Generates elliptical hand blobs plus K perturbed probability maps per
condition knob (probability attenuation for gloves, blob intersection for
rare gestures, Gaussian blur for motion noise, per-learner noise), along
with a scalar-loop reference implementation of all metrics that shares no
code with the vectorized pipeline.

The perturbation models claim only monotone degradation, never numerical
correspondence to any real dataset. The generator algorithm is pinned and
versioned; changing it is a breaking change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import RangeError
from .metrics import ImageMetrics, MetricConfig
from .raster import Dims, GroundTruthMask, ProbabilityMap
from .taxonomy import ConditionTag, ConditionTagSet

GENERATOR_VERSION = "synth-v1"

# operator count: up to two hands belong to one operator, more means two
_TWO_OPERATOR_MIN_HANDS = 3


@dataclass(frozen=True)
class SynthSpec:
    """Knobs for one synthetic scene and its ensemble of noisy learner maps."""

    dims: Dims
    n_hands: int = 1
    glove_shift: float = 0.0
    gesture_overlap: float = 0.0
    blur_sigma: float = 0.0
    learner_noise: float = 0.0
    k: int = 4
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.n_hands <= 4):
            raise RangeError(f"n_hands must be 0..4, got {self.n_hands}")
        if self.glove_shift < 0 or not math.isfinite(self.glove_shift):
            raise RangeError(f"glove_shift must be >= 0, got {self.glove_shift}")
        if not (0.0 <= self.gesture_overlap <= 1.0):
            raise RangeError(f"gesture_overlap must be in [0, 1], got {self.gesture_overlap}")
        if self.blur_sigma < 0 or not math.isfinite(self.blur_sigma):
            raise RangeError(f"blur_sigma must be >= 0, got {self.blur_sigma}")
        if self.learner_noise < 0 or not math.isfinite(self.learner_noise):
            raise RangeError(f"learner_noise must be >= 0, got {self.learner_noise}")
        if self.k < 1:
            raise RangeError(f"k must be >= 1, got {self.k}")


def _ellipse_blob(dims: Dims, center: np.ndarray, axes: np.ndarray, angle: float) -> np.ndarray:
    ys, xs = np.mgrid[0:dims.height, 0:dims.width]
    dx = xs + 0.5 - center[0]
    dy = ys + 0.5 - center[1]
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    u = dx * cos_a + dy * sin_a
    v = -dx * sin_a + dy * cos_a
    return (u / axes[0]) ** 2 + (v / axes[1]) ** 2 <= 1.0


def generate(spec: SynthSpec) -> tuple[GroundTruthMask, list[ProbabilityMap], ConditionTagSet]:
    """Build one seeded scene: ground truth, K learner maps, condition tags."""
    rng = np.random.default_rng(spec.seed)
    w, h = spec.dims.width, spec.dims.height
    scale = min(w, h)

    gt = np.zeros((h, w), dtype=bool)
    prev_center = None
    for _ in range(spec.n_hands):
        center = rng.uniform([0.2 * w, 0.2 * h], [0.8 * w, 0.8 * h])
        if prev_center is not None and spec.gesture_overlap > 0:
            # pull this blob toward the previous one so the shapes intersect
            center = prev_center + (center - prev_center) * (1.0 - spec.gesture_overlap)
        axes = rng.uniform(0.10 * scale, 0.22 * scale, size=2)
        angle = rng.uniform(0.0, math.pi)
        gt |= _ellipse_blob(spec.dims, center, axes, angle)
        prev_center = center

    gt_float = gt.astype(np.float64)
    attenuation = math.exp(-spec.glove_shift)
    maps = []
    for _ in range(spec.k):
        noise = rng.normal(0.0, spec.learner_noise, size=(h, w))
        m = np.clip(gt_float + noise, 0.0, 1.0)
        if spec.blur_sigma > 0:
            m = gaussian_filter(m, spec.blur_sigma)
        if spec.glove_shift > 0:
            m[gt] *= attenuation
        np.clip(m, 0.0, 1.0, out=m)
        maps.append(ProbabilityMap(spec.dims, m))

    tags = ConditionTagSet(
        frozenset(
            {ConditionTag.O2 if spec.n_hands >= _TWO_OPERATOR_MIN_HANDS else ConditionTag.O1}
            | ({ConditionTag.GH} if spec.glove_shift > 0 else set())
            | ({ConditionTag.RG} if spec.gesture_overlap > 0 else set())
            | ({ConditionTag.MBN} if spec.blur_sigma > 0 else set())
        ),
        background="simple",
        view="side",
    )
    return GroundTruthMask(spec.dims, gt), maps, tags


def render_scene(
    gt: GroundTruthMask, seed: int, cluttered: bool = False
) -> np.ndarray:
    """Deterministic RGB rendering of a scene for training/overlay use.

    Background is a smooth gray texture, hands get a warm skin-like tone;
    cluttered scenes add gray distractor blobs behind the hands. Returns an
    (height, width, 3) uint8 array.
    """
    rng = np.random.default_rng(seed)
    h, w = gt.dims.height, gt.dims.width
    texture = gaussian_filter(rng.uniform(0.0, 1.0, size=(h, w)), 2.0)
    span = texture.max() - texture.min()
    if span > 0:
        texture = (texture - texture.min()) / span

    img = np.empty((h, w, 3), dtype=np.float64)
    base = 0.25 + 0.25 * texture
    img[..., 0] = base
    img[..., 1] = base
    img[..., 2] = base * 1.1

    if cluttered:
        scale = min(w, h)
        for _ in range(6):
            center = rng.uniform([0.1 * w, 0.1 * h], [0.9 * w, 0.9 * h])
            axes = rng.uniform(0.05 * scale, 0.15 * scale, size=2)
            angle = rng.uniform(0.0, math.pi)
            blob = _ellipse_blob(gt.dims, center, axes, angle) & ~gt.values
            tone = rng.uniform(0.35, 0.75)
            img[blob] = [tone, tone * 0.95, tone * 0.9]

    hand = gt.values
    img[hand, 0] = 0.78 + 0.12 * texture[hand]
    img[hand, 1] = 0.55 + 0.10 * texture[hand]
    img[hand, 2] = 0.45 + 0.08 * texture[hand]
    return (np.clip(img, 0.0, 1.0) * 255.0).round().astype(np.uint8)


def oracle_metrics(
    gt: GroundTruthMask,
    maps: list[ProbabilityMap],
    config: MetricConfig = MetricConfig(),
) -> ImageMetrics:
    """Reference metrics via naive scalar loops.

    Fuses, thresholds, and accumulates entirely with Python floats and
    math.log, independent of the vectorized pipeline, so the two
    implementations can check each other.
    """
    w, h = gt.dims.width, gt.dims.height
    for m in maps:
        if m.dims != gt.dims:
            raise RangeError("oracle inputs must share dims")
    k = len(maps)
    ln2 = math.log(2.0)

    def entropy(p: float) -> float:
        e = 0.0
        for q in (p, 1.0 - p):
            if q > 0.0:
                e -= q * math.log(q)
        return e / ln2 if config.log_base == "base2" else e

    e_total = 0.0
    e_hand_total = 0.0
    n_h = 0
    inter = union = 0
    bg_inter = bg_union = 0
    for r in range(h):
        for c in range(w):
            fused = 0.0
            for m in maps:
                fused += float(m.values[r, c])
            fused /= k
            e = entropy(fused)
            e_total += e
            is_hand = bool(gt.values[r, c])
            if is_hand:
                n_h += 1
                e_hand_total += e
            predicted = fused >= config.tau
            if predicted and is_hand:
                inter += 1
            if predicted or is_hand:
                union += 1
            if not predicted and not is_hand:
                bg_inter += 1
            if not predicted or not is_hand:
                bg_union += 1

    iou_hand = 1.0 if union == 0 else inter / union
    if config.two_class_iou:
        iou_bg = 1.0 if bg_union == 0 else bg_inter / bg_union
        score = 0.5 * (iou_hand + iou_bg)
    else:
        score = iou_hand
    return ImageMetrics(
        iou=score,
        e_bar=e_total / (w * h),
        e_hand=(e_hand_total / n_h) if n_h else None,
        n_h=n_h,
    )
