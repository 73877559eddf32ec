"""Ensemble combination: per-pixel averaging of base-learner maps and thresholding.

The fusion rule is the unweighted arithmetic mean across learners. It is
architecture-agnostic; which networks produced the maps is carried only as
metadata in ``learner_ids``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, RangeError
from .raster import PredictionMask, ProbabilityMap

DEFAULT_TAU = 0.5


@dataclass(frozen=True)
class EnsembleSet:
    """An ordered set of K base-learner probability maps with unique labels."""

    learners: tuple[ProbabilityMap, ...]
    learner_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "learners", tuple(self.learners))
        object.__setattr__(self, "learner_ids", tuple(self.learner_ids))
        if len(self.learners) < 1:
            raise RangeError("ensemble needs at least one learner")
        if len(self.learner_ids) != len(self.learners):
            raise RangeError(
                f"{len(self.learner_ids)} ids for {len(self.learners)} learners"
            )
        if len(set(self.learner_ids)) != len(self.learner_ids):
            raise RangeError("learner_ids must be unique")
        dims = self.learners[0].dims
        for lid, learner in zip(self.learner_ids, self.learners):
            if learner.dims != dims:
                raise DimensionError(
                    f"learner {lid!r} has dims {learner.dims.width}x{learner.dims.height}, "
                    f"expected {dims.width}x{dims.height}"
                )

    @property
    def k(self) -> int:
        return len(self.learners)

    @property
    def dims(self):
        return self.learners[0].dims


def fuse(ensemble: EnsembleSet) -> ProbabilityMap:
    """Average the K learner maps per pixel.

    Accumulation is in float64; with K <= ~10 a single sum-then-divide pass
    has ample headroom, so no compensated summation is used. The result is
    a convex combination, so it needs no clamping to stay in [0, 1].
    """
    acc = ensemble.learners[0].values.astype(np.float64)
    for learner in ensemble.learners[1:]:
        acc += learner.values
    acc /= ensemble.k
    # Guard the [0,1] invariant against last-ulp summation overshoot.
    np.clip(acc, 0.0, 1.0, out=acc)
    return ProbabilityMap(ensemble.dims, acc)


def threshold(pmap: ProbabilityMap, tau: float = DEFAULT_TAU) -> PredictionMask:
    """Decide hand vs background at probability >= tau (inclusive boundary)."""
    if not (0.0 <= tau <= 1.0):
        raise RangeError(f"tau must be in [0, 1], got {tau!r}")
    return PredictionMask(pmap.dims, pmap.values >= tau)


def fuse_maps(maps: Sequence[ProbabilityMap], ids: Sequence[str] | None = None) -> ProbabilityMap:
    """Convenience wrapper building an EnsembleSet from bare maps."""
    if ids is None:
        ids = [f"learner-{i}" for i in range(len(maps))]
    return fuse(EnsembleSet(tuple(maps), tuple(ids)))
