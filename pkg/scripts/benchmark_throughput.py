#!/usr/bin/env python3
"""Measure post-inference pipeline throughput on a 640x480 frame at K=4.

The pipeline under test is fuse + threshold + entropy map + all metrics,
i.e. everything downstream of model inference for one frame.
"""

import argparse
import time

import numpy as np

from handuq import Dims, EnsembleSet, GroundTruthMask, MetricConfig, ProbabilityMap, evaluate_image


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--frames", type=int, default=500)
    parser.add_argument("--k", type=int, default=4)
    parser.add_argument("--dims", default="640x480")
    args = parser.parse_args()

    w, h = (int(v) for v in args.dims.split("x"))
    dims = Dims(w, h)
    rng = np.random.default_rng(0)
    gt = GroundTruthMask(dims, rng.random((h, w)) < 0.1)
    maps = [ProbabilityMap(dims, rng.uniform(0, 1, (h, w))) for _ in range(args.k)]
    ensemble = EnsembleSet(tuple(maps), tuple(f"l{i}" for i in range(args.k)))
    config = MetricConfig()

    for _ in range(20):
        evaluate_image(ensemble, gt, config)

    start = time.perf_counter()
    for _ in range(args.frames):
        evaluate_image(ensemble, gt, config)
    elapsed = time.perf_counter() - start

    fps = args.frames / elapsed
    print(f"{args.frames} frames of {w}x{h} at K={args.k}: "
          f"{elapsed:.2f}s total, {fps:.1f} fps ({1000 * elapsed / args.frames:.2f} ms/frame)")


if __name__ == "__main__":
    main()
