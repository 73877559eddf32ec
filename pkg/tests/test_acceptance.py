"""Acceptance suite: structural facts and property gates, one test per
criterion, each printing a PASS/FAIL line (run with -s to see them live).
"""

import math
import time

import numpy as np

from handuq import (
    DatasetManifest,
    Dims,
    DistributionLabel,
    EnsembleSet,
    ManifestItem,
    MetricConfig,
    ProbabilityMap,
    builtin_profiles,
    classify,
    entropy_map,
    evaluate_image,
    fuse,
    make_tags,
)
from handuq.cli import main
from handuq.ingest import balanced_sample
from handuq.synth import SynthSpec, generate, oracle_metrics

LN2 = math.log(2.0)


def _verdict(name, ok, detail=""):
    print(f"\nACCEPTANCE[{name}]: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# 1. Taxonomy golden test: 4 profiles x 7 condition rows, 28 exact labels
# ---------------------------------------------------------------------------

_ROWS = {
    "O1": ["O1"],
    "O2": ["O2"],
    "O1+GH": ["O1", "GH"],
    "O2+GH": ["O2", "GH"],
    "O2+RG": ["O2", "RG"],
    "O2+GH+RG": ["O2", "GH", "RG"],
    "MBN": ["O1", "MBN"],
}

_ID = DistributionLabel("ID", "none")
_EPI = DistributionLabel("OOD", "epistemic")
_ALE = DistributionLabel("OOD", "aleatoric")

GOLDEN = {
    "EgoHands": {
        "O1": _ID, "O2": _ID, "O1+GH": _EPI, "O2+GH": _EPI,
        "O2+RG": _EPI, "O2+GH+RG": _EPI, "MBN": _ALE,
    },
    "Ego2Hands": {
        "O1": _ID, "O2": _EPI, "O1+GH": _EPI, "O2+GH": _EPI,
        "O2+RG": _EPI, "O2+GH+RG": _EPI, "MBN": _ALE,
    },
    "HADR": {
        "O1": _ID, "O2": _EPI, "O1+GH": _EPI, "O2+GH": _EPI,
        "O2+RG": _EPI, "O2+GH+RG": _EPI, "MBN": _ALE,
    },
    "HAGS": {
        "O1": _ID, "O1+GH": _ID, "O2": _EPI, "O2+GH": _EPI,
        "O2+RG": _EPI, "O2+GH+RG": _EPI, "MBN": _ALE,
    },
}


def test_taxonomy_golden():
    start = time.perf_counter()
    profiles = {p.name: p for p in builtin_profiles()}
    mismatches = []
    checked = 0
    for profile_name, rows in GOLDEN.items():
        for row_name, expected in rows.items():
            got = classify(make_tags(_ROWS[row_name]), profiles[profile_name])
            checked += 1
            if got != expected:
                mismatches.append(f"{profile_name}x{row_name}: got {got}, want {expected}")
    elapsed = time.perf_counter() - start
    _verdict(
        "taxonomy-golden",
        checked == 28 and not mismatches and elapsed < 1.0,
        f"{checked}/28 labels exact in {elapsed:.3f}s" + (f"; {mismatches}" if mismatches else ""),
    )


# ---------------------------------------------------------------------------
# 2. Metric oracle equivalence: >=1000 random instances within 1e-9
# ---------------------------------------------------------------------------


def test_metric_oracle_equivalence():
    rng = np.random.default_rng(20240901)
    config = MetricConfig()
    start = time.perf_counter()
    worst = 0.0
    n_instances = 1000
    for i in range(n_instances):
        w = int(rng.integers(1, 17))
        h = int(rng.integers(1, 17))
        k = int(rng.integers(1, 9))
        dims = Dims(w, h)
        from handuq import GroundTruthMask

        gt = GroundTruthMask(dims, rng.random((h, w)) < rng.uniform(0, 1))
        if i % 7 == 0:  # exercise certain probabilities and zero-hand frames
            maps = [ProbabilityMap(dims, (rng.random((h, w)) < 0.5).astype(np.float64))
                    for _ in range(k)]
        else:
            maps = [ProbabilityMap(dims, rng.uniform(0, 1, (h, w))) for _ in range(k)]
        got = evaluate_image(EnsembleSet(tuple(maps), tuple(map(str, range(k)))), gt, config)
        ref = oracle_metrics(gt, maps, config)
        worst = max(worst, abs(got.iou - ref.iou), abs(got.e_bar - ref.e_bar))
        if (got.e_hand is None) != (ref.e_hand is None):
            _verdict("metric-oracle-equivalence", False, f"e_hand definedness mismatch at {i}")
        if ref.e_hand is not None:
            worst = max(worst, abs(got.e_hand - ref.e_hand))
    elapsed = time.perf_counter() - start
    _verdict(
        "metric-oracle-equivalence",
        worst < 1e-9 and elapsed < 30.0,
        f"{n_instances} instances, worst |delta|={worst:.2e}, {elapsed:.1f}s",
    )


# ---------------------------------------------------------------------------
# 3. Entropy laws over 1e5 sampled probabilities
# ---------------------------------------------------------------------------


def test_entropy_laws():
    rng = np.random.default_rng(11)
    n = 100_000
    p = rng.uniform(0, 1, n)
    p[:3] = [0.0, 1.0, 0.5]
    dims = Dims(n, 1)
    natural = entropy_map(ProbabilityMap(dims, p.reshape(1, n))).values.ravel()
    mirrored = entropy_map(ProbabilityMap(dims, (1.0 - p).reshape(1, n))).values.ravel()
    base2 = entropy_map(
        ProbabilityMap(dims, p.reshape(1, n)), MetricConfig(log_base="base2")
    ).values.ravel()

    symmetry = float(np.max(np.abs(natural - mirrored)))
    endpoints = natural[0] == 0.0 and natural[1] == 0.0
    max_natural = abs(natural[2] - LN2) < 1e-15 and float(natural.max()) <= LN2 + 1e-15
    max_base2 = abs(base2[2] - 1.0) < 1e-15 and float(base2.max()) <= 1.0 + 1e-15
    scaling = float(np.max(np.abs(base2 - natural / LN2)))

    ok = symmetry < 1e-12 and endpoints and max_natural and max_base2 and scaling < 1e-12
    _verdict(
        "entropy-laws",
        ok,
        f"n={n}, symmetry<= {symmetry:.2e}, scaling<= {scaling:.2e}, "
        f"E(0)=E(1)=0: {endpoints}, max ln2/1.0: {max_natural and max_base2}",
    )


# ---------------------------------------------------------------------------
# 4. Fusion laws on >=500 random ensembles
# ---------------------------------------------------------------------------


def test_fusion_laws():
    rng = np.random.default_rng(404)
    n_cases = 500
    worst_perm = worst_bound = worst_fix = 0.0
    for _ in range(n_cases):
        w, h = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        k = int(rng.integers(1, 9))
        dims = Dims(w, h)
        maps = [ProbabilityMap(dims, rng.uniform(0, 1, (h, w))) for _ in range(k)]
        ids = tuple(map(str, range(k)))
        fused = fuse(EnsembleSet(tuple(maps), ids)).values

        perm = rng.permutation(k)
        shuffled = fuse(EnsembleSet(tuple(maps[i] for i in perm), ids)).values
        worst_perm = max(worst_perm, float(np.max(np.abs(fused - shuffled))))

        stacked = np.stack([m.values for m in maps])
        worst_bound = max(
            worst_bound,
            float(np.max(stacked.min(axis=0) - fused)),
            float(np.max(fused - stacked.max(axis=0))),
        )

        same = fuse(EnsembleSet(tuple([maps[0]] * k), ids)).values
        worst_fix = max(worst_fix, float(np.max(np.abs(same - maps[0].values))))
    ok = worst_perm < 1e-12 and worst_bound < 1e-12 and worst_fix < 1e-12
    _verdict(
        "fusion-laws",
        ok,
        f"{n_cases} ensembles: perm<= {worst_perm:.2e}, bounds<= {worst_bound:.2e}, "
        f"fixpoint<= {worst_fix:.2e}",
    )


# ---------------------------------------------------------------------------
# 5. Degradation monotonicity: blur 0 -> 2px at fixed noise, >=100 seeds
# ---------------------------------------------------------------------------


def _mean_over_seeds(blur_sigma, learner_noise, n_seeds):
    ious, e_hands = [], []
    for seed in range(n_seeds):
        spec = SynthSpec(
            dims=Dims(48, 48),
            n_hands=1 + (seed % 4),
            blur_sigma=blur_sigma,
            learner_noise=learner_noise,
            k=4,
            seed=seed,
        )
        gt, maps, _ = generate(spec)
        metrics = evaluate_image(
            EnsembleSet(tuple(maps), tuple(map(str, range(4)))), gt
        )
        ious.append(metrics.iou)
        e_hands.append(metrics.e_hand)
    return float(np.mean(ious)), float(np.mean(e_hands))


def test_degradation_monotonicity():
    n_seeds = 100
    iou_clean, e_hand_clean = _mean_over_seeds(0.0, 0.05, n_seeds)
    iou_blur, e_hand_blur = _mean_over_seeds(2.0, 0.05, n_seeds)
    ok = iou_blur < iou_clean and e_hand_blur > e_hand_clean
    _verdict(
        "degradation-monotonicity",
        ok,
        f"{n_seeds} seeds: mIoU {iou_clean:.4f}->{iou_blur:.4f}, "
        f"e_hand {e_hand_clean:.4f}->{e_hand_blur:.4f}",
    )


# ---------------------------------------------------------------------------
# 6. Sampling arithmetic: 8x2x20 -> 320, 8x1x20 -> 160
# ---------------------------------------------------------------------------

_CELL_TAGS = [
    (("O1",), "simple"),
    (("O1",), "cluttered"),
    (("O2",), "cluttered"),
    (("O1", "GH"), "cluttered"),
    (("O2", "GH"), "cluttered"),
    (("O2", "RG"), "cluttered"),
    (("O2", "GH", "RG"), "cluttered"),
    (("O1", "MBN"), "cluttered"),
]


def _manifest_with(views, per_cell):
    items = []
    for names, background in _CELL_TAGS:
        for view in views:
            tags = make_tags(names, background, view)
            for i in range(per_cell):
                items.append(
                    ManifestItem(
                        id=f"{tags.cell}-{view}-{i}",
                        gt_mask_path="m.png",
                        learner_map_paths=("p.pmap",),
                        tags=tags,
                    )
                )
    return DatasetManifest(items=tuple(items))


def test_sampling_arithmetic():
    both = balanced_sample(_manifest_with(("side", "egocentric"), 25), 20, seed=1)
    side = balanced_sample(_manifest_with(("side",), 25), 20, seed=1)
    ok = len(both.items) == 320 and len(side.items) == 160
    _verdict(
        "sampling-arithmetic",
        ok,
        f"8x2x20 -> {len(both.items)} items, 8x1x20 -> {len(side.items)} items",
    )


# ---------------------------------------------------------------------------
# 7. Throughput floor: one 640x480 frame at K=4, >= 38 fps over 500 frames
# ---------------------------------------------------------------------------


def test_throughput_floor():
    rng = np.random.default_rng(5)
    dims = Dims(640, 480)
    from handuq import GroundTruthMask

    gt = GroundTruthMask(dims, rng.random((480, 640)) < 0.1)
    maps = [ProbabilityMap(dims, rng.uniform(0, 1, (480, 640))) for _ in range(4)]
    ensemble = EnsembleSet(tuple(maps), ("a", "b", "c", "d"))
    config = MetricConfig()

    for _ in range(20):  # warm caches and allocator
        evaluate_image(ensemble, gt, config)

    n_frames = 500
    start = time.perf_counter()
    for _ in range(n_frames):
        evaluate_image(ensemble, gt, config)
    elapsed = time.perf_counter() - start
    fps = n_frames / elapsed
    _verdict("throughput-floor", fps >= 38.0, f"{fps:.0f} fps (floor 38)")


# ---------------------------------------------------------------------------
# 8. Determinism: identical inputs, different --jobs, byte-identical reports
# ---------------------------------------------------------------------------


def test_determinism_across_jobs(tmp_path):
    data = tmp_path / "data"
    assert main(
        ["synth", "--out", str(data), "--seed", "13", "--dims", "32x32",
         "--k", "2", "--n-per-condition", "2"]
    ) == 0
    outputs = []
    for jobs in ("1", "4"):
        report = tmp_path / f"report-j{jobs}.csv"
        records = tmp_path / f"records-j{jobs}.json"
        assert main(
            ["eval", "--manifest", str(data / "manifest.json"), "--jobs", jobs,
             "--out", str(report), "--records-out", str(records)]
        ) == 0
        outputs.append((report.read_bytes(), records.read_bytes()))
    ok = outputs[0] == outputs[1]
    _verdict("determinism-across-jobs", ok, "reports and records byte-identical")
