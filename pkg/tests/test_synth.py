import math

import numpy as np
import pytest

from handuq import (
    ConditionTag,
    Dims,
    EnsembleSet,
    MetricConfig,
    ProbabilityMap,
    RangeError,
    evaluate_image,
)
from handuq.synth import SynthSpec, generate, oracle_metrics, render_scene

from .conftest import mask

LN2 = math.log(2.0)
DIMS = Dims(32, 32)


def evaluate(gt, maps, config=MetricConfig()):
    ens = EnsembleSet(tuple(maps), tuple(f"l{i}" for i in range(len(maps))))
    return evaluate_image(ens, gt, config)


# -- generation ----------------------------------------------------------------


def test_same_seed_is_bit_identical():
    spec = SynthSpec(dims=DIMS, n_hands=2, glove_shift=0.3, gesture_overlap=0.4,
                     blur_sigma=1.0, learner_noise=0.1, k=3, seed=99)
    gt_a, maps_a, tags_a = generate(spec)
    gt_b, maps_b, tags_b = generate(spec)
    assert np.array_equal(gt_a.values, gt_b.values)
    assert tags_a == tags_b
    for ma, mb in zip(maps_a, maps_b):
        assert ma.values.tobytes() == mb.values.tobytes()


def test_empty_scene():
    gt, maps, tags = generate(SynthSpec(dims=DIMS, n_hands=0, k=2, seed=1))
    assert gt.n_hand == 0
    for m in maps:
        assert not m.values.any()
    assert evaluate(gt, maps).e_bar == 0.0


def test_noiseless_limit_is_perfect():
    spec = SynthSpec(dims=DIMS, n_hands=2, k=4, seed=5)
    gt, maps, _ = generate(spec)
    assert gt.n_hand > 0
    for m in maps:
        assert np.array_equal(m.values, gt.values.astype(np.float64))
    metrics = evaluate(gt, maps)
    assert metrics.iou == 1.0
    assert metrics.e_bar == 0.0
    assert metrics.e_hand == 0.0


def test_tags_derive_from_knobs():
    _, _, tags = generate(SynthSpec(dims=DIMS, n_hands=1, seed=0))
    assert tags.tags == {ConditionTag.O1}
    _, _, tags = generate(
        SynthSpec(dims=DIMS, n_hands=3, glove_shift=0.5, gesture_overlap=0.5,
                  blur_sigma=1.0, seed=0)
    )
    assert tags.tags == {ConditionTag.O2, ConditionTag.GH, ConditionTag.RG, ConditionTag.MBN}


def test_fused_maps_stay_in_bounds_under_heavy_perturbation():
    from handuq.fusion import fuse_maps

    for seed in range(20):
        spec = SynthSpec(dims=DIMS, n_hands=4, glove_shift=2.0, gesture_overlap=1.0,
                         blur_sigma=3.0, learner_noise=1.5, k=4, seed=seed)
        _, maps, _ = generate(spec)
        fused = fuse_maps(maps)
        assert fused.values.min() >= 0.0
        assert fused.values.max() <= 1.0


def test_spec_validation():
    with pytest.raises(RangeError):
        SynthSpec(dims=DIMS, n_hands=5)
    with pytest.raises(RangeError):
        SynthSpec(dims=DIMS, gesture_overlap=1.5)
    with pytest.raises(RangeError):
        SynthSpec(dims=DIMS, k=0)
    with pytest.raises(RangeError):
        SynthSpec(dims=DIMS, learner_noise=-0.1)


def test_render_scene_deterministic_rgb():
    gt, _, _ = generate(SynthSpec(dims=DIMS, n_hands=2, seed=3))
    img_a = render_scene(gt, seed=3, cluttered=True)
    img_b = render_scene(gt, seed=3, cluttered=True)
    assert img_a.shape == (32, 32, 3)
    assert img_a.dtype == np.uint8
    assert np.array_equal(img_a, img_b)


# -- scalar oracle ----------------------------------------------------------------


def test_oracle_hand_computed_case():
    gt = mask([[1, 1], [0, 0]])
    m = ProbabilityMap(gt.dims, np.array([[0.5, 1.0], [0.0, 0.0]]))
    got = oracle_metrics(gt, [m])
    assert got.iou == 1.0
    assert got.e_bar == pytest.approx(LN2 / 4, abs=1e-12)   # 0.173286795139986
    assert got.e_hand == pytest.approx(LN2 / 2, abs=1e-12)  # 0.346573590279973
    assert got.n_h == 2


def test_oracle_all_certain_correct():
    gt = mask([[1, 0], [0, 1]])
    m = ProbabilityMap(gt.dims, gt.values.astype(np.float64))
    got = oracle_metrics(gt, [m])
    assert (got.iou, got.e_bar, got.e_hand) == (1.0, 0.0, 0.0)


def test_oracle_agrees_with_pipeline_on_generated_scenes():
    config = MetricConfig(log_base="base2", tau=0.4)
    for seed in range(10):
        spec = SynthSpec(dims=Dims(16, 16), n_hands=seed % 5, glove_shift=0.4,
                         blur_sigma=0.8, learner_noise=0.2, k=3, seed=seed)
        gt, maps, _ = generate(spec)
        ref = oracle_metrics(gt, maps, config)
        got = evaluate(gt, maps, config)
        assert got.iou == pytest.approx(ref.iou, abs=1e-9)
        assert got.e_bar == pytest.approx(ref.e_bar, abs=1e-9)
        if ref.e_hand is None:
            assert got.e_hand is None
        else:
            assert got.e_hand == pytest.approx(ref.e_hand, abs=1e-9)


# -- statistical degradation direction ---------------------------------------------


def _mean_metrics(blur, noise, seeds=100):
    ious, e_hands = [], []
    for s in range(seeds):
        spec = SynthSpec(dims=Dims(48, 48), n_hands=1 + (s % 4), blur_sigma=blur,
                         learner_noise=noise, k=4, seed=s)
        gt, maps, _ = generate(spec)
        m = evaluate(gt, maps)
        ious.append(m.iou)
        e_hands.append(m.e_hand)
    return float(np.mean(ious)), float(np.mean(e_hands))


def test_mean_quality_monotone_in_blur():
    results = [_mean_metrics(blur, 0.05) for blur in (0.0, 1.0, 2.0)]
    ious = [r[0] for r in results]
    e_hands = [r[1] for r in results]
    assert ious == sorted(ious, reverse=True)
    assert e_hands == sorted(e_hands)


def test_mean_quality_monotone_in_noise():
    results = [_mean_metrics(0.0, noise) for noise in (0.05, 0.15, 0.3)]
    ious = [r[0] for r in results]
    e_hands = [r[1] for r in results]
    assert ious == sorted(ious, reverse=True)
    assert e_hands == sorted(e_hands)
