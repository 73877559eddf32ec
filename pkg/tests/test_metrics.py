import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from handuq import (
    Dims,
    DimensionError,
    EmptyAggregateError,
    EnsembleSet,
    GroundTruthMask,
    ImageMetrics,
    MetricConfig,
    PredictionMask,
    ProbabilityMap,
    RangeError,
    entropy_map,
    evaluate_image,
    hand_entropy,
    iou,
    mean_entropy,
    mean_iou,
    pixel_entropy,
    two_class_iou,
)
from handuq.synth import oracle_metrics

from .conftest import mask, pmap

LN2 = math.log(2.0)
BASE2 = MetricConfig(log_base="base2")

unit_floats = st.floats(0.0, 1.0, allow_nan=False)


# -- pixel entropy ----------------------------------------------------------


def test_certain_predictions_have_zero_entropy():
    assert pixel_entropy(0.0) == 0.0
    assert pixel_entropy(1.0) == 0.0


def test_maximum_at_half():
    assert pixel_entropy(0.5) == pytest.approx(LN2, rel=1e-15)
    assert pixel_entropy(0.5, BASE2) == pytest.approx(1.0, rel=1e-15)


def test_quarter_probability_frozen_value():
    # -[0.25 ln 0.25 + 0.75 ln 0.75], high-precision reference 0.562335144618808350
    assert pixel_entropy(0.25) == pytest.approx(0.5623351446188083, abs=1e-12)


@pytest.mark.parametrize("p", [-0.1, 1.0000001, float("nan"), float("inf")])
def test_entropy_rejects_invalid_probability(p):
    with pytest.raises(RangeError):
        pixel_entropy(p)


@given(unit_floats)
def test_entropy_symmetry(p):
    assert pixel_entropy(p) == pytest.approx(pixel_entropy(1.0 - p), abs=1e-12)


@given(unit_floats)
def test_entropy_bounded_by_ln2(p):
    assert 0.0 <= pixel_entropy(p) <= LN2 + 1e-15


@given(unit_floats)
def test_base2_is_natural_over_ln2(p):
    assert pixel_entropy(p, BASE2) == pytest.approx(pixel_entropy(p) / LN2, abs=1e-12)


# -- entropy maps and means -------------------------------------------------


def test_entropy_map_constant_half():
    emap = entropy_map(pmap([[0.5, 0.5], [0.5, 0.5]]))
    assert np.allclose(emap.values, LN2, atol=1e-15)


def test_entropy_map_binary_is_zero():
    emap = entropy_map(pmap([[0.0, 1.0], [1.0, 0.0]]))
    assert np.array_equal(emap.values, np.zeros((2, 2)))


def test_entropy_map_composes_scalar_cases():
    emap = entropy_map(pmap([[0.5, 1.0]]))
    assert emap.values[0, 0] == pytest.approx(LN2, abs=1e-15)
    assert emap.values[0, 1] == 0.0


def test_mean_entropy_of_constant():
    emap = entropy_map(pmap([[0.5] * 4]))
    assert mean_entropy(emap) == pytest.approx(LN2, abs=1e-15)


def test_mean_entropy_two_pixel():
    # per-pixel sum oracle: (ln2 + 0) / 2 = 0.346573590279972654
    emap = entropy_map(pmap([[0.5, 1.0]]))
    assert mean_entropy(emap) == pytest.approx(0.3465735902799727, abs=1e-12)


def test_mean_entropy_all_zero():
    assert mean_entropy(entropy_map(pmap([[0.0, 1.0]]))) == 0.0


def test_hand_entropy_masked_mean():
    emap = entropy_map(pmap([[0.5, 0.975]]))
    assert hand_entropy(emap, mask([[1, 0]])) == pytest.approx(LN2, abs=1e-12)


def test_hand_entropy_zero_hand_is_undefined():
    emap = entropy_map(pmap([[0.5, 0.5]]))
    assert hand_entropy(emap, mask([[0, 0]])) is None


def test_hand_entropy_full_mask_equals_mean_entropy():
    emap = entropy_map(pmap([[0.3, 0.8], [0.1, 0.65]]))
    assert hand_entropy(emap, mask(np.ones((2, 2)))) == pytest.approx(
        mean_entropy(emap), rel=1e-15
    )


def test_hand_entropy_dim_mismatch():
    emap = entropy_map(pmap([[0.5]]))
    with pytest.raises(DimensionError):
        hand_entropy(emap, mask([[0, 1]]))


# -- IoU ----------------------------------------------------------------------


def _pred(rows):
    values = np.asarray(rows, dtype=bool)
    return PredictionMask(Dims(values.shape[1], values.shape[0]), values)


def test_iou_perfect_overlap():
    assert iou(_pred([[1, 1], [0, 0]]), mask([[1, 1], [0, 0]])) == 1.0


def test_iou_disjoint():
    assert iou(_pred([[1, 0]]), mask([[0, 1]])) == 0.0


def test_iou_partial_overlap():
    pred = _pred([[1, 1, 1, 1, 0, 0]])
    gt = mask([[0, 0, 1, 1, 1, 1]])
    assert iou(pred, gt) == pytest.approx(2 / 6, abs=1e-15)


def test_iou_both_empty_scores_one():
    assert iou(_pred([[0, 0]]), mask([[0, 0]])) == 1.0


def test_iou_dim_mismatch():
    with pytest.raises(DimensionError):
        iou(_pred([[1]]), mask([[1, 0]]))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000))
def test_iou_symmetry_and_brute_force(seed):
    """Set-arithmetic oracle over random 4x4 masks."""
    rng = np.random.default_rng(seed)
    a = rng.random((4, 4)) < 0.4
    b = rng.random((4, 4)) < 0.4
    got = iou(_pred(a), mask(b))
    set_a = {i for i, v in enumerate(a.ravel()) if v}
    set_b = {i for i, v in enumerate(b.ravel()) if v}
    expected = 1.0 if not (set_a | set_b) else len(set_a & set_b) / len(set_a | set_b)
    assert got == pytest.approx(expected, abs=1e-15)
    assert got == iou(_pred(b), mask(a))
    if np.array_equal(a, b):
        assert got == 1.0


def test_two_class_iou():
    pred = _pred([[1, 0], [0, 0]])
    gt = mask([[1, 0], [0, 0]])
    assert two_class_iou(pred, gt) == 1.0
    # hand IoU 0, background IoU 2/4 on fully swapped masks
    pred = _pred([[1, 1], [0, 0]])
    gt = mask([[0, 0], [1, 1]])
    assert two_class_iou(pred, gt) == pytest.approx(0.0, abs=1e-15)


def test_mean_iou():
    records = [ImageMetrics(v, 0.0, None, 0) for v in (0.2, 0.4)]
    assert mean_iou(records) == pytest.approx(0.3, abs=1e-15)
    assert mean_iou(records[:1]) == pytest.approx(0.2, abs=1e-15)
    twenty = [ImageMetrics(0.5, 0.0, None, 0)] * 20
    assert mean_iou(twenty) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(EmptyAggregateError):
        mean_iou([])


# -- whole-image pipeline -----------------------------------------------------


def _ens(*maps):
    return EnsembleSet(tuple(maps), tuple(f"l{i}" for i in range(len(maps))))


def test_perfect_confident_prediction():
    gt = mask([[1, 0], [0, 1]])
    learner = ProbabilityMap(gt.dims, gt.values.astype(np.float64))
    m = evaluate_image(_ens(learner), gt)
    assert m.iou == 1.0
    assert m.e_bar == 0.0
    assert m.e_hand == 0.0
    assert m.n_h == 2


def test_maximal_disagreement():
    gt = mask(np.ones((2, 2)))
    m = evaluate_image(
        _ens(
            ProbabilityMap(gt.dims, np.zeros((2, 2))),
            ProbabilityMap(gt.dims, np.ones((2, 2))),
        ),
        gt,
    )
    assert m.iou == 1.0  # fused 0.5 >= tau
    assert m.e_bar == pytest.approx(LN2, abs=1e-12)
    assert m.e_hand == pytest.approx(LN2, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_matches_scalar_reference_on_random_instances(seed):
    rng = np.random.default_rng(seed)
    gt = mask(rng.random((8, 8)) < 0.3)
    maps = [ProbabilityMap(gt.dims, rng.uniform(0, 1, (8, 8))) for _ in range(4)]
    config = MetricConfig()
    got = evaluate_image(_ens(*maps), gt, config)
    ref = oracle_metrics(gt, maps, config)
    assert got.iou == pytest.approx(ref.iou, abs=1e-9)
    assert got.e_bar == pytest.approx(ref.e_bar, abs=1e-9)
    if ref.e_hand is None:
        assert got.e_hand is None
    else:
        assert got.e_hand == pytest.approx(ref.e_hand, abs=1e-9)


def test_config_validation():
    with pytest.raises(RangeError):
        MetricConfig(log_base="base10")
    with pytest.raises(RangeError):
        MetricConfig(tau=1.5)
