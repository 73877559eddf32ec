"""Deep-ensemble hand-segmentation evaluation toolkit.

Fuses base-learner probability maps, computes segmentation accuracy and
predictive-uncertainty metrics, classifies test conditions as ID/OOD per
training-dataset profile, and emits grouped reports and entropy heatmaps.
"""

__version__ = "0.1.0"

from .errors import (
    AmbiguousMaskError,
    DimensionError,
    EmptyAggregateError,
    EvalError,
    FormatError,
    HanduqError,
    LabelError,
    RangeError,
    SampleError,
)
from .fusion import EnsembleSet, fuse, fuse_maps, threshold
from .harness import (
    ConditionReport,
    EvalRecord,
    aggregate,
    render_report,
    run_evaluation,
    validate_manifest,
)
from .manifest import DatasetManifest, ManifestItem, load_manifest, save_manifest
from .metrics import (
    ImageMetrics,
    MetricConfig,
    entropy_map,
    evaluate_image,
    hand_entropy,
    iou,
    mean_entropy,
    mean_iou,
    pixel_entropy,
    two_class_iou,
)
from .raster import (
    Dims,
    EntropyMap,
    GroundTruthMask,
    PredictionMask,
    ProbabilityMap,
    read_mask,
    read_pmap,
    write_mask,
    write_pmap,
)
from .synth import SynthSpec, generate, oracle_metrics
from .taxonomy import (
    ConditionTag,
    ConditionTagSet,
    DistributionLabel,
    ScenarioProfile,
    builtin_profiles,
    classify,
    make_tags,
)

__all__ = [name for name in dir() if not name.startswith("_")]
