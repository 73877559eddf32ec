"""Toy ensemble trainer/exporter speaking the evaluation toolkit's
interchange formats (PMAP rasters, mask PNGs, manifest JSON)."""

__version__ = "0.1.0"

from .export import export_for_manifest, export_predictions
from .models import TinyRefineNet, TinyUNet, build_model
from .train import TrainSettings, train_toy_ensemble

__all__ = [
    "TinyRefineNet",
    "TinyUNet",
    "TrainSettings",
    "build_model",
    "export_for_manifest",
    "export_predictions",
    "train_toy_ensemble",
]
