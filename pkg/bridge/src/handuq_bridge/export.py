"""Run a trained ensemble over images and export per-learner probability
maps in the PMAP interchange format, plus manifest metadata binding them.

Images are resized (bilinear) to the model input size for inference and the
hand-probability channel is resized back to the source dimensions, so the
exported rasters align pixel-for-pixel with the ground-truth masks.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .formats import load_manifest, read_image, write_pmap
from .models import build_model
from .train import state_dict_digest

IMAGE_SUFFIXES = (".png", ".bmp", ".jpg", ".jpeg")


def load_ensemble(model_dir: str | Path):
    model_dir = Path(model_dir)
    meta = json.loads((model_dir / "meta.json").read_text())
    models = []
    for entry in meta["learners"]:
        model = build_model(entry["family"])
        state = torch.load(model_dir / entry["checkpoint"], weights_only=True)
        if state_dict_digest(state) != entry["sha256"]:
            raise ValueError(f"checkpoint {entry['checkpoint']} does not match its recorded hash")
        model.load_state_dict(state)
        model.eval()
        models.append((entry["id"], model))
    return meta, models


@torch.no_grad()
def _predict_probability(model, image: np.ndarray, input_size: int) -> np.ndarray:
    """RGB (h, w, 3) in [0,1] -> hand probability (h, w) float32."""
    h, w = image.shape[:2]
    x = torch.from_numpy(image).permute(2, 0, 1).unsqueeze(0)
    x = torch.nn.functional.interpolate(
        x, size=(input_size, input_size), mode="bilinear", align_corners=False
    ).clamp(0, 1)
    scores = model(x)
    prob = torch.softmax(scores, dim=1)[:, 1:2]  # normalize the two class scores
    prob = torch.nn.functional.interpolate(
        prob, size=(h, w), mode="bilinear", align_corners=False
    )
    return prob[0, 0].clamp(0, 1).numpy().astype(np.float32)


def _export_images(models, input_size, images, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    items, failures = [], []
    for image_id, image_path in images:
        try:
            image = read_image(image_path)
        except Exception as exc:
            failures.append({"id": image_id, "error": f"{type(exc).__name__}: {exc}"})
            continue
        map_paths = []
        for learner_id, model in models:
            pmap_path = out_dir / f"{image_id}_{learner_id}.pmap"
            write_pmap(_predict_probability(model, image, input_size), pmap_path)
            map_paths.append(pmap_path.name)
        items.append(
            {"id": image_id, "image_path": str(image_path), "learner_map_paths": map_paths}
        )
    return items, failures


def export_predictions(model_dir: str | Path, image_dir: str | Path, out_dir: str | Path) -> dict:
    """Export one PMAP per (image, learner) and return a manifest fragment.

    Per-image load failures are recorded in the fragment and mark it
    partial instead of aborting the whole export.
    """
    meta, models = load_ensemble(model_dir)
    image_dir = Path(image_dir)
    images = [
        (p.stem, p)
        for p in sorted(image_dir.iterdir())
        if p.suffix.lower() in IMAGE_SUFFIXES
    ]
    items, failures = _export_images(models, meta["input_size"], images, Path(out_dir))
    fragment = {
        "k": meta["k"],
        "learners": [learner_id for learner_id, _ in models],
        "items": items,
        "failures": failures,
        "partial": bool(failures),
    }
    (Path(out_dir) / "fragment.json").write_text(json.dumps(fragment, indent=2) + "\n")
    return fragment


def export_for_manifest(
    model_dir: str | Path, manifest_path: str | Path, out_dir: str | Path
) -> Path:
    """Export predictions for every manifest item and write a new manifest
    whose learner_map_paths point at the exported PMAPs (ground truth, tags,
    and images carried over). The result feeds the evaluation CLI directly.
    """
    meta, models = load_ensemble(model_dir)
    manifest = load_manifest(manifest_path)
    base = manifest["_base_dir"]
    out_dir = Path(out_dir)
    maps_dir = out_dir / "maps"

    images = [(item["id"], base / item["image_path"]) for item in manifest["items"]]
    items, failures = _export_images(models, meta["input_size"], images, maps_dir)
    if failures:
        raise RuntimeError(f"image load failures during export: {failures}")

    exported = {entry["id"]: entry for entry in items}
    doc = {"version": 1, "items": []}
    for item in manifest["items"]:
        source = exported[item["id"]]
        doc["items"].append(
            {
                "id": item["id"],
                "image_path": str((base / item["image_path"]).resolve()),
                "gt_mask_path": str((base / item["gt_mask_path"]).resolve()),
                "learner_map_paths": [f"maps/{name}" for name in source["learner_map_paths"]],
                "tags": item["tags"],
                "background": item["background"],
                "view": item["view"],
            }
        )
    manifest_out = out_dir / "manifest.json"
    manifest_out.write_text(json.dumps(doc, indent=2) + "\n")
    return manifest_out
