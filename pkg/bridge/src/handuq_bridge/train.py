"""Toy-scale ensemble training on synthetic scenes.

Trains K base learners, half per architecture family, each from its own
seed with shuffled mini-batch order as the diversification mechanism.
Checkpoints carry a content hash (sha256 over the state dict) so reruns
can be compared independently of serialization details. Hyperparameters
below are the toy trainer's own; they claim no fidelity to any full-scale
setup.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn
from torch.utils.data import DataLoader, TensorDataset

from .formats import load_manifest, read_image, read_mask
from .models import build_model

VAL_EVERY = 10  # every 10th item is validation: a deterministic 9:1 split
DIVERGENCE_FLOOR = 0.5


@dataclass(frozen=True)
class TrainSettings:
    input_size: int = 64
    epochs: int = 12
    batch_size: int = 8
    learning_rate: float = 2e-3


def state_dict_digest(state: dict) -> str:
    """Content hash of a model: stable across torch serialization details."""
    digest = hashlib.sha256()
    for name in sorted(state):
        digest.update(name.encode())
        digest.update(state[name].detach().cpu().numpy().tobytes())
    return digest.hexdigest()


def _resize_batch(x: torch.Tensor, size: int, mode: str) -> torch.Tensor:
    if x.shape[-1] == size and x.shape[-2] == size:
        return x
    kwargs = {} if mode == "nearest" else {"align_corners": False}
    return torch.nn.functional.interpolate(x, size=(size, size), mode=mode, **kwargs)


def load_training_tensors(manifest_path: str | Path, input_size: int):
    """Read (image, mask) pairs from a manifest into train/val tensors."""
    manifest = load_manifest(manifest_path)
    base = manifest["_base_dir"]
    xs, ys = [], []
    for item in manifest["items"]:
        if not item.get("image_path"):
            raise ValueError(f"item {item['id']!r} has no image_path; cannot train on it")
        xs.append(read_image(base / item["image_path"]))
        ys.append(read_mask(base / item["gt_mask_path"]))
    images = torch.from_numpy(np.stack(xs)).permute(0, 3, 1, 2)
    masks = torch.from_numpy(np.stack(ys)).unsqueeze(1).float()
    images = _resize_batch(images, input_size, "bilinear").clamp(0, 1)
    masks = _resize_batch(masks, input_size, "nearest").squeeze(1).long()

    val_idx = [i for i in range(len(xs)) if i % VAL_EVERY == VAL_EVERY - 1]
    train_idx = [i for i in range(len(xs)) if i % VAL_EVERY != VAL_EVERY - 1]
    return (
        images[train_idx], masks[train_idx],
        images[val_idx], masks[val_idx],
    )


@torch.no_grad()
def validation_miou(model: nn.Module, images: torch.Tensor, masks: torch.Tensor) -> float:
    """Mean over images of hand-class IoU at threshold 0.5 (both-empty -> 1)."""
    model.eval()
    scores = []
    for i in range(len(images)):
        prob = torch.softmax(model(images[i : i + 1]), dim=1)[0, 1]
        pred = prob >= 0.5
        gt = masks[i].bool()
        union = (pred | gt).sum().item()
        scores.append(1.0 if union == 0 else (pred & gt).sum().item() / union)
    return float(np.mean(scores))


def train_learner(
    family: str,
    seed: int,
    tensors,
    settings: TrainSettings,
) -> tuple[nn.Module, float]:
    train_x, train_y, val_x, val_y = tensors
    torch.manual_seed(seed)
    model = build_model(family)
    optimizer = torch.optim.Adam(model.parameters(), lr=settings.learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    generator = torch.Generator().manual_seed(seed)
    loader = DataLoader(
        TensorDataset(train_x, train_y),
        batch_size=settings.batch_size,
        shuffle=True,
        generator=generator,
    )
    model.train()
    for _ in range(settings.epochs):
        for xb, yb in loader:
            optimizer.zero_grad()
            loss_fn(model(xb), yb).backward()
            optimizer.step()
    return model, validation_miou(model, val_x, val_y)


def train_toy_ensemble(
    manifest_path: str | Path,
    k: int,
    seeds: list[int],
    out_dir: str | Path,
    settings: TrainSettings = TrainSettings(),
) -> Path:
    """Train K learners (first half tiny-UNet, second half tiny-RefineNet).

    Writes one checkpoint per learner plus meta.json with per-learner
    validation mIoU and content hashes. A learner below the divergence
    floor marks the whole run failed.
    """
    if k < 2 or k % 2 != 0:
        raise ValueError(f"k must be even and >= 2, got {k}")
    if len(seeds) != k:
        raise ValueError(f"need {k} seeds, got {len(seeds)}")

    torch.use_deterministic_algorithms(True)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tensors = load_training_tensors(manifest_path, settings.input_size)

    learners = []
    diverged = []
    for index, seed in enumerate(seeds):
        family = "unet" if index < k // 2 else "refinenet"
        learner_id = f"{family}-s{seed}"
        model, val_miou = train_learner(family, seed, tensors, settings)
        checkpoint = out_dir / f"{learner_id}.pt"
        torch.save(model.state_dict(), checkpoint)
        digest = state_dict_digest(model.state_dict())
        learners.append(
            {
                "id": learner_id,
                "family": family,
                "seed": seed,
                "checkpoint": checkpoint.name,
                "val_miou": val_miou,
                "sha256": digest,
            }
        )
        if val_miou < DIVERGENCE_FLOOR:
            diverged.append(learner_id)
        print(f"{learner_id}: val mIoU {val_miou:.4f}")

    meta = {
        "k": k,
        "input_size": settings.input_size,
        "epochs": settings.epochs,
        "learners": learners,
        "status": "failed" if diverged else "ok",
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    if diverged:
        raise RuntimeError(f"training diverged (val mIoU < {DIVERGENCE_FLOOR}): {diverged}")
    return out_dir
