"""Dataset manifest: the declarative JSON document binding images, masks,
per-learner probability maps, and condition tags.

Schema (version 1, relative paths resolve against the manifest's directory):

    {
      "version": 1,
      "sampler": {...},                 # optional provenance, free-form
      "items": [
        {
          "id": "frame-0001",
          "image_path": "images/frame-0001.png",   # optional, overlays only
          "gt_mask_path": "masks/frame-0001.png",
          "learner_map_paths": ["maps/frame-0001_l0.pmap", ...],
          "tags": ["O1", "GH"],
          "background": "simple",
          "view": "side"
        }
      ],
      "profiles": [                      # optional user-supplied profiles
        {"name": "MyLab", "epistemic": ["O2", "GH"], "aleatoric": ["MBN"]}
      ]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import FormatError, RangeError
from .taxonomy import ConditionTag, ConditionTagSet, ScenarioProfile

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class ManifestItem:
    id: str
    gt_mask_path: str
    learner_map_paths: tuple[str, ...]
    tags: ConditionTagSet
    image_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "learner_map_paths", tuple(self.learner_map_paths))
        if len(self.learner_map_paths) < 1:
            raise RangeError(f"item {self.id!r}: needs at least one learner map")


@dataclass(frozen=True)
class DatasetManifest:
    items: tuple[ManifestItem, ...]
    profiles: tuple[ScenarioProfile, ...] = ()
    version: int = MANIFEST_VERSION
    sampler: dict[str, Any] | None = None
    base_dir: Path = field(default_factory=Path, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "profiles", tuple(self.profiles))

    def resolve(self, path: str) -> Path:
        return self.base_dir / path


def _require(obj: dict, key: str, context: str) -> Any:
    if key not in obj:
        raise FormatError(f"{context}: missing required field {key!r}")
    return obj[key]


def _parse_item(obj: dict, index: int) -> ManifestItem:
    context = f"items[{index}]"
    if not isinstance(obj, dict):
        raise FormatError(f"{context}: expected an object")
    item_id = str(_require(obj, "id", context))
    try:
        tags = ConditionTagSet(
            frozenset(ConditionTag(t) for t in _require(obj, "tags", context)),
            _require(obj, "background", context),
            _require(obj, "view", context),
        )
    except ValueError as exc:
        raise FormatError(f"{context} (id {item_id!r}): {exc}") from exc
    paths = _require(obj, "learner_map_paths", context)
    if not isinstance(paths, list) or not all(isinstance(p, str) for p in paths):
        raise FormatError(f"{context} (id {item_id!r}): learner_map_paths must be a list of paths")
    return ManifestItem(
        id=item_id,
        gt_mask_path=str(_require(obj, "gt_mask_path", context)),
        learner_map_paths=tuple(paths),
        tags=tags,
        image_path=obj.get("image_path"),
    )


def _parse_profile(obj: dict, index: int) -> ScenarioProfile:
    context = f"profiles[{index}]"
    try:
        return ScenarioProfile(
            name=str(_require(obj, "name", context)),
            epistemic_triggers=frozenset(ConditionTag(t) for t in obj.get("epistemic", [])),
            aleatoric_triggers=frozenset(ConditionTag(t) for t in obj.get("aleatoric", [])),
        )
    except ValueError as exc:
        raise FormatError(f"{context}: {exc}") from exc


def manifest_from_dict(doc: dict, base_dir: Path | str = ".") -> DatasetManifest:
    if not isinstance(doc, dict):
        raise FormatError("manifest root must be a JSON object")
    version = _require(doc, "version", "manifest")
    if version != MANIFEST_VERSION:
        raise FormatError(f"unsupported manifest version {version!r}")
    items = [_parse_item(o, i) for i, o in enumerate(_require(doc, "items", "manifest"))]
    profiles = [_parse_profile(o, i) for i, o in enumerate(doc.get("profiles", []))]
    return DatasetManifest(
        items=tuple(items),
        profiles=tuple(profiles),
        version=version,
        sampler=doc.get("sampler"),
        base_dir=Path(base_dir),
    )


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    return manifest_from_dict(doc, base_dir=path.parent)


def manifest_to_dict(manifest: DatasetManifest) -> dict:
    doc: dict[str, Any] = {"version": manifest.version}
    if manifest.sampler is not None:
        doc["sampler"] = manifest.sampler
    doc["items"] = []
    for item in manifest.items:
        entry: dict[str, Any] = {
            "id": item.id,
            "gt_mask_path": item.gt_mask_path,
            "learner_map_paths": list(item.learner_map_paths),
            "tags": sorted(t.value for t in item.tags.tags),
            "background": item.tags.background,
            "view": item.tags.view,
        }
        if item.image_path is not None:
            entry["image_path"] = item.image_path
        doc["items"].append(entry)
    if manifest.profiles:
        doc["profiles"] = [
            {
                "name": p.name,
                "epistemic": sorted(t.value for t in p.epistemic_triggers),
                "aleatoric": sorted(t.value for t in p.aleatoric_triggers),
            }
            for p in manifest.profiles
        ]
    return doc


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest_to_dict(manifest), indent=2) + "\n")
