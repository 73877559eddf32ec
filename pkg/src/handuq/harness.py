"""Evaluation runs over manifests and condition-grouped report emission.

One evaluation run binds a manifest to a single training-dataset profile
and a metric configuration, producing one record per item. Aggregation is
a declarative group-by over record attributes, so both the
background-complexity layout and the ID/OOD layout come from the same
engine. Reports are deterministic: rows are sorted by a semantic
condition order and numbers are serialized at fixed 6-decimal precision.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyAggregateError, EvalError, FormatError, HanduqError, RangeError
from .fusion import EnsembleSet
from .manifest import DatasetManifest, ManifestItem
from .metrics import ImageMetrics, MetricConfig, evaluate_image
from .raster import read_mask, read_pmap, read_pmap_dims
from .taxonomy import ConditionTagSet, DistributionLabel, ScenarioProfile, classify

logger = logging.getLogger(__name__)

GROUP_KEYS = ("profile", "kind", "condition", "background", "view")
REPORT_COLUMNS = (
    "profile",
    "id_ood",
    "condition",
    "n_images",
    "avg_miou",
    "avg_e_bar",
    "avg_e_hand",
    "n_zero_hand_excluded",
)


@dataclass(frozen=True)
class EvalRecord:
    """Per-(item, profile) result row."""

    item_id: str
    profile: str
    metrics: ImageMetrics
    label: DistributionLabel
    tags: ConditionTagSet


@dataclass(frozen=True)
class ConditionReport:
    """One aggregated row of a grouped report."""

    group: dict[str, str]
    n_images: int
    avg_miou: float
    avg_e_bar: float
    avg_e_hand: float | None
    n_zero_hand_excluded: int


def validate_manifest(manifest: DatasetManifest) -> list[str]:
    """Check manifest invariants; returns one diagnostic string per violation."""
    diagnostics: list[str] = []
    seen: set[str] = set()
    k = None
    for item in manifest.items:
        if item.id in seen:
            diagnostics.append(f"duplicate item id {item.id!r}")
        seen.add(item.id)

        if k is None:
            k = len(item.learner_map_paths)
        elif len(item.learner_map_paths) != k:
            diagnostics.append(
                f"item {item.id!r}: inconsistent learner count "
                f"{len(item.learner_map_paths)} (run uses K={k})"
            )

        paths = [item.gt_mask_path, *item.learner_map_paths]
        if item.image_path is not None:
            paths.append(item.image_path)
        missing = [p for p in paths if not manifest.resolve(p).is_file()]
        diagnostics.extend(f"item {item.id!r}: missing file {p}" for p in missing)
        if missing:
            continue

        try:
            gt_dims = _png_dims(manifest.resolve(item.gt_mask_path))
            for p in item.learner_map_paths:
                dims = read_pmap_dims(manifest.resolve(p))
                if dims != gt_dims:
                    diagnostics.append(
                        f"item {item.id!r}: {p} is {dims.width}x{dims.height}, "
                        f"mask is {gt_dims.width}x{gt_dims.height}"
                    )
        except (FormatError, OSError) as exc:
            diagnostics.append(f"item {item.id!r}: {exc}")
    return diagnostics


def _png_dims(path):
    from PIL import Image

    from .raster import Dims

    with Image.open(path) as img:
        return Dims(img.width, img.height)


def _evaluate_item(
    item: ManifestItem,
    manifest: DatasetManifest,
    profile: ScenarioProfile,
    config: MetricConfig,
) -> EvalRecord:
    try:
        gt = read_mask(manifest.resolve(item.gt_mask_path))
        maps = tuple(read_pmap(manifest.resolve(p)) for p in item.learner_map_paths)
        ensemble = EnsembleSet(maps, item.learner_map_paths)
        metrics = evaluate_image(ensemble, gt, config)
    except (HanduqError, OSError) as exc:
        raise EvalError(item.id, str(exc)) from exc
    return EvalRecord(
        item_id=item.id,
        profile=profile.name,
        metrics=metrics,
        label=classify(item.tags, profile),
        tags=item.tags,
    )


def run_evaluation(
    manifest: DatasetManifest,
    profile: ScenarioProfile,
    config: MetricConfig = MetricConfig(),
    *,
    skip_errors: bool = False,
    jobs: int = 1,
) -> list[EvalRecord]:
    """Evaluate every manifest item against one profile.

    Fails fast on the first broken item by default; silent exclusions
    would bias condition means, so skipping is opt-in and logged. Items
    evaluate concurrently under ``jobs`` workers; output order always
    follows the manifest, so results are independent of worker count.
    """
    if jobs < 1:
        raise RangeError(f"jobs must be >= 1, got {jobs}")

    def work(item: ManifestItem) -> EvalRecord | None:
        try:
            return _evaluate_item(item, manifest, profile, config)
        except EvalError:
            if not skip_errors:
                raise
            logger.warning("skipping failed item", exc_info=True)
            return None

    if jobs == 1:
        results = [work(item) for item in manifest.items]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, manifest.items))
    return [r for r in results if r is not None]


def _group_value(record: EvalRecord, key: str) -> str:
    if key == "profile":
        return record.profile
    if key == "kind":
        return record.label.kind
    if key == "condition":
        return record.tags.condition
    if key == "background":
        return record.tags.background
    if key == "view":
        return record.tags.view
    raise RangeError(f"unknown grouping key {key!r}; choose from {GROUP_KEYS}")


def aggregate(
    records: Sequence[EvalRecord],
    group_by: Sequence[str] = ("profile", "kind", "condition"),
) -> list[ConditionReport]:
    """Arithmetic means per group; e_hand means exclude zero-hand frames.

    The exclusion count is surfaced as its own column rather than hidden,
    because the zero-hand degenerate case is exactly where a silent drop
    would distort hand-entropy comparisons.
    """
    if not records:
        raise EmptyAggregateError("aggregate over an empty record list")
    for key in group_by:
        if key not in GROUP_KEYS:
            raise RangeError(f"unknown grouping key {key!r}; choose from {GROUP_KEYS}")

    groups: dict[tuple[str, ...], list[EvalRecord]] = {}
    for record in records:
        key = tuple(_group_value(record, k) for k in group_by)
        groups.setdefault(key, []).append(record)

    reports = []
    for key, members in groups.items():
        e_hand_values = [m.metrics.e_hand for m in members if m.metrics.e_hand is not None]
        reports.append(
            ConditionReport(
                group=dict(zip(group_by, key)),
                n_images=len(members),
                avg_miou=float(np.mean([m.metrics.iou for m in members], dtype=np.float64)),
                avg_e_bar=float(np.mean([m.metrics.e_bar for m in members], dtype=np.float64)),
                avg_e_hand=(
                    float(np.mean(e_hand_values, dtype=np.float64)) if e_hand_values else None
                ),
                n_zero_hand_excluded=len(members) - len(e_hand_values),
            )
        )
    reports.sort(key=_report_sort_key)
    return reports


def _condition_rank(condition: str) -> tuple:
    parts = set(condition.split("+"))
    return ("MBN" in parts, "RG" in parts, "GH" in parts, "O2" in parts, condition)


def _report_sort_key(report: ConditionReport) -> tuple:
    g = report.group
    return (
        g.get("profile", ""),
        g.get("kind", ""),
        _condition_rank(g.get("condition", "")),
        g.get("background", ""),
        g.get("view", ""),
    )


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def _report_cells(report: ConditionReport) -> dict[str, str]:
    g = report.group
    condition = g.get("condition", "")
    qualifiers = [g[k] for k in ("background", "view") if k in g]
    if qualifiers:
        # background/view grouping folds into the condition column to keep
        # the column schema stable across layouts
        condition = f"{condition} ({', '.join(qualifiers)})" if condition else ", ".join(qualifiers)
    return {
        "profile": g.get("profile", ""),
        "id_ood": g.get("kind", ""),
        "condition": condition,
        "n_images": str(report.n_images),
        "avg_miou": _fmt(report.avg_miou),
        "avg_e_bar": _fmt(report.avg_e_bar),
        "avg_e_hand": _fmt(report.avg_e_hand),
        "n_zero_hand_excluded": str(report.n_zero_hand_excluded),
    }


def render_report(
    reports: Iterable[ConditionReport],
    format: str = "markdown",
    config: MetricConfig | None = None,
) -> str:
    """Serialize grouped reports as csv, markdown, or json.

    Column order is fixed; numbers use 6-decimal fixed point so the three
    formats round-trip to identical values.
    """
    reports = list(reports)
    if not reports:
        raise EmptyAggregateError("render_report with no reports")
    rows = [_report_cells(r) for r in reports]
    iou_kind = "two_class" if (config and config.two_class_iou) else "hand_class"

    if format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()

    if format == "markdown":
        lines = []
        if iou_kind != "hand_class":
            lines.append(f"IoU variant: {iou_kind}")
            lines.append("")
        lines.append("| " + " | ".join(REPORT_COLUMNS) + " |")
        lines.append("|" + "|".join(" --- " for _ in REPORT_COLUMNS) + "|")
        for row in rows:
            lines.append("| " + " | ".join(row[c] for c in REPORT_COLUMNS) + " |")
        return "\n".join(lines) + "\n"

    if format == "json":
        payload = []
        for row in rows:
            entry: dict = {c: row[c] for c in ("profile", "id_ood", "condition")}
            entry["n_images"] = int(row["n_images"])
            for c in ("avg_miou", "avg_e_bar", "avg_e_hand"):
                entry[c] = float(row[c]) if row[c] else None
            entry["n_zero_hand_excluded"] = int(row["n_zero_hand_excluded"])
            payload.append(entry)
        return json.dumps({"iou_kind": iou_kind, "rows": payload}, indent=2) + "\n"

    raise RangeError(f"unknown report format {format!r}; choose csv, markdown, or json")
