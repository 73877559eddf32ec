"""Command-line entry point.

Subcommands: ingest (annotations/frames/sample), synth, fuse, eval,
report, heatmap. Configuration precedence is flags > config file >
defaults; the config file is a line-oriented ``key = value`` format and
its default path comes from the HANDUQ_CONFIG environment variable.

Exit codes: 0 success, 1 manifest-validation diagnostics, 2 I/O, format,
or usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .errors import HanduqError
from .fusion import EnsembleSet, fuse, threshold
from .harness import (
    EvalRecord,
    aggregate,
    render_report,
    run_evaluation,
    validate_manifest,
)
from .ingest import SAMPLER_ALGORITHM, balanced_sample, import_annotations, select_frames
from .manifest import (
    MANIFEST_VERSION,
    DatasetManifest,
    ManifestItem,
    load_manifest,
    save_manifest,
)
from .metrics import ImageMetrics, MetricConfig, entropy_map
from .raster import (
    Dims,
    PMAP_VERSION,
    read_mask,
    read_pmap,
    write_mask,
    write_pmap,
)
from .synth import GENERATOR_VERSION, SynthSpec, generate, render_scene
from .taxonomy import DistributionLabel, builtin_profiles, make_tags, profile_by_name

CONFIG_ENV_VAR = "HANDUQ_CONFIG"
RECORDS_VERSION = 1

_CONFIG_DEFAULTS = {"tau": 0.5, "log_base": "natural", "two_class_iou": False, "jobs": 1}


def _version_string() -> str:
    return (
        f"handuq {__version__} "
        f"(pmap-format v{PMAP_VERSION}, manifest v{MANIFEST_VERSION}, "
        f"generator {GENERATOR_VERSION}, sampler {SAMPLER_ALGORITHM})"
    )


def _parse_config_file(path: Path) -> dict:
    """Parse the ``key = value`` config format; # starts a comment."""
    values: dict = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise HanduqError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "tau":
            values["tau"] = float(value)
        elif key == "log_base":
            values["log_base"] = value
        elif key == "two_class_iou":
            values["two_class_iou"] = value.lower() in ("1", "true", "yes", "on")
        elif key == "jobs":
            values["jobs"] = int(value)
        else:
            raise HanduqError(f"{path}:{lineno}: unknown config key {key!r}")
    return values


def _resolve_config(args) -> tuple[MetricConfig, int]:
    """Apply flags > config file > defaults."""
    merged = dict(_CONFIG_DEFAULTS)
    config_path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV_VAR)
    if config_path:
        merged.update(_parse_config_file(Path(config_path)))
    for key in ("tau", "log_base", "two_class_iou", "jobs"):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    config = MetricConfig(
        log_base=merged["log_base"],
        tau=merged["tau"],
        two_class_iou=merged["two_class_iou"],
    )
    return config, merged["jobs"]


def _write_out(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _parse_dims(value: str) -> Dims:
    try:
        w, h = value.lower().split("x")
        return Dims(int(w), int(h))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {value!r}") from exc


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

# the benchmark's eight condition cells: slug, operator hand counts,
# (glove, overlap, blur) switches, background
_SYNTH_GRID = (
    ("o1-simple", (1, 2), False, False, False, "simple"),
    ("o1-cluttered", (1, 2), False, False, False, "cluttered"),
    ("o2", (3, 4), False, False, False, "cluttered"),
    ("o1-gh", (1, 2), True, False, False, "cluttered"),
    ("o2-gh", (3, 4), True, False, False, "cluttered"),
    ("o2-rg", (3, 4), False, True, False, "cluttered"),
    ("o2-gh-rg", (3, 4), True, True, False, "cluttered"),
    ("mbn", (1, 2), False, False, True, "cluttered"),
)


def _item_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def cmd_synth(args) -> int:
    out = Path(args.out)
    for sub in ("masks", "maps", "images"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    views = [v.strip() for v in args.views.split(",") if v.strip()]
    items = []
    for cond_idx, (slug, hand_counts, glove, overlap, blur, background) in enumerate(
        _SYNTH_GRID
    ):
        for view_idx, view in enumerate(views):
            for i in range(args.n_per_condition):
                spec = SynthSpec(
                    dims=args.dims,
                    n_hands=hand_counts[i % len(hand_counts)],
                    glove_shift=args.glove_shift if glove else 0.0,
                    gesture_overlap=args.overlap if overlap else 0.0,
                    blur_sigma=args.blur if blur else 0.0,
                    learner_noise=args.noise,
                    k=args.k,
                    seed=_item_seed(args.seed, cond_idx, view_idx, i),
                )
                gt, maps, tags = generate(spec)
                tags = replace(tags, background=background, view=view)

                item_id = f"{slug}-{view}-{i:03d}"
                mask_rel = f"masks/{item_id}.png"
                image_rel = f"images/{item_id}.png"
                write_mask(gt, out / mask_rel)
                scene = render_scene(gt, spec.seed, cluttered=(background == "cluttered"))
                Image.fromarray(scene).save(out / image_rel, format="PNG")
                map_rels = []
                for lk, pmap in enumerate(maps):
                    rel = f"maps/{item_id}_l{lk}.pmap"
                    write_pmap(pmap, out / rel)
                    map_rels.append(rel)
                items.append(
                    ManifestItem(
                        id=item_id,
                        gt_mask_path=mask_rel,
                        learner_map_paths=tuple(map_rels),
                        tags=tags,
                        image_path=image_rel,
                    )
                )

    manifest = DatasetManifest(
        items=tuple(items),
        sampler={"algorithm": GENERATOR_VERSION, "seed": args.seed},
        base_dir=out,
    )
    save_manifest(manifest, out / "manifest.json")
    print(f"wrote {len(items)} items under {out}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# fuse
# ---------------------------------------------------------------------------


def cmd_fuse(args) -> int:
    maps = tuple(read_pmap(p) for p in args.pmaps)
    fused = fuse(EnsembleSet(maps, tuple(args.pmaps)))
    write_pmap(fused, args.out)
    return 0


# ---------------------------------------------------------------------------
# eval / report
# ---------------------------------------------------------------------------


def _records_to_json(records: list[EvalRecord], config: MetricConfig) -> str:
    payload = {
        "version": RECORDS_VERSION,
        "config": {
            "log_base": config.log_base,
            "tau": config.tau,
            "two_class_iou": config.two_class_iou,
        },
        "records": [
            {
                "item_id": r.item_id,
                "profile": r.profile,
                "kind": r.label.kind,
                "uncertainty": r.label.uncertainty,
                "tags": sorted(t.value for t in r.tags.tags),
                "background": r.tags.background,
                "view": r.tags.view,
                "iou": r.metrics.iou,
                "e_bar": r.metrics.e_bar,
                "e_hand": r.metrics.e_hand,
                "n_h": r.metrics.n_h,
            }
            for r in records
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def _records_from_json(path: Path) -> tuple[list[EvalRecord], MetricConfig]:
    doc = json.loads(path.read_text())
    if doc.get("version") != RECORDS_VERSION:
        raise HanduqError(f"{path}: unsupported records version {doc.get('version')!r}")
    cfg = doc.get("config", {})
    config = MetricConfig(
        log_base=cfg.get("log_base", "natural"),
        tau=cfg.get("tau", 0.5),
        two_class_iou=cfg.get("two_class_iou", False),
    )
    records = []
    for entry in doc["records"]:
        records.append(
            EvalRecord(
                item_id=entry["item_id"],
                profile=entry["profile"],
                metrics=ImageMetrics(
                    iou=entry["iou"],
                    e_bar=entry["e_bar"],
                    e_hand=entry["e_hand"],
                    n_h=entry["n_h"],
                ),
                label=DistributionLabel(entry["kind"], entry["uncertainty"]),
                tags=make_tags(entry["tags"], entry["background"], entry["view"]),
            )
        )
    return records, config


def _show_config(config: MetricConfig, jobs: int) -> None:
    print(f"tau = {config.tau}")
    print(f"log_base = {config.log_base}")
    print(f"two_class_iou = {str(config.two_class_iou).lower()}")
    print(f"jobs = {jobs}")
    print("k = from manifest (learner_map_paths per item)")


def cmd_eval(args) -> int:
    config, jobs = _resolve_config(args)
    if args.show_config:
        _show_config(config, jobs)
        return 0

    manifest = load_manifest(args.manifest)
    diagnostics = validate_manifest(manifest)
    if diagnostics:
        for diag in diagnostics:
            print(diag, file=sys.stderr)
        return 1

    if args.profile == "all":
        names = [p.name for p in manifest.profiles] or [p.name for p in builtin_profiles()]
    else:
        names = [args.profile]

    records: list[EvalRecord] = []
    for name in names:
        profile = profile_by_name(name, manifest.profiles)
        records.extend(
            run_evaluation(
                manifest, profile, config, skip_errors=args.skip_errors, jobs=jobs
            )
        )

    if args.records_out:
        Path(args.records_out).write_text(_records_to_json(records, config))

    group_by = [k.strip() for k in args.group_by.split(",") if k.strip()]
    reports = aggregate(records, group_by)
    _write_out(render_report(reports, args.format, config), args.out)
    return 0


def cmd_report(args) -> int:
    records, config = _records_from_json(Path(args.records))
    group_by = [k.strip() for k in args.group_by.split(",") if k.strip()]
    reports = aggregate(records, group_by)
    _write_out(render_report(reports, args.format, config), args.out)
    return 0


# ---------------------------------------------------------------------------
# heatmap
# ---------------------------------------------------------------------------


def cmd_heatmap(args) -> int:
    from .heatmap import LEGEND, render_entropy, render_overlay, save_image

    config, _ = _resolve_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.pmap:
        pmap = read_pmap(args.pmap)
        emap = entropy_map(pmap, config)
        target = out_dir / (Path(args.pmap).stem + "_entropy.png")
        save_image(render_entropy(emap, args.scale, config, args.colormap), target)
        print(target, file=sys.stderr)
        return 0

    if not args.manifest:
        print("error: heatmap needs --manifest or --pmap", file=sys.stderr)
        return 2

    manifest = load_manifest(args.manifest)
    wanted = set(args.items.split(",")) if args.items else None
    for item in manifest.items:
        if wanted is not None and item.id not in wanted:
            continue
        maps = tuple(read_pmap(manifest.resolve(p)) for p in item.learner_map_paths)
        fused = fuse(EnsembleSet(maps, item.learner_map_paths))
        emap = entropy_map(fused, config)
        save_image(
            render_entropy(emap, args.scale, config, args.colormap),
            out_dir / f"{item.id}_entropy.png",
        )
        gt = read_mask(manifest.resolve(item.gt_mask_path))
        base = None
        if item.image_path:
            with Image.open(manifest.resolve(item.image_path)) as img:
                base = np.asarray(img.convert("RGB"))
        save_image(
            render_overlay(base, gt, threshold(fused, config.tau)),
            out_dir / f"{item.id}_overlay.png",
        )
    if args.legend:
        legend_path = out_dir / "legend.json"
        legend_path.write_text(
            json.dumps({k: list(v) for k, v in LEGEND.items()}, indent=2) + "\n"
        )
    return 0


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------


def cmd_ingest_annotations(args) -> int:
    fallback = args.dims if args.dims else None
    pairs = import_annotations(args.export, args.out, fallback_dims=fallback)
    for image_id, path in pairs:
        print(f"{image_id}\t{path}")
    return 0


def cmd_ingest_frames(args) -> int:
    frames = sorted(Path(args.frames_dir).glob(args.pattern))
    kept = select_frames(frames, args.min_difference)
    for path in kept:
        print(path)
    return 0


def cmd_ingest_sample(args) -> int:
    manifest = load_manifest(args.manifest)
    subset = balanced_sample(manifest, args.per_condition, args.seed)
    save_manifest(subset, args.out)
    print(f"sampled {len(subset.items)} of {len(manifest.items)} items", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file (key = value lines)")
    parser.add_argument("--tau", type=float, default=None, help="decision threshold")
    parser.add_argument(
        "--log-base", dest="log_base", choices=("natural", "base2"), default=None
    )
    parser.add_argument(
        "--two-class-iou",
        dest="two_class_iou",
        action="store_const",
        const=True,
        default=None,
        help="average hand and background IoU instead of hand-only",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="handuq",
        description="Deep-ensemble hand-segmentation evaluation toolkit",
    )
    parser.add_argument("--version", action="version", version=_version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="emit a synthetic benchmark dataset + manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", type=_parse_dims, default=Dims(64, 64))
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--n-per-condition", type=int, default=6)
    p.add_argument("--views", default="side", help="comma list: side,egocentric")
    p.add_argument("--noise", type=float, default=0.08)
    p.add_argument("--glove-shift", type=float, default=0.6)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--blur", type=float, default=2.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fuse", help="average K probability maps into one")
    p.add_argument("pmaps", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", help="run an evaluation and emit a grouped report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--profile", default="all", help="profile name or 'all'")
    p.add_argument("--group-by", default="profile,kind,condition")
    p.add_argument("--format", choices=("csv", "markdown", "json"), default="csv")
    p.add_argument("--out", default=None, help="report path (default stdout)")
    p.add_argument("--records-out", default=None, help="write per-image records JSON")
    p.add_argument("--skip-errors", action="store_true")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--show-config", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="re-aggregate saved records into a report")
    p.add_argument("--records", required=True)
    p.add_argument("--group-by", default="profile,kind,condition")
    p.add_argument("--format", choices=("csv", "markdown", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("heatmap", help="render entropy heatmaps and overlays")
    p.add_argument("--manifest")
    p.add_argument("--items", help="comma list of item ids (default: all)")
    p.add_argument("--pmap", help="render a single probability-map file instead")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--scale", choices=("fixed_0_to_log2", "minmax"), default="fixed_0_to_log2")
    p.add_argument("--colormap", choices=("gray", "fire"), default="gray")
    p.add_argument("--legend", action="store_true", help="write the color legend")
    _add_config_flags(p)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("ingest", help="dataset preparation steps")
    ingest_sub = p.add_subparsers(dest="ingest_command", required=True)

    q = ingest_sub.add_parser("annotations", help="annotation export JSON -> mask PNGs")
    q.add_argument("--export", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--dims", type=_parse_dims, default=None, help="size for zero-region images")
    q.set_defaults(func=cmd_ingest_annotations)

    q = ingest_sub.add_parser("frames", help="greedy near-duplicate frame filter")
    q.add_argument("frames_dir")
    q.add_argument("--pattern", default="*.png")
    q.add_argument("--min-difference", type=float, required=True)
    q.set_defaults(func=cmd_ingest_frames)

    q = ingest_sub.add_parser("sample", help="seeded balanced per-condition sampling")
    q.add_argument("--manifest", required=True)
    q.add_argument("--per-condition", type=int, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_ingest_sample)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (HanduqError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
