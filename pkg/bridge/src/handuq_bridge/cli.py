"""Bridge entry point: train a toy ensemble, export its predictions."""

from __future__ import annotations

import argparse
import sys

from .export import export_for_manifest, export_predictions
from .train import TrainSettings, train_toy_ensemble


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="handuq-bridge",
        description="Train toy segmentation ensembles and export PMAP predictions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train K learners on a synthetic manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--seeds", default=None, help="comma list, one per learner")
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("--input-size", type=int, default=64)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--learning-rate", type=float, default=2e-3)

    p = sub.add_parser("export", help="export per-learner probability maps")
    p.add_argument("--models", required=True)
    p.add_argument("--out", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--manifest", help="export for a manifest and emit an eval-ready manifest")
    group.add_argument("--images", help="export a bare image directory and emit a fragment")

    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            seeds = (
                [int(s) for s in args.seeds.split(",")]
                if args.seeds
                else list(range(args.k))
            )
            settings = TrainSettings(
                input_size=args.input_size,
                epochs=args.epochs,
                batch_size=args.batch_size,
                learning_rate=args.learning_rate,
            )
            train_toy_ensemble(args.manifest, args.k, seeds, args.out, settings)
        elif args.command == "export":
            if args.manifest:
                manifest_path = export_for_manifest(args.models, args.manifest, args.out)
                print(manifest_path)
            else:
                fragment = export_predictions(args.models, args.images, args.out)
                print(
                    f"exported {len(fragment['items'])} items, "
                    f"{len(fragment['failures'])} failures",
                    file=sys.stderr,
                )
                if fragment["partial"]:
                    return 1
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
