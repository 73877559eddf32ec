#!/usr/bin/env python3
"""End-to-end demo: synthesize a benchmark dataset, evaluate it against all
four training-dataset profiles, and render a few heatmaps.

Usage: python3 scripts/demo_pipeline.py [workdir]
"""

import sys
from pathlib import Path

from handuq.cli import main as handuq


def run(argv):
    print(f"$ handuq {' '.join(argv)}")
    code = handuq(argv)
    if code != 0:
        sys.exit(code)


def main():
    workdir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
    data = workdir / "data"

    run(["synth", "--out", str(data), "--seed", "42",
         "--dims", "96x96", "--k", "4", "--n-per-condition", "10",
         "--views", "side,egocentric"])

    for profile in ("EgoHands", "Ego2Hands", "HADR", "HAGS"):
        report = workdir / f"report_{profile}.md"
        run(["eval", "--manifest", str(data / "manifest.json"),
             "--profile", profile, "--format", "markdown", "--out", str(report)])
        print(report.read_text())

    run(["eval", "--manifest", str(data / "manifest.json"), "--profile", "HAGS",
         "--group-by", "profile,condition,background", "--format", "markdown",
         "--out", str(workdir / "report_background_effect.md")])

    run(["heatmap", "--manifest", str(data / "manifest.json"),
         "--items", "o1-cluttered-side-000,mbn-side-000,o2-gh-rg-side-000",
         "--out-dir", str(workdir / "heatmaps"), "--colormap", "fire", "--legend"])

    print(f"\nartifacts under {workdir}/")


if __name__ == "__main__":
    main()
