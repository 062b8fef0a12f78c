"""Run the command-line tool on the bundled data and print its reports.

    python3 scripts/demo.py [--out demo_out]
"""
from __future__ import annotations

import argparse
from pathlib import Path

from pbsenhance.cli import main as cli

DATA = Path(__file__).resolve().parent.parent / "data"


def run(*argv):
    print("$ pbsenhance " + " ".join(str(a) for a in argv))
    code = cli([str(a) for a in argv])
    if code:
        raise SystemExit(code)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path("demo_out"))
    args = ap.parse_args()
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    sample = DATA / "sample_underexposed.png"
    run("enhance", "photo", sample, out / "sample.png", "--dump-illum", out / "sample_illum.png")
    run("enhance", "photo", sample, out / "sample_per_channel.png", "--per-channel")
    run("metrics", "de", sample)
    run("metrics", "de", out / "sample.png")
    run("enhance", "video", DATA / "video", out / "video", "--keyframes-only")
    run("enhance", "video", DATA / "video", out / "video", "--report", out / "video_report.txt")
    print((out / "video_report.txt").read_text(), end="")
    print(f"outputs in {out}")


if __name__ == "__main__":
    main()
