#!/usr/bin/env python3
"""Drift frequency versus magnetic field: sweep, analyze, optional figure.

Reproduces the linear frequency law of the sliding wave: the detector AC
peak in the orthogonal polarization channel sits slightly below twice the
Larmor frequency and scales linearly with the applied field.

Usage:
    python scripts/frequency_vs_field.py --out runs/freq [--values 0.25,0.5,0.75,1.0]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from smsdw.cli import main as cli_main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "frequency_sweep.yaml"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/freq")
    parser.add_argument("--values", default="0.25,0.5,0.75,1.0")
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    code = cli_main(["sweep", "--config", str(CONFIG), "--param", "bx",
                     "--values", args.values, "--jobs", str(args.jobs),
                     "--out", args.out, "--name", "bx_sweep"])
    if code != 0:
        return code
    sweep_dir = Path(args.out) / "bx_sweep"
    code = cli_main(["analyze", "--sweep", str(sweep_dir), "--freq"])
    if code != 0:
        return code
    print(f"frequency table: {sweep_dir / 'freq_vs_bx.csv'}")
    print("render with: smsdw-plot --kind freq-vs-b "
          f"--input {sweep_dir / 'freq_vs_bx.csv'} --output freq_vs_bx.png")
    return 0


if __name__ == "__main__":
    sys.exit(main())
