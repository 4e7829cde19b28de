#!/usr/bin/env python3
"""Camera-integration contrast: minima where the wave slides by full periods.

Runs one drifting-wave configuration, emulates finite-integration imaging,
and writes contrast.csv (contrast versus integration time).  With --sweep it
instead varies Bx at fixed integration time, the configuration in which the
contrast minima spell out the linear frequency law.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from smsdw.cli import main as cli_main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "frequency_sweep.yaml"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs/contrast")
    parser.add_argument("--sweep", action="store_true",
                        help="contrast versus Bx at fixed integration time")
    parser.add_argument("--tau", type=float, default=2e-6,
                        help="integration time (s) for the sweep mode")
    args = parser.parse_args()

    if args.sweep:
        code = cli_main(["sweep", "--config", str(CONFIG), "--param", "bx",
                         "--values", "0.25..1.0:7", "--out", args.out,
                         "--name", "bx_sweep"])
        if code:
            return code
        return cli_main(["analyze", "--sweep", str(Path(args.out) / "bx_sweep"),
                         "--contrast", "--tau", str(args.tau)])
    code = cli_main(["run", "--config", str(CONFIG), "--out", args.out,
                     "--name", "wave"])
    if code:
        return code
    return cli_main(["analyze", "--run", str(Path(args.out) / "wave"),
                     "--contrast"])


if __name__ == "__main__":
    sys.exit(main())
