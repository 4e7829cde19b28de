#!/usr/bin/env python3
"""Field-flip protocol: establish a sliding wave, flip Bx, watch the drift.

The drift direction reverses deterministically while the spatial screw
(chirality) survives the flip; the report lands in flip_report.csv.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from smsdw.cli import main as cli_main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "drifting_wave.yaml"

if __name__ == "__main__":
    sys.exit(cli_main(["flip-experiment", "--config", str(CONFIG),
                       "--out", "runs", "--name", "flip"] + sys.argv[1:]))
