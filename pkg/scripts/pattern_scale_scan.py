#!/usr/bin/env python3
"""Growth-rate scan: which transverse wavenumber the feedback loop selects.

Prints the growth rate per wavenumber around the first diffractive band and
the implied stripe periods (the orthogonal-polarization channel shows half
the fundamental period).
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from smsdw.config import parse_config
from smsdw.scan import critical_wavenumber_scan

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "drifting_wave.yaml"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=str(CONFIG))
    parser.add_argument("--od", type=float, help="override optical density")
    parser.add_argument("--duration", type=float, default=500.0)
    args = parser.parse_args()

    config = parse_config(args.config)
    if args.od is not None:
        from dataclasses import replace

        config = replace(config, od=args.od)
    result = critical_wavenumber_scan(config, duration=args.duration)
    print(f"{'q [rad/m]':>12} {'wavelength [um]':>16} {'growth [G2]':>12} {'freq [G2]':>10}")
    for q, g, f in result.as_rows():
        print(f"{q:12.1f} {2e6 * 3.141592653589793 / q:16.1f} {g:12.5f} {f:10.4f}")
    if result.below_threshold:
        print("below threshold: no growing wavenumber")
        return 1
    print(f"\nq_c = {result.q_c:.1f} rad/m  (wavelength {result.critical_wavelength*1e6:.1f} um, "
          f"orthogonal-channel period {result.perpendicular_period*1e6:.1f} um)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
