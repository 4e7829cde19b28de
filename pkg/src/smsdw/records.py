"""Run persistence: self-describing run directories, raw dumps, CSV, PGM.

Raw dump layout: a short fixed text header (magic, dtype, shape, optional
first-axis field names, "end") followed by flat little-endian binary data in
C order.  Chosen over bespoke containers so any language can read it with a
few lines.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
import yaml

from .loop import RunRecord

RAW_MAGIC = "SMSDW-RAW 1"
_DTYPES = {"float64-le": "<f8", "complex128-le": "<c16"}


def write_raw(path, array: np.ndarray, fields=None) -> None:
    array = np.asarray(array)
    if array.dtype.kind == "c":
        tag, dt = "complex128-le", "<c16"
    else:
        tag, dt = "float64-le", "<f8"
    lines = [RAW_MAGIC, f"dtype: {tag}", "shape: " + " ".join(str(s) for s in array.shape)]
    if fields:
        lines.append("fields: " + " ".join(fields))
    lines.append("end")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(array.astype(dt)).tobytes())


def read_raw(path):
    """Returns (array, field names or None)."""
    with open(path, "rb") as fh:
        header = []
        while True:
            line = fh.readline().decode("ascii").rstrip("\n")
            header.append(line)
            if line == "end":
                break
            if len(header) > 16:
                raise ValueError(f"{path}: malformed raw header")
        if header[0] != RAW_MAGIC:
            raise ValueError(f"{path}: bad magic {header[0]!r}")
        meta = dict(item.split(": ", 1) for item in header[1:-1])
        dtype = _DTYPES[meta["dtype"]]
        shape = tuple(int(s) for s in meta["shape"].split())
        fields = meta.get("fields", "").split() or None
        data = np.frombuffer(fh.read(), dtype=dtype).reshape(shape)
    return data.copy(), fields


def write_csv(path, columns: dict) -> None:
    """Columns: name -> 1D array; names should carry units in brackets."""
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*arrays):
            fh.write(",".join(format(val, ".17g") for val in row) + "\n")


def read_csv(path):
    with open(path) as fh:
        names = fh.readline().strip().split(",")
        rows = [[float(v) for v in line.strip().split(",")] for line in fh if line.strip()]
    data = np.array(rows) if rows else np.empty((0, len(names)))
    return {n: data[:, i] for i, n in enumerate(names)}


def write_pgm(path, array: np.ndarray) -> None:
    """8-bit binary PGM with min-max normalization; machine-readable grayscale."""
    a = np.asarray(array, dtype=float)
    lo, hi = float(a.min()), float(a.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    img = ((a - lo) * scale).round().astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


ATOM_FIELDS = ["u", "v", "w", "x", "y1", "z1", "y2", "z2"]


def write_record(record: RunRecord, run_dir) -> Path:
    """Persist a run so it can be re-analyzed without the original config."""
    run_dir = Path(run_dir)
    (run_dir / "cuts").mkdir(parents=True, exist_ok=True)
    (run_dir / "snapshots").mkdir(exist_ok=True)

    header = {
        "format": "smsdw-run 1",
        "version": record.version,
        "config": record.config,
        "omega_x": record.omega_x,
        "pump_amplitude": record.pump_amplitude,
        "flip_times": [list(f) for f in record.flip_times],
        "aborted": record.aborted,
        "abort_message": record.abort_message,
        "cut_channels": sorted(record.cuts),
    }
    with open(run_dir / "header.yaml", "w") as fh:
        yaml.safe_dump(header, fh, sort_keys=False)

    write_csv(run_dir / "detector.csv", {
        "time[1/Gamma2]": record.detector_times,
        "i_perp_aperture[arb]": record.detector_perp,
        "i_perp_total[arb]": record.detector_perp_full,
        "i_par_aperture[arb]": record.detector_par,
    })
    write_raw(run_dir / "cuts" / "times.raw", record.cut_times)
    for name, cut in record.cuts.items():
        write_raw(run_dir / "cuts" / f"{name}.raw", cut)
    write_raw(run_dir / "snapshots" / "times.raw", record.snapshot_times)
    write_raw(run_dir / "snapshots" / "atoms.raw", record.atom_snapshots,
              fields=ATOM_FIELDS)
    write_raw(run_dir / "snapshots" / "exit_plus.raw", record.exit_plus)
    write_raw(run_dir / "snapshots" / "exit_minus.raw", record.exit_minus)
    return run_dir


def read_record(run_dir) -> RunRecord:
    run_dir = Path(run_dir)
    with open(run_dir / "header.yaml") as fh:
        header = yaml.safe_load(fh)
    det = read_csv(run_dir / "detector.csv")
    cut_times, _ = read_raw(run_dir / "cuts" / "times.raw")
    cuts = {}
    for name in header.get("cut_channels", []):
        cuts[name], _ = read_raw(run_dir / "cuts" / f"{name}.raw")
    snap_times, _ = read_raw(run_dir / "snapshots" / "times.raw")
    atoms, _ = read_raw(run_dir / "snapshots" / "atoms.raw")
    exit_plus, _ = read_raw(run_dir / "snapshots" / "exit_plus.raw")
    exit_minus, _ = read_raw(run_dir / "snapshots" / "exit_minus.raw")
    return RunRecord(
        config=header["config"],
        version=header["version"],
        omega_x=header["omega_x"],
        pump_amplitude=header["pump_amplitude"],
        detector_times=det["time[1/Gamma2]"],
        detector_perp=det["i_perp_aperture[arb]"],
        detector_perp_full=det["i_perp_total[arb]"],
        detector_par=det["i_par_aperture[arb]"],
        cut_times=cut_times,
        cuts=cuts,
        snapshot_times=snap_times,
        atom_snapshots=atoms,
        exit_plus=exit_plus,
        exit_minus=exit_minus,
        flip_times=tuple(tuple(f) for f in header.get("flip_times", [])),
        aborted=header.get("aborted", False),
        abort_message=header.get("abort_message", ""),
    )
