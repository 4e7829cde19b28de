"""Figure builders: frequency law, contrast curves, space-time maps, screws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .rawio import MalformedInput, find_column, read_csv, read_raw

# Larmor scaling of the rubidium ground state used across the project:
# scaled precession frequency 0.23 per gauss in units of the coherence
# decay rate pi * 6.066 MHz.
GAMMA2 = math.pi * 6.066e6
LARMOR_COEFF = 0.23

KINDS = ("freq-vs-b", "contrast", "spacetime", "screw")


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    output: str
    channel: str = "w"        # spacetime cut channel
    snapshot: int = -1        # screw snapshot index
    title: str | None = None
    xlim: tuple | None = None
    ylim: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MalformedInput(f"unknown figure kind {self.kind!r}")
        self.inputs = [Path(p) for p in self.inputs]
        for p in self.inputs:
            if not p.exists():
                raise MalformedInput(f"input file not found: {p}")


def larmor_double_hz(bx):
    """Reference line: twice the Larmor frequency in Hz for a field in gauss."""
    return 2.0 * LARMOR_COEFF * np.asarray(bx) * GAMMA2 / (2.0 * np.pi)


def _figure_freq_vs_b(spec: FigureSpec):
    table = read_csv(spec.inputs[0])
    bx = find_column(table, "bx", spec.inputs[0])
    freq = find_column(table, "peak_freq", spec.inputs[0])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(bx, freq / 1e6, marker="o", facecolors="none", edgecolors="C0",
               label="detected AC peak")
    if len(bx):
        line_b = np.linspace(0, max(bx) * 1.05, 50)
        ax.plot(line_b, larmor_double_hz(line_b) / 1e6, "r:",
                label="twice the Larmor frequency")
    ax.set_xlabel("magnetic field $B_x$ (G)")
    ax.set_ylabel("frequency (MHz)")
    ax.legend(loc="upper left")
    return fig


def _figure_contrast(spec: FigureSpec):
    table = read_csv(spec.inputs[0])
    contrast = find_column(table, "contrast", spec.inputs[0])
    fig, ax = plt.subplots(figsize=(5, 4))
    try:
        tau = find_column(table, "tau", spec.inputs[0])
        x, xlabel = tau * 1e6, "integration time (us)"
        if "bx[G]" in table:  # sweep table carries a fixed tau column
            x, xlabel = find_column(table, "bx", spec.inputs[0]), "magnetic field $B_x$ (G)"
    except MalformedInput:
        x, xlabel = find_column(table, "bx", spec.inputs[0]), "magnetic field $B_x$ (G)"
    if len(x):
        ax.semilogy(x, np.maximum(contrast, 1e-12), "o-", ms=4)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("stripe contrast (arb. units)")
    return fig


def _figure_spacetime(spec: FigureSpec):
    cut, _ = read_raw(spec.inputs[0])
    times = None
    if len(spec.inputs) > 1:
        times, _ = read_raw(spec.inputs[1])
    fig, ax = plt.subplots(figsize=(5, 4))
    extent = None
    if times is not None and len(times) == cut.shape[0]:
        extent = (0, cut.shape[1], float(times[0]), float(times[-1]))
    ax.imshow(cut, aspect="auto", origin="lower", cmap="RdBu_r",
              extent=extent, interpolation="nearest")
    ax.set_xlabel("transverse position (pixels)")
    ax.set_ylabel("time (1/$\\Gamma_2$)" if times is not None else "sample")
    return fig


def _figure_screw(spec: FigureSpec):
    atoms, fields = read_raw(spec.inputs[0])
    if atoms.ndim == 4:
        atoms = atoms[spec.snapshot]
    if fields is None:
        fields = ["u", "v", "w", "x", "y1", "z1", "y2", "z2"]
    idx = {name: i for i, name in enumerate(fields)}
    cut = atoms.mean(axis=1)  # y average
    m_y = (cut[idx["y2"]] + cut[idx["z2"]]) / np.sqrt(2)
    m_z = -cut[idx["w"]]
    q_y = cut[idx["v"]]                                  # -(m_x m_y + m_y m_x)
    q_z = (cut[idx["y1"]] - cut[idx["z1"]]) / np.sqrt(2)  # -(m_x m_z + m_z m_x)
    x = np.arange(cut.shape[1])
    fig = plt.figure(figsize=(6, 4.5))
    ax = fig.add_subplot(projection="3d")
    ax.plot(x, m_y, m_z, color="C0", label="magnetization (m_y, m_z)")
    ax.plot(x, q_y, q_z, color="C3", label="quadrupole cone (v, (y1-z1)/sqrt2)")
    ax.set_xlabel("x (pixels)")
    ax.set_ylabel("y component")
    ax.set_zlabel("z component")
    ax.legend(loc="upper left", fontsize=8)
    return fig


_BUILDERS = {
    "freq-vs-b": _figure_freq_vs_b,
    "contrast": _figure_contrast,
    "spacetime": _figure_spacetime,
    "screw": _figure_screw,
}


def build_figure(spec: FigureSpec):
    """Matplotlib figure for a spec; inputs are read, never modified."""
    fig = _BUILDERS[spec.kind](spec)
    ax = fig.axes[0]
    if spec.title:
        ax.set_title(spec.title)
    if spec.xlim:
        ax.set_xlim(*spec.xlim)
    if spec.ylim:
        ax.set_ylim(*spec.ylim)
    return fig


def render(spec: FigureSpec) -> Path:
    """Write the figure file deterministically and return its path."""
    fig = build_figure(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None} if out.suffix.lower() == ".png" else None
    fig.savefig(out, dpi=150, metadata=metadata)
    plt.close(fig)
    return out
