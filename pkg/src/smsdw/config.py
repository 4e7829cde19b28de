"""Config file parsing: YAML with nested sections, strict keys, full defaults."""

from __future__ import annotations

from pathlib import Path

import yaml

from .errors import ConfigError
from .loop import ProbeConfig, SimConfig
from .optics import FourierFilter, Grid

_TOP_KEYS = {
    "od", "delta", "intensity", "bx", "bz", "mirror_distance", "reflectivity",
    "grid", "filter", "r_decay", "dt", "duration", "noise", "probes",
    "pump_envelope", "envelope_waist_fraction", "check_physicality",
    "field_schedule",
}
_GRID_KEYS = {"nx", "ny", "pixel"}
_FILTER_KEYS = {"orientation", "half_width", "center", "center_half_width"}
_NOISE_KEYS = {"amplitude", "seed"}
_PROBE_KEYS = {"detector_every", "cuts_every", "snapshot_every", "cut_channels",
               "detector_aperture"}


def _check_keys(section: dict, allowed: set, prefix: str, problems: list) -> None:
    for key in section:
        if key not in allowed:
            problems.append(f"{prefix}{key}: unknown key")


def config_from_dict(data: dict) -> SimConfig:
    """Build a validated SimConfig from a plain mapping (YAML-shaped)."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    problems: list = []
    _check_keys(data, _TOP_KEYS, "", problems)

    kwargs = {}
    for key in ("od", "delta", "intensity", "bx", "bz", "mirror_distance",
                "reflectivity", "r_decay", "dt", "duration",
                "pump_envelope", "envelope_waist_fraction", "check_physicality"):
        if key in data:
            kwargs[key] = data[key]

    grid_data = data.get("grid", {}) or {}
    _check_keys(grid_data, _GRID_KEYS, "grid.", problems)
    defaults = Grid()
    kwargs["grid"] = Grid(nx=int(grid_data.get("nx", defaults.nx)),
                          ny=int(grid_data.get("ny", defaults.ny)),
                          pixel=float(grid_data.get("pixel", defaults.pixel)))

    filt_data = data.get("filter", {}) or {}
    _check_keys(filt_data, _FILTER_KEYS, "filter.", problems)
    fdef = FourierFilter()
    kwargs["filter"] = FourierFilter(
        orientation=filt_data.get("orientation", fdef.orientation),
        half_width=int(filt_data.get("half_width", fdef.half_width)),
        center=filt_data.get("center", fdef.center),
        center_half_width=filt_data.get("center_half_width", fdef.center_half_width),
    )

    noise_data = data.get("noise", {}) or {}
    _check_keys(noise_data, _NOISE_KEYS, "noise.", problems)
    if "amplitude" in noise_data:
        kwargs["noise_amplitude"] = float(noise_data["amplitude"])
    if "seed" in noise_data:
        kwargs["seed"] = int(noise_data["seed"])

    probe_data = data.get("probes", {}) or {}
    _check_keys(probe_data, _PROBE_KEYS, "probes.", problems)
    pdef = ProbeConfig()
    channels = probe_data.get("cut_channels", list(pdef.cut_channels))
    kwargs["probes"] = ProbeConfig(
        detector_every=probe_data.get("detector_every", pdef.detector_every),
        cuts_every=probe_data.get("cuts_every", pdef.cuts_every),
        snapshot_every=probe_data.get("snapshot_every", pdef.snapshot_every),
        cut_channels=tuple(channels),
        detector_aperture=float(probe_data.get("detector_aperture",
                                               pdef.detector_aperture)),
    )

    schedule = data.get("field_schedule", []) or []
    try:
        kwargs["field_schedule"] = tuple((float(t), float(b)) for t, b in schedule)
    except (TypeError, ValueError):
        problems.append("field_schedule: expected a list of [time, bx] pairs")

    if problems:
        raise ConfigError("; ".join(problems))
    try:
        config = SimConfig(**kwargs)
    except TypeError as err:
        raise ConfigError(str(err)) from None
    problems = config.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    return config


def parse_config(path) -> SimConfig:
    """Load, default-fill and validate a config file; all errors at once."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as err:
            raise ConfigError(f"{path}: {err}") from None
    return config_from_dict(data)


def config_to_dict(config: SimConfig) -> dict:
    from .loop import _config_echo

    return _config_echo(config)
