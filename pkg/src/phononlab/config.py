"""
Scenario configuration: a single JSON document, optionally layered on the
built-in ``"paper"`` preset.

Every section is checked against a fixed key set; unknown keys, missing keys
and wrongly typed values raise :class:`ConfigError` naming the dotted key.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional

from .coupling import AlignmentState
from .dynamics import SystemParams, calibrate_eta_ext
from .errors import ConfigError
from .optcavity import DEFAULT_MIRROR_REFLECTIVITY, OpticalCavityGeometry, optical_waist
from .resonator import HbarGeometry, acoustic_waist

OUTPUT_ENV = "PHONON_LAB_OUT"

PAPER_PRESET: Dict[str, Any] = {
    "hbar_geometry": {
        "length": 500e-6,
        "radius_of_curvature": 100e-3,
        "sound_velocity": 6040.0,
        "mass_density": 2648.0,
        "refractive_index": 1.53,
        "optical_wavelength": 1550e-9,
    },
    "acoustic": {
        "gamma0": 590.0,
        "temperature": 13.6,
        "span": 15e6,
        "max_transverse": 2,
        "mass_convention": "full",
    },
    "optical_geometry": {
        "cavity_length": 12e-3,
        "mirror_radius": 15e-3,
        "mirror_intensity_reflectivities": [DEFAULT_MIRROR_REFLECTIVITY, DEFAULT_MIRROR_REFLECTIVITY],
        "slab_thickness": 0.5e-3,
        "slab_refractive_index": 1.53,
        "slab_position": 0.78e-3,
        "slab_surface_field_reflectivity": 0.21,
        "wavelength": 1550e-9,
    },
    "mode_search": {
        "center": 194.06e12,
        "span": 200e9,
        "pair_tolerance": 1e6,
        "min_suppression": 1000.0,
    },
    "alignment": {
        "transverse_offset": 0.0,
        "optical_intensity_radius": None,
        "acoustic_waist": None,
        "reference_g0": 6.08,
        "brillouin_frequency": None,
    },
    "system_params": {
        "g0": 6.08,
        "kappa": 4.07e6,
        "gamma0": 600.0,
        "phonon_frequency": 12.607e9,
        "n_th": 22.4,
        "eta_ext": 0.5,
        "wavelength": 1550e-9,
        "eta_det": 1.0,
        "power_at_unity_C": 22.8e-6,
    },
    "drive": [
        {"pumped_mode": "red", "measurement": "omit",
         "powers": [7e-6, 15e-6, 30e-6, 60e-6, 120e-6, 250e-6, 500e-6, 800e-6, 1.3e-3]},
        {"pumped_mode": "blue", "measurement": "omia",
         "powers": [4e-6, 8e-6, 12e-6, 16e-6, 19e-6]},
        {"pumped_mode": "red", "measurement": "spontaneous_psd",
         "powers": [24e-6, 50e-6, 100e-6, 200e-6, 386e-6, 600e-6, 900e-6, 1.3e-3]},
    ],
    "synth": {
        "seed": 0,
        "noisy": True,
        "vna_averages": 100,
        "vna_noise_level": 0.5,
        "psd_averages": 1000,
        "psd_background": 1.0,
    },
    "output_dir": "phonon-lab-out",
}

_NULLABLE = {
    "alignment.optical_intensity_radius",
    "alignment.acoustic_waist",
    "alignment.brillouin_frequency",
    "system_params.power_at_unity_C",
}
_DRIVE_KEYS = {"pumped_mode", "measurement", "powers"}
_MEASUREMENTS = {"omit": "red", "omia": "blue", "spontaneous_psd": "red"}


@dataclass(frozen=True)
class ScenarioConfig:
    hbar_geometry: HbarGeometry
    optical_geometry: OpticalCavityGeometry
    system_params: SystemParams
    alignment: AlignmentState
    raw: Dict[str, Any]

    @property
    def acoustic(self) -> Dict[str, Any]:
        return self.raw["acoustic"]

    @property
    def mode_search(self) -> Dict[str, Any]:
        return self.raw["mode_search"]

    @property
    def synth(self) -> Dict[str, Any]:
        return self.raw["synth"]

    @property
    def reference_g0(self) -> float:
        return self.raw["alignment"]["reference_g0"]

    @property
    def brillouin_frequency(self) -> Optional[float]:
        return self.raw["alignment"]["brillouin_frequency"]

    @property
    def output_dir(self) -> str:
        return self.raw["output_dir"]

    def powers(self, measurement: str) -> List[float]:
        for d in self.raw["drive"]:
            if d["measurement"] == measurement:
                return list(d["powers"])
        return []


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _check_section(name, section, template):
    if not isinstance(section, dict):
        raise ConfigError(f"section {name!r} must be an object", key=name)
    for k in section:
        if k not in template:
            raise ConfigError(f"unknown key {name}.{k}", key=f"{name}.{k}")
    for k, default in template.items():
        key = f"{name}.{k}"
        if k not in section:
            raise ConfigError(f"missing required key {key}", key=key)
        v = section[k]
        if v is None:
            if key not in _NULLABLE:
                raise ConfigError(f"{key} may not be null", key=key)
            continue
        if isinstance(default, bool) or isinstance(v, bool):
            if not isinstance(v, bool) or not isinstance(default, bool):
                raise ConfigError(f"{key} has the wrong type", key=key)
        elif isinstance(default, (int, float)) or key in _NULLABLE:
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{key} must be a finite number", key=key)
        elif isinstance(default, str) and not isinstance(v, str):
            raise ConfigError(f"{key} must be a string", key=key)
        elif isinstance(default, list):
            if not isinstance(v, list) or not all(isinstance(x, (int, float)) for x in v):
                raise ConfigError(f"{key} must be a list of numbers", key=key)


def _check_drive(drive):
    if not isinstance(drive, list):
        raise ConfigError("drive must be a list", key="drive")
    seen = set()
    for i, d in enumerate(drive):
        key = f"drive[{i}]"
        if not isinstance(d, dict):
            raise ConfigError(f"{key} must be an object", key=key)
        for k in d:
            if k not in _DRIVE_KEYS:
                raise ConfigError(f"unknown key {key}.{k}", key=f"{key}.{k}")
        for k in _DRIVE_KEYS:
            if k not in d:
                raise ConfigError(f"missing required key {key}.{k}", key=f"{key}.{k}")
        m = d["measurement"]
        if m not in _MEASUREMENTS:
            raise ConfigError(f"{key}.measurement must be one of {sorted(_MEASUREMENTS)}", key=f"{key}.measurement")
        if d["pumped_mode"] != _MEASUREMENTS[m]:
            raise ConfigError(f"{key}: {m} requires a {_MEASUREMENTS[m]} pump", key=f"{key}.pumped_mode")
        if m in seen:
            raise ConfigError(f"{key}: duplicate {m} drive", key=key)
        seen.add(m)
        p = d["powers"]
        if not isinstance(p, list) or not p or not all(isinstance(x, (int, float)) and x > 0 for x in p):
            raise ConfigError(f"{key}.powers must be a non-empty list of positive numbers", key=f"{key}.powers")


def validate(raw: Dict[str, Any]) -> None:
    """Check keys and types of a fully merged configuration."""
    for k in raw:
        if k not in PAPER_PRESET:
            raise ConfigError(f"unknown key {k}", key=k)
    for k, template in PAPER_PRESET.items():
        if k not in raw:
            raise ConfigError(f"missing required key {k}", key=k)
        if isinstance(template, dict):
            _check_section(k, raw[k], template)
    _check_drive(raw["drive"])
    if not isinstance(raw["output_dir"], str):
        raise ConfigError("output_dir must be a string", key="output_dir")
    if raw["acoustic"]["mass_convention"] not in ("half", "full"):
        raise ConfigError("acoustic.mass_convention must be 'half' or 'full'", key="acoustic.mass_convention")
    if not isinstance(raw["synth"]["seed"], int):
        raise ConfigError("synth.seed must be an integer", key="synth.seed")


def build(raw: Dict[str, Any]) -> ScenarioConfig:
    """
    Turn a validated mapping into domain objects.

    Physics invariants (e.g. an unstable resonator) propagate as their own
    exception types rather than as ConfigError.
    """
    validate(raw)
    hbar = HbarGeometry(**raw["hbar_geometry"])
    og = dict(raw["optical_geometry"])
    og["mirror_intensity_reflectivities"] = tuple(og["mirror_intensity_reflectivities"])
    optical = OpticalCavityGeometry(**og)

    sp = dict(raw["system_params"])
    p_unity = sp.pop("power_at_unity_C")
    system = SystemParams(**sp)
    if p_unity is not None:
        system = replace(system, eta_ext=calibrate_eta_ext(system, p_unity))

    al = raw["alignment"]
    w_opt = al["optical_intensity_radius"]
    if w_opt is None:
        w_opt = optical_waist(optical)["intensity_radius"]
    w_ac = al["acoustic_waist"]
    if w_ac is None:
        w_ac = acoustic_waist(hbar, system.phonon_frequency)
    alignment = AlignmentState(al["transverse_offset"], w_opt, w_ac)
    return ScenarioConfig(hbar, optical, system, alignment, raw)


def from_mapping(data: Dict[str, Any]) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be an object")
    data = dict(data)
    preset = data.pop("defaults", None)
    if preset is not None:
        if preset != "paper":
            raise ConfigError(f"unknown preset {preset!r}; only 'paper' exists", key="defaults")
        data = deep_merge(PAPER_PRESET, data)
    return build(data)


def load(path: Optional[str] = None) -> ScenarioConfig:
    """
    Load a scenario file; ``None`` gives the paper preset.

    Raises
    ------
    ConfigError
        Unreadable file, malformed JSON (with line number) or schema violation.
    """
    if path is None:
        return from_mapping({"defaults": "paper"})
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", line=exc.lineno) from exc
    try:
        return from_mapping(data)
    except ConfigError as exc:
        line = _key_line(text, exc.key)
        if line is None:
            raise
        raise ConfigError(f"{path}:{line}: {exc}", key=exc.key, line=line) from None


def _key_line(text: str, key: Optional[str]) -> Optional[int]:
    # first line mentioning the innermost key name; None when the key is absent
    if not key:
        return None
    leaf = '"' + key.split(".")[-1].split("[")[0] + '"'
    for i, row in enumerate(text.splitlines(), start=1):
        if leaf in row:
            return i
    return None


def set_path(raw: Dict[str, Any], dotted: str, value) -> Dict[str, Any]:
    """Copy of ``raw`` with one dotted key replaced; the key must already exist."""
    out = copy.deepcopy(raw)
    node = out
    parts = dotted.split(".")
    for p in parts[:-1]:
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(f"unknown key {dotted}", key=dotted)
        node = node[p]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ConfigError(f"unknown key {dotted}", key=dotted)
    node[parts[-1]] = value
    return out


def resolve_output_dir(cfg: ScenarioConfig, cli_out: Optional[str] = None) -> str:
    """--out beats the PHONON_LAB_OUT environment variable, which beats the file."""
    return cli_out or os.environ.get(OUTPUT_ENV) or cfg.output_dir
