"""Frequency-series container shared by the forward model, the noise
synthesizer and the fitting pipeline."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Any, Dict

import numpy as np

KINDS = ("omit", "omia", "spontaneous_psd")


@dataclass(frozen=True, eq=False)
class SpectrumTrace:
    """
    Sampled spectrum on a strictly increasing detuning grid.

    Parameters
    ----------
    detunings : ndarray
        Probe or RF detuning [Hz].
    values : ndarray
        Linear power units; transmission traces are relative to the bare
        cavity peak, PSD traces are photon flux per hertz.
    kind : {"omit", "omia", "spontaneous_psd"}
    metadata : dict
        Provenance: seed, parameter digest, averaging count, drive, ...
    """

    detunings: np.ndarray
    values: np.ndarray
    kind: str
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.detunings, dtype=float)
        y = np.asarray(self.values, dtype=float)
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "detunings", x)
        object.__setattr__(self, "values", y)
        object.__setattr__(self, "metadata", dict(self.metadata))
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("detunings and values must be 1-D and of equal length")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise ValueError("detunings must be strictly increasing")
        if self.kind == "spontaneous_psd" and np.any(y < 0):
            raise ValueError("PSD values must be non-negative")

    def __len__(self):
        return self.detunings.size

    def with_values(self, values, **metadata) -> "SpectrumTrace":
        meta = dict(self.metadata)
        meta.update(metadata)
        return SpectrumTrace(self.detunings, values, self.kind, meta)

    def identical(self, other: "SpectrumTrace") -> bool:
        """Bitwise equality of grid, values, kind and metadata."""
        return (
            self.kind == other.kind
            and self.detunings.tobytes() == other.detunings.tobytes()
            and self.values.tobytes() == other.values.tobytes()
            and self.metadata == other.metadata
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["detuning_Hz", "value", "kind"])
            for x, y in zip(self.detunings, self.values):
                w.writerow([repr(float(x)), repr(float(y)), self.kind])


def params_digest(obj) -> str:
    """Short stable hash of a dataclass (or plain mapping) of parameters."""
    payload = asdict(obj) if is_dataclass(obj) else obj
    text = json.dumps(payload, sort_keys=True, default=repr)
    return hashlib.sha256(text.encode()).hexdigest()[:16]
