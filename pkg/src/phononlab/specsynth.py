"""
Synthetic measurement traces with seeded, reproducible noise.

Noise draws come from a counter-based Philox stream keyed by
(seed, trace index); bin i always receives the i-th draw of its trace's
stream, so output does not depend on how traces are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from . import dynamics
from .coupling import CouplingMap
from .dynamics import SystemParams
from .traces import KINDS, SpectrumTrace, params_digest

__all__ = ["SpectrumTrace", "add_measurement_noise", "scenario_traces", "detuning_grid", "noise_stream"]


def noise_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one trace of one seeded run."""
    ss = np.random.SeedSequence([int(seed), int(stream)])
    return np.random.Generator(np.random.Philox(ss))


def add_measurement_noise(
    trace: SpectrumTrace,
    seed: int,
    averages: int,
    noise_level: float = 0.1,
    stream: int = 0,
) -> SpectrumTrace:
    """
    Return a noisy copy of ``trace``.

    PSD traces get the radiometer model: each bin is multiplied by
    ``1 + z/sqrt(averages)`` and clipped at zero. Transmission traces get
    additive Gaussian noise of standard deviation ``noise_level/sqrt(averages)``
    relative to the bare cavity peak.
    """
    if averages < 1:
        raise ValueError("averages must be >= 1")
    z = noise_stream(seed, stream).standard_normal(len(trace))
    if trace.kind == "spontaneous_psd":
        noisy = np.maximum(trace.values * (1.0 + z / math.sqrt(averages)), 0.0)
    else:
        noisy = trace.values + (noise_level / math.sqrt(averages)) * z
    return trace.with_values(noisy, seed=int(seed), stream=int(stream), averages=int(averages))


def detuning_grid(width: float, points_per_width: int = 20, span_widths: float = 20.0) -> np.ndarray:
    """
    Symmetric grid through zero with at least ``points_per_width`` samples per
    ``width`` and a total span of at least ``span_widths * width``.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    step = width / points_per_width
    half = math.ceil(span_widths * points_per_width / 2.0)
    return step * np.arange(-half, half + 1, dtype=float)


def _one_trace(i, power, params, kind, seed, averages, noise_level, cmap, background, points_per_width, span_widths, noisy):
    n_c = dynamics.intracavity_photons(power, params)
    C = dynamics.cooperativity(params, n_c)
    pumped = "blue" if kind == "omia" else "red"
    width = dynamics.effective_linewidth(params, C, pumped)
    x = detuning_grid(width, points_per_width, span_widths)
    if kind == "omit":
        ideal = dynamics.omit_transmission(cmap, params, n_c, x)
    elif kind == "omia":
        ideal = dynamics.omia_transmission(cmap, params, n_c, x)
    else:
        ideal = dynamics.spontaneous_psd(params, C, x, background)
    ideal = ideal.with_values(ideal.values, transmitted_power=float(power), intracavity_photons=float(n_c))
    if not noisy:
        return ideal.with_values(ideal.values, seed=int(seed), stream=i, averages=None)
    return add_measurement_noise(ideal, seed, averages, noise_level, stream=i)


def scenario_traces(
    params: SystemParams,
    powers: Sequence[float],
    kind: str,
    seed: int,
    averages: int = 100,
    noise_level: float = 0.1,
    cmap: Optional[CouplingMap] = None,
    background: float = 1.0,
    points_per_width: int = 20,
    span_widths: float = 20.0,
    noisy: bool = True,
    jobs: int = 1,
    first_stream: int = 0,
) -> List[SpectrumTrace]:
    """
    One trace per transmitted power, on grids sized to the expected feature.

    Each grid is centred on the feature, samples its FWHM at least
    ``points_per_width`` times and spans ``span_widths`` widths. Trace i
    draws its noise from stream ``first_stream + i`` of ``seed``.

    Raises
    ------
    SelfOscillation
        For ``kind="omia"`` at a power reaching C >= 1.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    powers = [float(p) for p in powers]
    if not powers:
        raise ValueError("powers must be non-empty")
    if points_per_width < 20 or span_widths < 10:
        raise ValueError("grid must have >= 20 points per width and span >= 10 widths")
    args = [
        (i, p, params, kind, seed, averages, noise_level, cmap, background, points_per_width, span_widths, noisy)
        for i, p in enumerate(powers, start=first_stream)
    ]
    if jobs <= 1:
        traces = [_one_trace(*a) for a in args]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(lambda a: _one_trace(*a), args))
    digest = params_digest(params)
    return [t.with_values(t.values, params_digest=digest) for t in traces]
