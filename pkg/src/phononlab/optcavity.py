"""
Optical Fabry-Perot with a weakly reflecting crystal slab inside.

The slab surfaces form an intracavity etalon that makes the longitudinal mode
spacing non-uniform. Resonances are located from the round-trip phase of a
2x2 transfer-matrix model of the air/slab/air stack between two mirrors, and
an adjacent pair whose spacing matches the phonon frequency is picked so that
the Stokes sideband of the lower mode falls off resonance.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.optimize import brentq

from .errors import NoPairFound, NoResonanceInSpan, SuppressionTooLow, UnstableResonator

ROLES = ("red", "blue", "spectator")
_CHUNK = 200_000

#: Mirror power reflectivity giving a finesse of exactly 3000 per mirror pair.
DEFAULT_MIRROR_REFLECTIVITY = math.exp(-math.pi / 3000.0)


@dataclass(frozen=True)
class OpticalCavityGeometry:
    """
    Plano-concave optical cavity holding a plane-parallel slab.

    Parameters
    ----------
    cavity_length : float
        Mirror-to-mirror distance [m].
    mirror_radius : float
        Radius of curvature of the concave mirror [m].
    mirror_intensity_reflectivities : tuple of float
        Power reflectivities (R1, R2), each in (0, 1).
    slab_thickness, slab_refractive_index : float
        Crystal thickness [m] and optical index.
    slab_position : float
        Distance from the input mirror to the near slab face [m].
    slab_surface_field_reflectivity : float
        Field reflectivity of each slab face, in [0, 1).
    wavelength : float
        Nominal operating wavelength [m].
    """

    cavity_length: float = 12e-3
    mirror_radius: float = 15e-3
    mirror_intensity_reflectivities: Tuple[float, float] = (
        DEFAULT_MIRROR_REFLECTIVITY,
        DEFAULT_MIRROR_REFLECTIVITY,
    )
    slab_thickness: float = 0.5e-3
    slab_refractive_index: float = 1.53
    slab_position: float = 0.78e-3
    slab_surface_field_reflectivity: float = 0.21
    wavelength: float = 1550e-9

    def __post_init__(self):
        object.__setattr__(
            self, "mirror_intensity_reflectivities", tuple(self.mirror_intensity_reflectivities)
        )
        if len(self.mirror_intensity_reflectivities) != 2:
            raise ValueError("mirror_intensity_reflectivities needs exactly two entries")
        if not all(0 < r < 1 for r in self.mirror_intensity_reflectivities):
            raise ValueError("mirror reflectivities must lie in (0, 1)")
        if not (0 < self.slab_thickness < self.cavity_length):
            raise ValueError("need 0 < slab_thickness < cavity_length")
        if not (0 <= self.slab_surface_field_reflectivity < 1):
            raise ValueError("slab_surface_field_reflectivity must be in [0, 1)")
        if self.slab_position < 0 or self.slab_position + self.slab_thickness > self.cavity_length:
            raise ValueError("slab must sit entirely between the mirrors")
        if self.slab_refractive_index <= 0 or self.wavelength <= 0:
            raise ValueError("slab_refractive_index and wavelength must be positive")
        if not (0 < self.cavity_length < self.mirror_radius):
            raise UnstableResonator(
                f"need 0 < cavity_length < mirror_radius, got "
                f"{self.cavity_length} and {self.mirror_radius}"
            )

    @property
    def optical_path(self) -> float:
        """Single-pass optical path length [m]."""
        t, n = self.slab_thickness, self.slab_refractive_index
        return self.cavity_length - t + n * t

    @property
    def mean_fsr(self) -> float:
        return C_LIGHT / (2.0 * self.optical_path)

    @property
    def finesse(self) -> float:
        """Finesse from the round-trip power loss, 2*pi / -ln(R1*R2)."""
        r1, r2 = self.mirror_intensity_reflectivities
        return 2.0 * math.pi / -math.log(r1 * r2)


@dataclass(frozen=True)
class OpticalMode:
    index: int
    frequency: float
    linewidth: float
    role: str = "spectator"

    def __post_init__(self):
        if self.frequency <= 0 or self.linewidth <= 0:
            raise ValueError("optical mode frequency and linewidth must be positive")
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}")


@dataclass(frozen=True)
class ModePair:
    red: OpticalMode
    blue: OpticalMode
    pair_spacing: float
    stokes_suppression: float

    def __post_init__(self):
        if not self.blue.frequency > self.red.frequency:
            raise ValueError("blue mode must lie above red mode")
        if self.stokes_suppression < 1:
            raise ValueError("stokes_suppression must be >= 1")


# -- transfer matrices -------------------------------------------------------


def _interface(r):
    # field transfer across a lossless step with reflection r seen from the left
    t = math.sqrt(1.0 - r * r)
    return np.array([[1.0, r], [r, 1.0]], dtype=complex) / t


def _propagate(phase):
    # phase: (N,) single-pass phases; returns (N, 2, 2)
    m = np.zeros(phase.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = np.exp(-1j * phase)
    m[..., 1, 1] = np.exp(1j * phase)
    return m


def round_trip_factor(geom: OpticalCavityGeometry, frequency) -> np.ndarray:
    """
    Complex round-trip factor for lossless mirrors, unit modulus.

    The stack (air gap, slab, air gap) is multiplied as transfer matrices
    acting on (right-going, left-going) amplitudes; the far mirror closes
    the stack with reflection -1 and the input mirror contributes another
    -1. A resonance is where the factor equals +1.
    """
    nu = np.atleast_1d(np.asarray(frequency, dtype=float))
    k = 2.0 * math.pi * nu / C_LIGHT
    r = geom.slab_surface_field_reflectivity
    d1 = geom.slab_position
    d2 = geom.cavity_length - geom.slab_position - geom.slab_thickness
    n = geom.slab_refractive_index

    total = (
        _propagate(k * d1)
        @ _interface(-r)
        @ _propagate(n * k * geom.slab_thickness)
        @ _interface(r)
        @ _propagate(k * d2)
    )
    # left-boundary amplitudes (A+, A-) for right-boundary (B+, B-) = (1, -1)
    a_plus = total[..., 0, 0] - total[..., 0, 1]
    a_minus = total[..., 1, 0] - total[..., 1, 1]
    gamma = a_minus / a_plus
    return -gamma


def round_trip_phase(geom: OpticalCavityGeometry, frequency) -> np.ndarray:
    """Wrapped round-trip phase in cycles, in (-0.5, 0.5]."""
    return np.angle(round_trip_factor(geom, frequency)) / (2.0 * math.pi)


def _group_delay(geom, nu, step=1e6):
    # d(phase)/d(nu) [rad/Hz] by central difference on the unwrapped factor
    ratio = round_trip_factor(geom, nu + step) / round_trip_factor(geom, nu - step)
    return np.angle(ratio) / (2.0 * step)


def resonance_spectrum(
    geom: OpticalCavityGeometry, span: float, center: float | None = None
) -> List[OpticalMode]:
    """
    Locate cavity resonances in ``[center - span/2, center + span/2]``.

    Sign changes of the imaginary part of the round-trip factor are bracketed
    on a grid of step kappa/10 and refined with Brent's method. Each mode's
    linewidth follows from the mirror loss and the local group delay.
    """
    if span <= 0:
        raise ValueError("span must be positive")
    if center is None:
        center = C_LIGHT / geom.wavelength
    kappa_nominal = geom.mean_fsr / geom.finesse
    step = kappa_nominal / 10.0
    grid = np.arange(center - span / 2.0, center + span / 2.0 + step, step)
    grid = grid[grid <= center + span / 2.0]
    factor = np.concatenate(
        [round_trip_factor(geom, grid[i : i + _CHUNK]) for i in range(0, grid.size, _CHUNK)]
    )
    im = factor.imag
    crossing = (np.sign(im[:-1]) != np.sign(im[1:])) & (factor.real[:-1] + factor.real[1:] > 0)
    idx = np.flatnonzero(crossing)
    if idx.size == 0:
        raise NoResonanceInSpan(f"no resonance within {center:.6g} +/- {span / 2:.6g} Hz")

    def im_part(x):
        return float(round_trip_factor(geom, x)[0].imag)

    freqs = np.array([brentq(im_part, grid[i], grid[i + 1], xtol=1e-3, rtol=1e-15) for i in idx])
    loss = -math.log(geom.mirror_intensity_reflectivities[0] * geom.mirror_intensity_reflectivities[1])
    widths = loss / _group_delay(geom, freqs)
    fsr0 = geom.mean_fsr
    return [
        OpticalMode(index=int(round(f / fsr0)), frequency=float(f), linewidth=float(w))
        for f, w in zip(freqs, widths)
    ]


def cavity_linewidth(fsr: float, finesse: float) -> float:
    """Energy decay linewidth fsr/finesse [Hz]."""
    if finesse <= 0:
        raise ValueError("finesse must be positive")
    return fsr / finesse


def optical_waist(geom: OpticalCavityGeometry) -> dict:
    """Fundamental-mode amplitude waist and intensity 1/e radius [m] at the flat mirror."""
    L, R = geom.cavity_length, geom.mirror_radius
    if not (0 < L < R):
        raise UnstableResonator(f"need 0 < L < R, got L={L}, R={R}")
    w0 = math.sqrt(geom.wavelength / math.pi * math.sqrt(L * (R - L)))
    return {"amplitude_waist": w0, "intensity_radius": w0 / math.sqrt(2.0)}


def stokes_suppression(pair: ModePair, spectrum: Sequence[OpticalMode], phonon_frequency: float) -> float:
    """
    Anti-Stokes to Stokes density-of-states ratio, ``1 + (2*delta/kappa)^2``.

    ``delta`` is the detuning of the Stokes sideband (red - phonon) from the
    nearest cavity mode and ``kappa`` that mode's linewidth.
    """
    stokes = pair.red.frequency - phonon_frequency
    nearest = min(spectrum, key=lambda m: (abs(m.frequency - stokes), m.frequency))
    delta = stokes - nearest.frequency
    return 1.0 + (2.0 * delta / nearest.linewidth) ** 2


def find_operating_pair(
    spectrum: Iterable[OpticalMode],
    target: float,
    tolerance: float,
    min_suppression: float = 1000.0,
) -> ModePair:
    """
    Pick the adjacent mode pair whose spacing best matches ``target``.

    Only pairs within ``tolerance`` of the target and with Stokes suppression
    of at least ``min_suppression`` qualify; the smallest spacing error wins,
    the lower frequency breaking exact ties.

    Raises
    ------
    NoPairFound
        No adjacent pair within tolerance.
    SuppressionTooLow
        Pairs match but none suppresses the Stokes sideband enough.
    """
    if target <= 0:
        raise ValueError("target must be positive")
    modes = sorted(spectrum, key=lambda m: (m.frequency, m.index))
    candidates = []
    for lo, hi in zip(modes[:-1], modes[1:]):
        spacing = hi.frequency - lo.frequency
        err = abs(spacing - target)
        if err <= tolerance:
            candidates.append((err, lo.frequency, lo, hi, spacing))
    if not candidates:
        raise NoPairFound(f"no adjacent pair within {tolerance:.3g} Hz of {target:.6g} Hz")

    candidates.sort(key=lambda c: (c[0], c[1]))
    best_rejected = None
    for _, _, lo, hi, spacing in candidates:
        trial = ModePair(replace(lo, role="red"), replace(hi, role="blue"), spacing, 1.0)
        s = stokes_suppression(trial, modes, target)
        if s >= min_suppression:
            return replace(trial, stokes_suppression=s)
        if best_rejected is None:
            best_rejected = s
    raise SuppressionTooLow(
        f"{len(candidates)} pair(s) match the spacing but the best Stokes "
        f"suppression is {best_rejected:.3g} < {min_suppression:.3g}"
    )


def write_spectrum_csv(path, spectrum: Sequence[OpticalMode]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "frequency_Hz", "linewidth_Hz"])
        for m in spectrum:
            w.writerow([m.index, repr(m.frequency), repr(m.linewidth)])
