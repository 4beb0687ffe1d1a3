"""
Acoustic mode structure of a plano-convex bulk acoustic wave resonator.

The crystal is an acoustic Fabry-Perot: longitudinal overtones are spaced by
the acoustic free spectral range v/2L and each overtone carries a ladder of
transverse Gaussian modes set by the curvature of the convex face.

All frequencies are ordinary hertz; factors of 2*pi appear only inside
formulas that need angular rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy import constants

from .errors import EmptySpan, UnstableResonator

#: Motional mass reported for the fundamental 12.6 GHz mode, kg. Not
#: reproduced by either Gaussian convention below; kept for reference.
REFERENCE_MOTIONAL_MASS = 7.5e-9

MASS_CONVENTIONS = ("half", "full")


@dataclass(frozen=True)
class HbarGeometry:
    """
    Plano-convex crystal geometry.

    Parameters
    ----------
    length : float
        Crystal thickness along the acoustic axis [m].
    radius_of_curvature : float
        Radius of the convex face [m].
    sound_velocity : float
        Longitudinal sound velocity [m/s]. The default 6040 m/s reproduces a
        6.04 MHz FSR at 500 um.
    mass_density : float
        [kg/m^3], z-cut quartz by default.
    refractive_index : float
        Optical index of the crystal.
    optical_wavelength : float
        Vacuum wavelength of the drive light [m].
    """

    length: float = 500e-6
    radius_of_curvature: float = 100e-3
    sound_velocity: float = 6040.0
    mass_density: float = 2648.0
    refractive_index: float = 1.53
    optical_wavelength: float = 1550e-9

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"length must be positive, got {self.length}")
        if self.sound_velocity <= 0:
            raise ValueError(f"sound_velocity must be positive, got {self.sound_velocity}")
        if self.mass_density <= 0:
            raise ValueError(f"mass_density must be positive, got {self.mass_density}")
        if self.refractive_index <= 0 or self.optical_wavelength <= 0:
            raise ValueError("refractive_index and optical_wavelength must be positive")
        if not self.radius_of_curvature > self.length:
            raise UnstableResonator(
                f"radius_of_curvature ({self.radius_of_curvature}) must exceed "
                f"length ({self.length}) for a stable plano-convex resonator"
            )


@dataclass(frozen=True)
class AcousticMode:
    family_index: int
    transverse_order: int
    frequency: float
    intrinsic_linewidth: float
    waist_radius: float
    q_factor: float
    motional_mass: float

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("mode frequency must be positive")
        if self.intrinsic_linewidth <= 0:
            raise ValueError("intrinsic_linewidth must be positive")
        if self.waist_radius <= 0:
            raise ValueError("waist_radius must be positive")
        if self.transverse_order < 0:
            raise ValueError("transverse_order must be >= 0")
        expected = self.frequency / self.intrinsic_linewidth
        if abs(self.q_factor - expected) > 1e-9 * expected:
            raise ValueError("q_factor must equal frequency / intrinsic_linewidth")

    @property
    def label(self) -> str:
        return f"L{self.transverse_order}"


def _check_stable(length, radius):
    if not (0 < length < radius):
        raise UnstableResonator(
            f"need 0 < L < R for a stable resonator, got L={length}, R={radius}"
        )


def acoustic_fsr(geom: HbarGeometry) -> float:
    """Longitudinal mode spacing v/2L [Hz]."""
    return geom.sound_velocity / (2.0 * geom.length)


def transverse_mode_spacing(geom: HbarGeometry) -> float:
    """
    Spacing between adjacent transverse orders of one overtone family [Hz].

    Uses the Gouy phase of a plano-convex Gaussian resonator,
    ``FSR/pi * arccos(sqrt(1 - L/R))``. An infinite radius (flat-flat) gives 0.
    """
    _check_stable(geom.length, geom.radius_of_curvature)
    g = 1.0 - geom.length / geom.radius_of_curvature
    return acoustic_fsr(geom) / math.pi * math.acos(math.sqrt(g))


def acoustic_waist(geom: HbarGeometry, frequency: float) -> float:
    """Amplitude 1/e radius of the fundamental acoustic mode at the flat face [m]."""
    _check_stable(geom.length, geom.radius_of_curvature)
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    acoustic_wavelength = geom.sound_velocity / frequency
    L, R = geom.length, geom.radius_of_curvature
    return math.sqrt(acoustic_wavelength / math.pi * math.sqrt(L * (R - L)))


def motional_mass(geom: HbarGeometry, waist: float, convention: str = "full") -> float:
    """
    Effective mass of a Gaussian mode, rho * L * area.

    ``convention="half"`` uses area pi*w^2/2 (intensity-weighted),
    ``"full"`` uses pi*w^2.
    """
    if convention not in MASS_CONVENTIONS:
        raise ValueError(f"unknown mass convention {convention!r}")
    area = math.pi * waist**2
    if convention == "half":
        area /= 2.0
    return geom.mass_density * geom.length * area


def mode_spectrum(
    geom: HbarGeometry,
    center: float,
    span: float,
    gamma0: float,
    max_transverse: int,
    mass_convention: str = "full",
) -> List[AcousticMode]:
    """
    Enumerate acoustic modes ``n*FSR + m*dnu_T`` inside a frequency window.

    Parameters
    ----------
    center, span : float
        Window centre and full width [Hz].
    gamma0 : float
        Intrinsic linewidth assigned to every mode [Hz].
    max_transverse : int
        Highest combined transverse order m to include.

    Returns
    -------
    list of AcousticMode
        Sorted by frequency.
    """
    if span <= 0:
        raise ValueError("span must be positive")
    if max_transverse < 0:
        raise ValueError("max_transverse must be >= 0")
    fsr = acoustic_fsr(geom)
    dnu = transverse_mode_spacing(geom)
    lo, hi = center - span / 2.0, center + span / 2.0

    n_lo = max(1, math.floor((lo - max_transverse * dnu) / fsr))
    n_hi = math.ceil(hi / fsr)
    modes = []
    for n in range(n_lo, n_hi + 1):
        for m in range(max_transverse + 1):
            f = n * fsr + m * dnu
            if lo <= f <= hi:
                w = acoustic_waist(geom, f)
                modes.append(
                    AcousticMode(
                        family_index=n,
                        transverse_order=m,
                        frequency=f,
                        intrinsic_linewidth=gamma0,
                        waist_radius=w,
                        q_factor=f / gamma0,
                        motional_mass=motional_mass(geom, w, mass_convention),
                    )
                )
    if not modes:
        raise EmptySpan(f"no acoustic mode within {center:.6g} +/- {span / 2:.6g} Hz")
    modes.sort(key=lambda m: (m.frequency, m.transverse_order))
    return modes


def thermal_occupation(frequency, temperature):
    """
    Bose-Einstein occupation 1/(exp(hf/kT) - 1).

    Accepts scalars or arrays; returns 0 where temperature is 0.
    """
    f = np.asarray(frequency, dtype=float)
    T = np.asarray(temperature, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    if np.any(T < 0):
        raise ValueError("temperature must be non-negative")
    with np.errstate(divide="ignore", over="ignore"):
        x = constants.h * f / (constants.k * T)
        n = np.where(T > 0, 1.0 / np.expm1(x), 0.0)
    return float(n) if n.ndim == 0 else n


def coherence_metrics(mode: AcousticMode) -> dict:
    """f*Q product [Hz] and energy coherence time 1/(2*pi*linewidth) [s]."""
    return {
        "fq_product": mode.frequency * mode.q_factor,
        "coherence_time": 1.0 / (2.0 * math.pi * mode.intrinsic_linewidth),
    }
