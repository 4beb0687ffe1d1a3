"""
Single-photon coupling rates per acoustic mode.

Two filters shape the coupling map: longitudinal phase matching (a sinc
envelope around the Brillouin frequency, zero at every even multiple of the
acoustic FSR) and the transverse overlap between the optical drive envelope
and each transverse acoustic order, which leaks into higher orders when the
crystal is displaced from the optical axis.

Transverse profiles use the Gaussian scale convention exp(-x^2 / 2 w^2) for
both the optical intensity envelope and the acoustic Hermite-Gaussian ground
state, so a lateral offset d between matched profiles of scale w distributes
coupling power over orders as a Poisson law with mean d^2 / 2 w^2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from .errors import EmptyInput
from .resonator import AcousticMode, HbarGeometry


@dataclass(frozen=True)
class AlignmentState:
    transverse_offset: float
    optical_intensity_radius: float
    acoustic_waist: float

    def __post_init__(self):
        if self.transverse_offset < 0:
            raise ValueError("transverse_offset must be >= 0")
        if self.optical_intensity_radius <= 0 or self.acoustic_waist <= 0:
            raise ValueError("beam radii must be positive")


@dataclass(frozen=True)
class CouplingMap:
    entries: Tuple[Tuple[AcousticMode, float], ...]
    reference_g0: float
    brillouin_frequency: float

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        for mode, g0 in self.entries:
            if not (0.0 <= g0 <= self.reference_g0 * (1 + 1e-12)):
                raise ValueError(f"g0={g0} outside [0, reference_g0] for mode at {mode.frequency}")

    def __len__(self):
        return len(self.entries)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m.frequency for m, _ in self.entries])

    @property
    def rates(self) -> np.ndarray:
        return np.array([g for _, g in self.entries])

    @property
    def linewidths(self) -> np.ndarray:
        return np.array([m.intrinsic_linewidth for m, _ in self.entries])

    def strongest(self, transverse_order: Optional[int] = None) -> Tuple[AcousticMode, float]:
        """Entry with the largest g0, optionally restricted to one transverse order."""
        pool = [e for e in self.entries if transverse_order is None or e[0].transverse_order == transverse_order]
        if not pool:
            raise EmptyInput(f"no entry with transverse order {transverse_order}")
        return max(pool, key=lambda e: (e[1], -e[0].frequency))

    def family(self, family_index: int) -> List[Tuple[AcousticMode, float]]:
        return [e for e in self.entries if e[0].family_index == family_index]


def brillouin_frequency(geom: HbarGeometry) -> float:
    """Backscatter phase-matched phonon frequency 2*n*v/lambda [Hz]."""
    return 2.0 * geom.refractive_index * geom.sound_velocity / geom.optical_wavelength


def phase_match_envelope(mode_frequency, brillouin_frequency: float, geom: HbarGeometry):
    """
    Normalized longitudinal overlap ``|sinc(dq*L/2)|``, ``dq = 2*pi*(f - f_B)/v``.

    Equal to 1 at the Brillouin frequency, 2/pi one acoustic FSR away and 0
    at every even multiple of the FSR.
    """
    f = np.asarray(mode_frequency, dtype=float)
    if np.any(f <= 0) or brillouin_frequency <= 0:
        raise ValueError("frequencies must be positive")
    dq = 2.0 * math.pi * (f - brillouin_frequency) / geom.sound_velocity
    env = np.abs(np.sinc(dq * geom.length / 2.0 / math.pi))
    return float(env) if env.ndim == 0 else env


def poisson_weight(xi: float, m: int) -> float:
    """e^-xi xi^m / m!, with the m = 0, xi = 0 limit handled."""
    if xi == 0.0:
        return 1.0 if m == 0 else 0.0
    return math.exp(m * math.log(xi) - xi - gammaln(m + 1))


@lru_cache(maxsize=None)
def _hermgauss(n):
    return np.polynomial.hermite.hermgauss(n)


def _normalized_hermite(m, y):
    # H_m(y) / sqrt(2^m m! sqrt(pi)) by the stable three-term recurrence
    p_prev = np.zeros_like(y)
    p = np.full_like(y, math.pi**-0.25)
    for k in range(m):
        p_prev, p = p, math.sqrt(2.0 / (k + 1)) * y * p - math.sqrt(k / (k + 1)) * p_prev
    return p


def _gauss_hermite_overlap(d, a, b, m):
    # <o|psi_m> for unit-norm o ~ exp(-(x-d)^2/2a^2), psi_m ~ H_m(x/b) exp(-x^2/2b^2).
    # The two Gaussians merge into one; the remaining polynomial of degree m
    # is integrated exactly by Gauss-Hermite quadrature.
    s2 = 1.0 / (1.0 / a**2 + 1.0 / b**2)
    mu = d * s2 / a**2
    log_pref = -(d**2) / (2.0 * (a**2 + b**2))
    nodes, weights = _hermgauss(m // 2 + 2)
    x = mu + math.sqrt(2.0 * s2) * nodes
    integral = math.sqrt(2.0 * s2) * np.dot(weights, _normalized_hermite(m, x / b))
    return math.exp(log_pref) * integral / math.sqrt(a * b * math.sqrt(math.pi))


def transverse_overlap(alignment: AlignmentState, transverse_order: int) -> float:
    """
    Fraction of coupling power the displaced optical envelope puts into one
    acoustic transverse order.

    For equal radii this is the Poisson weight with mean d^2/(2 w^2). Unequal
    radii go through an exact quadrature of the normalized overlap integral.
    The matched, centred fundamental gives exactly 1.
    """
    m = int(transverse_order)
    if m < 0:
        raise ValueError("transverse_order must be >= 0")
    d = alignment.transverse_offset
    a = alignment.optical_intensity_radius
    b = alignment.acoustic_waist
    if a == b:
        return poisson_weight(d**2 / (2.0 * a**2), m)
    if d == 0.0 and m % 2:
        return 0.0  # odd orders are orthogonal to a centred even envelope
    return float(_gauss_hermite_overlap(d, a, b, m) ** 2)


def coupling_map(
    modes: Sequence[AcousticMode],
    alignment: AlignmentState,
    reference_g0: float,
    geom: HbarGeometry,
    brillouin_freq: Optional[float] = None,
) -> CouplingMap:
    """
    g0 for every mode: ``reference_g0 * envelope(f) * sqrt(overlap(m))``.

    ``brillouin_freq`` defaults to the 2nv/lambda estimate; pass the measured
    value when the calibrated velocity and the optical index disagree.
    """
    if reference_g0 <= 0:
        raise ValueError("reference_g0 must be positive")
    if not modes:
        raise EmptyInput("coupling_map needs at least one acoustic mode")
    f_b = brillouin_frequency(geom) if brillouin_freq is None else brillouin_freq
    overlaps = {}
    entries = []
    for mode in sorted(modes, key=lambda md: (md.frequency, md.transverse_order)):
        m = mode.transverse_order
        if m not in overlaps:
            overlaps[m] = transverse_overlap(alignment, m)
        env = phase_match_envelope(mode.frequency, f_b, geom)
        g = min(reference_g0 * env * math.sqrt(overlaps[m]), reference_g0)
        entries.append((mode, g))
    return CouplingMap(tuple(entries), reference_g0, f_b)


def l1_suppression_db(cmap: CouplingMap, family_index: Optional[int] = None) -> float:
    """
    OMIT-dip suppression of the first transverse order relative to the
    fundamental of the same family, ``10*log10(g_L0^2 / g_L1^2)`` [dB].

    Defaults to the family of the most strongly coupled fundamental mode.
    """
    if family_index is None:
        family_index = cmap.strongest(0)[0].family_index
    fam = {mode.transverse_order: g for mode, g in cmap.family(family_index)}
    if 0 not in fam or 1 not in fam:
        raise EmptyInput(f"family {family_index} lacks an L0 or L1 entry")
    if fam[1] == 0.0:
        return math.inf
    return 20.0 * math.log10(fam[0] / fam[1])


def offset_for_suppression(suppression_db: float, waist: float) -> float:
    """Offset at which matched profiles reach a given L1 suppression [m]."""
    xi = 10.0 ** (-suppression_db / 10.0)
    return waist * math.sqrt(2.0 * xi)


def write_coupling_csv(path, cmap: CouplingMap) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frequency_Hz", "transverse_order", "g0_Hz"])
        for mode, g in cmap.entries:
            w.writerow([repr(mode.frequency), mode.transverse_order, repr(g)])
