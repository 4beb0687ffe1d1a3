"""
Linearized triply-resonant optomechanics.

A control field on one optical mode and a phonon mode bridging the two
optical modes reduce the three-wave interaction to a beam-splitter (red
pump) or two-mode-squeezing (blue pump) coupling with rate g0*sqrt(n_c).
Everything here follows from that linear model in the rotating-wave
approximation: cooperativity, optically modified damping, probe
transmission (OMIT/OMIA), the spontaneous anti-Stokes spectrum and the
steady-state phonon number.

Public functions take and return ordinary hertz. Internally the rates are
converted to angular units once; cooperativity is unit-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.constants import hbar

from .coupling import CouplingMap
from .errors import EmptyGrid, SelfOscillation
from .traces import SpectrumTrace, params_digest

TWO_PI = 2.0 * math.pi
PUMPS = ("red", "blue")


@dataclass(frozen=True)
class SystemParams:
    """
    Reduced parameter set of the optomechanical system.

    Parameters
    ----------
    g0 : float
        Single-photon coupling rate [Hz].
    kappa : float
        Total optical energy decay rate of the probed mode [Hz].
    gamma0 : float
        Intrinsic phonon linewidth [Hz].
    phonon_frequency : float
        Frequency of the addressed phonon mode [Hz].
    n_th : float
        Thermal phonon occupation of the bath.
    eta_ext : float
        Output coupling fraction kappa_ext/kappa, in (0, 1].
    wavelength : float
        Drive wavelength [m].
    eta_det : float
        Detection efficiency applied to spontaneous photon flux.
    """

    g0: float = 6.08
    kappa: float = 4.07e6
    gamma0: float = 600.0
    phonon_frequency: float = 12.607e9
    n_th: float = 22.4
    eta_ext: float = 0.5
    wavelength: float = 1550e-9
    eta_det: float = 1.0

    def __post_init__(self):
        for name in ("g0", "kappa", "gamma0", "phonon_frequency", "wavelength"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.n_th < 0:
            raise ValueError("n_th must be >= 0")
        if not (0 < self.eta_ext <= 1):
            raise ValueError("eta_ext must lie in (0, 1]")
        if not (0 < self.eta_det <= 1):
            raise ValueError("eta_det must lie in (0, 1]")

    @property
    def optical_frequency(self) -> float:
        return C_LIGHT / self.wavelength


@dataclass(frozen=True)
class DriveConfig:
    pumped_mode: str
    transmitted_power: float
    intracavity_photons: float

    def __post_init__(self):
        if self.pumped_mode not in PUMPS:
            raise ValueError(f"pumped_mode must be one of {PUMPS}")
        if self.transmitted_power < 0 or self.intracavity_photons < 0:
            raise ValueError("power and photon number must be non-negative")

    @classmethod
    def from_power(cls, pumped_mode: str, power: float, params: SystemParams) -> "DriveConfig":
        return cls(pumped_mode, power, intracavity_photons(power, params))


# -- drive calibration -------------------------------------------------------


def _photon_flux_scale(params: SystemParams) -> float:
    # transmitted power per intracavity photon [W]
    return hbar * TWO_PI * params.optical_frequency * params.eta_ext * TWO_PI * params.kappa


def intracavity_photons(power, params: SystemParams):
    """
    Intracavity photon number from transmitted power,
    ``n_c = P / (hbar * omega * kappa_out)`` with ``kappa_out = eta_ext * kappa``.

    Note that eta_ext is not measured; the symmetric default 0.5 is an
    assumption that scales n_c directly.
    """
    p = np.asarray(power, dtype=float)
    if np.any(p < 0):
        raise ValueError("power must be non-negative")
    n = p / _photon_flux_scale(params)
    return float(n) if n.ndim == 0 else n


def transmitted_power(n_c, params: SystemParams):
    """Inverse of :func:`intracavity_photons`."""
    p = np.asarray(n_c, dtype=float) * _photon_flux_scale(params)
    return float(p) if p.ndim == 0 else p


def cooperativity(params: SystemParams, n_c):
    """C = 4 g0^2 n_c / (gamma0 kappa); the 2*pi factors cancel."""
    n = np.asarray(n_c, dtype=float)
    if np.any(n < 0):
        raise ValueError("n_c must be non-negative")
    c = 4.0 * params.g0**2 * n / (params.gamma0 * params.kappa)
    return float(c) if c.ndim == 0 else c


def photons_for_cooperativity(params: SystemParams, C: float) -> float:
    return C * params.gamma0 * params.kappa / (4.0 * params.g0**2)


def power_at_unity_cooperativity(params: SystemParams) -> float:
    return transmitted_power(photons_for_cooperativity(params, 1.0), params)


def calibrate_eta_ext(params: SystemParams, power_at_unity: float) -> float:
    """Output-coupling fraction that puts C = 1 at the given transmitted power."""
    n1 = photons_for_cooperativity(params, 1.0)
    eta = power_at_unity / (n1 * hbar * TWO_PI * params.optical_frequency * TWO_PI * params.kappa)
    if not (0 < eta <= 1):
        raise ValueError(f"calibration requires eta_ext in (0, 1], got {eta:.4g}")
    return eta


# -- damping and occupation --------------------------------------------------


def effective_linewidth(params: SystemParams, C, pumped: str = "red"):
    """Optically modified phonon linewidth gamma0*(1 +/- C) [Hz]."""
    if pumped not in PUMPS:
        raise ValueError(f"pumped must be one of {PUMPS}")
    c = np.asarray(C, dtype=float)
    if np.any(c < 0):
        raise ValueError("C must be non-negative")
    if pumped == "blue":
        if np.any(c >= 1):
            raise SelfOscillation(f"blue pump with C={np.max(c):.4g} >= 1 self-oscillates")
        g = params.gamma0 * (1.0 - c)
    else:
        g = params.gamma0 * (1.0 + c)
    return float(g) if g.ndim == 0 else g


def steady_state_occupation(params: SystemParams, C):
    """Cooled phonon number n_th / (1 + C) for a red pump."""
    c = np.asarray(C, dtype=float)
    if np.any(c < 0):
        raise ValueError("C must be non-negative")
    n = params.n_th / (1.0 + c)
    return float(n) if n.ndim == 0 else n


def noise_heating(params: SystemParams, C: float, n_bath_optical: float) -> float:
    """
    Extra phonons from a thermally populated optical bath.

    Detailed balance between the intrinsic bath (rate gamma0, occupation
    n_th) and the optical bath (rate C*gamma0, occupation n_bath_optical)
    adds ``n_bath_optical * C / (1 + C)`` to the noise-free result.
    """
    if C < 0 or n_bath_optical < 0:
        raise ValueError("inputs must be non-negative")
    return n_bath_optical * C / (1.0 + C)


def optical_bath_from_phase_noise(n_c: float, phase_noise_psd: float, params: SystemParams) -> float:
    """
    Approximate optical bath occupation from residual laser phase noise,
    ``n_c * S_phi(Omega) * kappa / 4`` with S_phi in rad^2/Hz at the phonon
    offset and kappa angular. Order-of-magnitude estimator only.
    """
    if n_c < 0 or phase_noise_psd < 0:
        raise ValueError("inputs must be non-negative")
    return n_c * phase_noise_psd * TWO_PI * params.kappa / 4.0


# -- probe response ----------------------------------------------------------


def _mode_arrays(cmap: Optional[CouplingMap], params: SystemParams):
    # (g0 [Hz], intrinsic linewidth [Hz], offset from the addressed phonon [Hz])
    if cmap is None:
        return np.array([params.g0]), np.array([params.gamma0]), np.zeros(1)
    if len(cmap) == 0:
        raise ValueError("coupling map is empty")
    return cmap.rates, cmap.linewidths, cmap.frequencies - params.phonon_frequency


def _grid(probe_detunings):
    x = np.asarray(probe_detunings, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise EmptyGrid("probe detuning grid is empty")
    return x


def _self_energy(x, g0, gam, offs, n_c, sign):
    # sum_j g_j^2 / (gamma_j/2 - i(delta - sign*offs_j)), angular, shape (N,)
    gt2 = (TWO_PI * g0) ** 2 * n_c
    d = TWO_PI * (x[:, None] - sign * offs[None, :])
    return np.sum(gt2[None, :] / (0.5 * TWO_PI * gam[None, :] - 1j * d), axis=1)


def _transmission(x, params, g0, gam, offs, n_c, pumped):
    half_kappa = 0.5 * TWO_PI * params.kappa
    delta = TWO_PI * x
    if pumped == "red":
        sigma = _self_energy(x, g0, gam, offs, n_c, +1.0)
    else:
        sigma = -_self_energy(x, g0, gam, offs, n_c, -1.0)
    amp = half_kappa / (half_kappa - 1j * delta + sigma)
    return np.abs(amp) ** 2


def _trace_metadata(params, n_c, pumped, cmap):
    return {
        "pumped_mode": pumped,
        "intracavity_photons": float(n_c),
        "cooperativity": float(cooperativity(params, n_c)),
        "params_digest": params_digest(params),
        "n_coupled_modes": 1 if cmap is None else len(cmap),
    }


def omit_transmission(
    cmap: Optional[CouplingMap],
    params: SystemParams,
    n_c: float,
    probe_detunings: Sequence[float],
) -> SpectrumTrace:
    """
    Probe power transmission through the blue mode with the red mode pumped.

    The cavity response ``(kappa/2) / (kappa/2 - i*delta + Sigma(delta))``
    carries the optomechanical self-energy summed over every coupled phonon
    mode. Values are relative to the bare cavity peak; a single dual-resonant
    mode gives a Lorentzian dip of width gamma0*(1 + C) and depth
    1 - 1/(1 + C)^2. ``cmap=None`` means a single mode with ``params.g0``.
    """
    x = _grid(probe_detunings)
    g0, gam, offs = _mode_arrays(cmap, params)
    values = _transmission(x, params, g0, gam, offs, n_c, "red")
    return SpectrumTrace(x, values, "omit", _trace_metadata(params, n_c, "red", cmap))


def omia_transmission(
    cmap: Optional[CouplingMap],
    params: SystemParams,
    n_c: float,
    probe_detunings: Sequence[float],
) -> SpectrumTrace:
    """
    Probe power transmission through the red mode with the blue mode pumped.

    The squeezing interaction flips the sign of the self-energy, producing a
    gain peak of width gamma0*(1 - C) and height 1/(1 - C)^2. A phonon mode
    offset by +df from the addressed one appears at probe detuning -df.

    Raises
    ------
    SelfOscillation
        If any coupled mode reaches C >= 1.
    """
    x = _grid(probe_detunings)
    g0, gam, offs = _mode_arrays(cmap, params)
    c_modes = 4.0 * g0**2 * n_c / (gam * params.kappa)
    if np.any(c_modes >= 1.0):
        raise SelfOscillation(f"blue pump with C={c_modes.max():.4g} >= 1 self-oscillates")
    values = _transmission(x, params, g0, gam, offs, n_c, "blue")
    return SpectrumTrace(x, values, "omia", _trace_metadata(params, n_c, "blue", cmap))


# -- spontaneous anti-Stokes -------------------------------------------------


def anti_stokes_flux(params: SystemParams, C: float) -> float:
    """Detected anti-Stokes photon flux gamma0*C*n_th/(1 + C)*eta_ext*eta_det [1/s]."""
    return TWO_PI * params.gamma0 * params.n_th * C / (1.0 + C) * params.eta_ext * params.eta_det


def peak_brightness(C):
    """AS peak height relative to its value at C = 1, ``4C/(1 + C)^2``."""
    c = np.asarray(C, dtype=float)
    v = 4.0 * c / (1.0 + c) ** 2
    return float(v) if v.ndim == 0 else v


def spontaneous_psd(
    params: SystemParams,
    C: float,
    rf_detunings: Sequence[float],
    background: float = 0.0,
) -> SpectrumTrace:
    """
    Heterodyne PSD of spontaneously scattered anti-Stokes light.

    A Lorentzian of FWHM gamma0*(1 + C) whose area equals the detected AS
    photon flux, on a flat shot-noise floor ``background`` (same units:
    photons per second per hertz).
    """
    if C < 0:
        raise ValueError("C must be non-negative")
    if background < 0:
        raise ValueError("background must be non-negative")
    x = _grid(rf_detunings)
    width = effective_linewidth(params, C, "red")
    area = anti_stokes_flux(params, C)
    half = 0.5 * width
    values = background + area / math.pi * half / (x**2 + half**2)
    meta = {
        "pumped_mode": "red",
        "cooperativity": float(C),
        "params_digest": params_digest(params),
        "background": float(background),
    }
    return SpectrumTrace(x, values, "spontaneous_psd", meta)
