"""
Inverse pipeline: from measured spectra to system parameters and phonon
occupations.

Each trace is reduced to a Lorentzian (center, FWHM, area, background).
OMIT and OMIA linewidths are pooled into one straight line by reflecting
the OMIA powers to negative values; its intercept is the intrinsic
linewidth and its zero-crossing slope sets the power at unity
cooperativity. Spontaneous anti-Stokes spectra then give two independent
occupation estimates, one from the broadened linewidth and one from the
normalized peak brightness.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from .dynamics import SystemParams
from .errors import (
    InsufficientData,
    NegativeSlope,
    NoConvergence,
    NoPeakFound,
    PhononLabError,
    UnphysicalLinewidth,
)
from .traces import SpectrumTrace

MAX_EVALUATIONS = 200
PROMINENCE_SIGMAS = 3.0
_MAD_TO_SIGMA = 1.4826


@dataclass(frozen=True)
class FitResult:
    center: float
    fwhm: float
    area: float
    peak_height: float
    background: float
    uncertainties: Dict[str, float]
    residual_norm: float
    orientation: str = "peak"

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError("fwhm must be positive")
        if any(u < 0 for u in self.uncertainties.values()):
            raise ValueError("uncertainties must be non-negative")


# -- Lorentzian fitting ------------------------------------------------------


def lorentzian(x, center, fwhm, area, background, sign=1.0):
    """Area-normalized Lorentzian on a constant background."""
    h = 0.5 * fwhm
    return background + sign * area * h / math.pi / ((x - center) ** 2 + h**2)


def _edge_statistics(x, y):
    n_edge = max(3, x.size // 10)
    xe = np.concatenate([x[:n_edge], x[-n_edge:]])
    ye = np.concatenate([y[:n_edge], y[-n_edge:]])
    background = float(np.median(ye))
    slope, intercept = np.polyfit(xe, ye, 1)
    resid = ye - (slope * xe + intercept)
    sigma = _MAD_TO_SIGMA * float(np.median(np.abs(resid - np.median(resid))))
    return background, sigma


def _half_width(x, excess, i0, half):
    # walk out from the extremum to the half-prominence crossings, interpolating
    def crossing(step):
        i = i0
        while 0 <= i + step < x.size and excess[i + step] >= half:
            i += step
        j = i + step
        if not 0 <= j < x.size:
            return x[i]
        t = (excess[i] - half) / (excess[i] - excess[j])
        return x[i] + t * (x[j] - x[i])

    width = crossing(+1) - crossing(-1)
    return width if width > 0 else float(np.min(np.diff(x)))


def fit_lorentzian(trace: SpectrumTrace, orientation: str = "peak") -> FitResult:
    """
    Levenberg-Marquardt fit of a Lorentzian plus constant background.

    Parameters
    ----------
    trace : SpectrumTrace
        At least 7 samples.
    orientation : {"peak", "dip"}

    Returns
    -------
    FitResult
        One-sigma uncertainties come from the Gauss-Newton covariance at the
        optimum, scaled by the residual variance.

    Raises
    ------
    NoPeakFound
        Prominence below 3 sigma of the edge noise (robust MAD estimate).
    NoConvergence
        Optimizer failed within the evaluation cap.
    """
    if orientation not in ("peak", "dip"):
        raise ValueError("orientation must be 'peak' or 'dip'")
    x = np.asarray(trace.detunings, dtype=float)
    y = np.asarray(trace.values, dtype=float)
    if x.size < 7:
        raise InsufficientData("need at least 7 points to fit a Lorentzian")
    sign = 1.0 if orientation == "peak" else -1.0

    bg0, sigma = _edge_statistics(x, y)
    excess = sign * (y - bg0)
    i0 = int(np.argmax(excess))
    prominence = float(excess[i0])
    if not prominence > 0 or prominence < PROMINENCE_SIGMAS * sigma:
        raise NoPeakFound(
            f"{orientation} prominence {prominence:.3g} below {PROMINENCE_SIGMAS:g} x noise {sigma:.3g}"
        )
    c0 = float(x[i0])
    w0 = _half_width(x, excess, i0, 0.5 * prominence)

    # work in units of the initial width and prominence for conditioning
    u = (x - c0) / w0
    v = (y - bg0) / prominence

    def residual(p):
        c, w, a, b = p
        h = 0.5 * w
        return b + sign * a * h / math.pi / ((u - c) ** 2 + h**2) - v

    def jacobian(p):
        c, w, a, b = p
        h = 0.5 * w
        d = (u - c) ** 2 + h**2
        jac = np.empty((u.size, 4))
        jac[:, 0] = sign * a * h / math.pi * 2.0 * (u - c) / d**2
        jac[:, 1] = 0.5 * sign * a / math.pi * (d - 2.0 * h**2) / d**2
        jac[:, 2] = sign * h / math.pi / d
        jac[:, 3] = 1.0
        return jac

    p0 = np.array([0.0, 1.0, math.pi / 2.0, 0.0])
    try:
        sol = least_squares(
            residual, p0, jac=jacobian, method="lm",
            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=MAX_EVALUATIONS,
        )
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise NoConvergence(f"Lorentzian fit failed: {exc}") from exc
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise NoConvergence(f"Lorentzian fit did not converge: {sol.message}")

    c, w, a, b = sol.x
    if w < 0:
        w, a = -w, -a
    if not w > 0:
        raise NoConvergence("fit collapsed to zero width")

    dof = max(u.size - 4, 1)
    rss = float(np.sum(sol.fun**2))
    jtj = sol.jac.T @ sol.jac
    try:
        cov = np.linalg.pinv(jtj) * (rss / dof)
    except np.linalg.LinAlgError:
        cov = np.full((4, 4), np.nan)
    scale = np.diag([w0, w0, prominence * w0, prominence])
    cov = scale @ cov @ scale

    center = c0 + w0 * c
    fwhm = w0 * w
    area = prominence * w0 * a
    background = bg0 + prominence * b
    height = 2.0 * area / (math.pi * fwhm)
    # height = 2A/(pi w): gradient wrt (area, fwhm)
    g = np.array([2.0 / (math.pi * fwhm), -height / fwhm])
    sub = cov[np.ix_([2, 1], [2, 1])]
    errs = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    unc = {
        "center": float(errs[0]),
        "fwhm": float(errs[1]),
        "area": float(errs[2]),
        "background": float(errs[3]),
        "peak_height": float(math.sqrt(max(g @ sub @ g, 0.0))),
    }
    return FitResult(
        center=float(center),
        fwhm=float(fwhm),
        area=float(area),
        peak_height=float(height),
        background=float(background),
        uncertainties=unc,
        residual_norm=float(prominence * math.sqrt(rss / u.size)),
        orientation=orientation,
    )


def cavity_normalized(trace: SpectrumTrace, kappa: float) -> SpectrumTrace:
    """
    Divide a transmission trace by the bare-cavity Lorentzian of FWHM
    ``kappa`` [Hz], leaving only the optomechanical feature on a flat
    unit background.
    """
    bare = 1.0 / (1.0 + (2.0 * trace.detunings / kappa) ** 2)
    return trace.with_values(trace.values / bare, cavity_normalized=True)


# -- linewidth regression ----------------------------------------------------


@dataclass(frozen=True)
class CooperativityModel:
    """Linear power calibration C(P) = P / power_at_unity_C."""

    power_at_unity_C: float

    def __post_init__(self):
        if not self.power_at_unity_C > 0:
            raise ValueError("power_at_unity_C must be positive")

    def cooperativity(self, power):
        c = np.asarray(power, dtype=float) / self.power_at_unity_C
        return float(c) if c.ndim == 0 else c

    def power_for(self, C):
        return C * self.power_at_unity_C


@dataclass(frozen=True)
class LinewidthRegression:
    gamma0: float
    slope: float
    power_at_unity_C: float
    uncertainties: Dict[str, float]
    n_points: int
    weighted: bool

    @property
    def c_model(self) -> CooperativityModel:
        return CooperativityModel(self.power_at_unity_C)

    def cooperativity(self, power):
        return self.c_model.cooperativity(power)


def _split_point(p):
    if len(p) == 3:
        return float(p[0]), float(p[1]), p[2]
    return float(p[0]), float(p[1]), None


def fit_linewidth_vs_power(
    omit_points: Sequence[Tuple[float, ...]],
    omia_points: Sequence[Tuple[float, ...]] = (),
) -> LinewidthRegression:
    """
    Joint straight-line fit Gamma(P) = gamma0 * (1 + P/P1).

    Points are ``(power, linewidth)`` or ``(power, linewidth, sigma)``. OMIA
    powers are reflected to -P so that both arms lie on one line. With a
    sigma on every point the fit is inverse-variance weighted; otherwise it
    is unweighted. Covariances are scaled by the reduced chi-square.

    Raises
    ------
    InsufficientData
        Fewer than two points or fewer than two distinct (reflected) powers.
    NegativeSlope
        Linewidth decreasing with reflected power.
    """
    pts = [_split_point(p) for p in omit_points]
    pts += [(-P, g, s) for P, g, s in (_split_point(p) for p in omia_points)]
    if len(pts) < 2:
        raise InsufficientData("need at least two linewidth points")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.unique(x).size < 2:
        raise InsufficientData("need at least two distinct powers")
    sig = [p[2] for p in pts]
    weighted = all(s is not None and s > 0 and math.isfinite(s) for s in sig)
    wts = 1.0 / np.asarray(sig, dtype=float) ** 2 if weighted else np.ones_like(x)

    X = np.column_stack([np.ones_like(x), x])
    XtW = X.T * wts
    normal = XtW @ X
    beta = np.linalg.solve(normal, XtW @ y)
    intercept, slope = float(beta[0]), float(beta[1])
    if not slope > 0:
        raise NegativeSlope(f"fitted slope {slope:.4g} <= 0 is unphysical")
    if not intercept > 0:
        raise NegativeSlope(f"fitted intercept {intercept:.4g} <= 0 is unphysical")

    dof = x.size - 2
    resid = y - X @ beta
    if dof > 0:
        cov = np.linalg.inv(normal) * float(np.sum(wts * resid**2) / dof)
    else:
        cov = np.full((2, 2), np.nan)
    p1 = intercept / slope
    grad = np.array([1.0 / slope, -intercept / slope**2])
    return LinewidthRegression(
        gamma0=intercept,
        slope=slope,
        power_at_unity_C=p1,
        uncertainties={
            "gamma0": float(math.sqrt(cov[0, 0])) if dof > 0 else math.nan,
            "slope": float(math.sqrt(cov[1, 1])) if dof > 0 else math.nan,
            "power_at_unity_C": float(math.sqrt(grad @ cov @ grad)) if dof > 0 else math.nan,
        },
        n_points=int(x.size),
        weighted=weighted,
    )


def extract_g0(gamma0: float, kappa: float, n_c_at_unity: float) -> float:
    """Single-photon coupling rate sqrt(gamma0*kappa/(4*n_c)) at C = 1 [Hz]."""
    if not (gamma0 > 0 and kappa > 0 and n_c_at_unity > 0):
        raise ValueError("gamma0, kappa and n_c_at_unity must all be positive")
    return math.sqrt(gamma0 * kappa / (4.0 * n_c_at_unity))


# -- thermometry -------------------------------------------------------------


def occupation_from_linewidth(gamma0: float, gamma_plus: float, n_th: float) -> float:
    """n_th * gamma0 / gamma_plus."""
    if not gamma0 > 0:
        raise ValueError("gamma0 must be positive")
    if gamma_plus < gamma0:
        raise UnphysicalLinewidth(f"cooled linewidth {gamma_plus:.4g} below intrinsic {gamma0:.4g}")
    return n_th * gamma0 / gamma_plus


def occupation_from_area(v_norm: float, gamma_plus: float, c_of_p: float, gamma0: float, n_th: float) -> float:
    """n_th * V * gamma_plus / (4 * C * gamma0), V the brightness normalized at C = 1."""
    if not c_of_p > 0:
        raise ValueError("cooperativity must be positive")
    if not (gamma0 > 0 and gamma_plus > 0) or v_norm < 0:
        raise ValueError("linewidths must be positive and brightness non-negative")
    return n_th * v_norm * gamma_plus / (4.0 * c_of_p * gamma0)


def _interpolate_in_log_power(powers, values, target):
    lp = np.log(powers)
    order = np.argsort(np.abs(lp - math.log(target)), kind="stable")[: min(3, lp.size)]
    deg = order.size - 1
    coef = np.polyfit(lp[order], values[order], deg)
    return float(np.polyval(coef, math.log(target)))


def normalized_brightness(
    fits: Sequence[Tuple[float, FitResult]],
    c_model: CooperativityModel,
) -> List[Tuple[float, float]]:
    """
    Rescale fitted peak heights so that the height interpolated at C = 1 is 1.

    Interpolation is a local quadratic in log power through the three
    powers nearest to C = 1, where the height is stationary.

    Raises
    ------
    InsufficientData
        No fits, or C = 1 lies outside the data by more than twice its span.
    """
    if not fits:
        raise InsufficientData("no fits to normalize")
    powers = np.array([float(p) for p, _ in fits])
    heights = np.array([f.peak_height for _, f in fits])
    if np.any(powers <= 0):
        raise InsufficientData("powers must be positive")
    p1 = c_model.power_for(1.0)
    lo, hi = powers.min(), powers.max()
    if not (lo <= p1 <= hi):
        gap = (lo - p1) if p1 < lo else (p1 - hi)
        if gap > 2.0 * (hi - lo):
            raise InsufficientData("C = 1 lies too far outside the measured power range")
    ref = _interpolate_in_log_power(powers, heights, p1)
    if not ref > 0:
        raise InsufficientData("interpolated brightness at C = 1 is not positive")
    return [(float(p), float(h / ref)) for p, h in zip(powers, heights)]


def area_trend(
    fits: Sequence[Tuple[float, FitResult]],
    c_model: CooperativityModel,
) -> Tuple[float, List[Tuple[float, float, float]]]:
    """
    Compare fitted areas with the C/(1+C) law.

    Returns the least-squares asymptotic area and, per power, the area
    normalized by it next to the model value C/(1+C).
    """
    if not fits:
        raise InsufficientData("no fits")
    powers = np.array([float(p) for p, _ in fits])
    areas = np.array([f.area for _, f in fits])
    C = np.array([c_model.cooperativity(p) for p in powers])
    model = C / (1.0 + C)
    asymptote = float(np.dot(areas, model) / np.dot(model, model))
    return asymptote, [(float(p), float(a / asymptote), float(m)) for p, a, m in zip(powers, areas, model)]


@dataclass(frozen=True)
class CoolingPoint:
    transmitted_power: float
    cooperativity: float
    linewidth: float
    occupation_from_linewidth: float
    occupation_from_area: float
    normalized_brightness: float
    uncertainties: Dict[str, float] = field(default_factory=dict)
    error: Optional[str] = None

    def __post_init__(self):
        for name in ("occupation_from_linewidth", "occupation_from_area"):
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def ok(self) -> bool:
        return self.error is None


def _trace_power(trace: SpectrumTrace) -> float:
    try:
        return float(trace.metadata["transmitted_power"])
    except KeyError:
        raise InsufficientData("trace metadata lacks 'transmitted_power'") from None


def build_cooling_table(
    traces: Sequence[SpectrumTrace],
    params: SystemParams,
    regression: LinewidthRegression,
) -> List[CoolingPoint]:
    """
    Per-power thermometry from spontaneous anti-Stokes spectra.

    Each trace is fit, its cooperativity taken from the OMIT/OMIA regression
    and the occupation estimated from both linewidth and brightness. A trace
    that fails to fit yields a row with NaNs and the error message instead of
    aborting the table.
    """
    if not traces:
        return []
    for t in traces:
        if t.kind != "spontaneous_psd":
            raise ValueError(f"expected spontaneous_psd traces, got {t.kind!r}")

    c_model = regression.c_model
    g0 = regression.gamma0
    s_g0 = regression.uncertainties.get("gamma0", 0.0)
    s_p1 = regression.uncertainties.get("power_at_unity_C", 0.0)
    fits: List[Tuple[int, float, FitResult]] = []
    errors: Dict[int, str] = {}
    for i, t in enumerate(traces):
        try:
            fits.append((i, _trace_power(t), fit_lorentzian(t, "peak")))
        except PhononLabError as exc:
            errors[i] = f"{type(exc).__name__}: {exc}"

    brightness: Dict[int, float] = {}
    if fits:
        try:
            vn = normalized_brightness([(p, f) for _, p, f in fits], c_model)
            brightness = {i: v for (i, _, _), (_, v) in zip(fits, vn)}
        except PhononLabError as exc:
            for i, _, _ in fits:
                errors.setdefault(i, f"{type(exc).__name__}: {exc}")

    fit_by_index = {i: (p, f) for i, p, f in fits}
    rows = []
    nan = math.nan
    for i, t in enumerate(traces):
        power = _trace_power(t)
        C = float(c_model.cooperativity(power))
        if i in errors:
            rows.append(CoolingPoint(power, C, nan, nan, nan, nan, error=errors[i]))
            continue
        _, fit = fit_by_index[i]
        v = brightness[i]
        try:
            n_lw = occupation_from_linewidth(g0, fit.fwhm, params.n_th)
        except UnphysicalLinewidth as exc:
            rows.append(CoolingPoint(power, C, fit.fwhm, nan, nan, v, error=f"UnphysicalLinewidth: {exc}"))
            continue
        n_area = occupation_from_area(v, fit.fwhm, C, g0, params.n_th)

        rel = lambda s, x: (s / x) ** 2 if (x and math.isfinite(s)) else 0.0  # noqa: E731
        r_w = rel(fit.uncertainties["fwhm"], fit.fwhm)
        r_g0 = rel(s_g0, g0)
        r_c = rel(s_p1, c_model.power_at_unity_C)
        r_v = rel(fit.uncertainties["peak_height"], fit.peak_height)
        rows.append(
            CoolingPoint(
                transmitted_power=power,
                cooperativity=C,
                linewidth=fit.fwhm,
                occupation_from_linewidth=n_lw,
                occupation_from_area=n_area,
                normalized_brightness=v,
                uncertainties={
                    "linewidth": fit.uncertainties["fwhm"],
                    "occupation_from_linewidth": n_lw * math.sqrt(r_w + r_g0),
                    "occupation_from_area": n_area * math.sqrt(r_v + r_w + r_c + r_g0),
                },
            )
        )
    return rows


# -- serialization -----------------------------------------------------------

COOLING_COLUMNS = (
    "transmitted_power_W",
    "cooperativity",
    "linewidth_Hz",
    "linewidth_err_Hz",
    "n_linewidth",
    "n_linewidth_err",
    "n_area",
    "n_area_err",
    "normalized_brightness",
    "error",
)


def cooling_table_records(rows: Sequence[CoolingPoint]) -> List[dict]:
    return [asdict(r) for r in rows]


def write_cooling_csv(path, rows: Sequence[CoolingPoint]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COOLING_COLUMNS)
        for r in rows:
            u = r.uncertainties
            w.writerow([
                repr(r.transmitted_power), repr(r.cooperativity), repr(r.linewidth),
                repr(u.get("linewidth", math.nan)),
                repr(r.occupation_from_linewidth), repr(u.get("occupation_from_linewidth", math.nan)),
                repr(r.occupation_from_area), repr(u.get("occupation_from_area", math.nan)),
                repr(r.normalized_brightness), r.error or "",
            ])


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=json_default)
        fh.write("\n")


def json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")

