import math
from dataclasses import replace

import numpy as np
import pytest

from phononlab import analysis as an
from phononlab import dynamics as dyn
from phononlab.errors import InsufficientData, NegativeSlope, NoPeakFound, UnphysicalLinewidth
from phononlab.specsynth import add_measurement_noise, detuning_grid, scenario_traces
from phononlab.traces import SpectrumTrace

P = dyn.SystemParams()
P_CAL = replace(P, eta_ext=dyn.calibrate_eta_ext(P, 22.8e-6))


def _lorentz_trace(center, fwhm, area, bg, sign=1.0, kind="spontaneous_psd"):
    x = detuning_grid(fwhm, 20, 30) + center
    return SpectrumTrace(x, an.lorentzian(x, center, fwhm, area, bg, sign), kind)


@pytest.mark.parametrize("sign,orientation", [(1.0, "peak"), (-1.0, "dip")])
def test_exact_lorentzian_recovered(sign, orientation):
    t = _lorentz_trace(123.0, 850.0, 40.0, 2.0, sign, "omit")
    f = an.fit_lorentzian(t, orientation)
    assert f.center == pytest.approx(123.0, abs=1e-6)
    assert f.fwhm == pytest.approx(850.0, rel=1e-9)
    assert f.area == pytest.approx(40.0, rel=1e-9)
    assert f.background == pytest.approx(2.0, rel=1e-9)
    assert f.peak_height == pytest.approx(2 * 40.0 / (math.pi * 850.0), rel=1e-9)


def test_fit_uncertainty_is_calibrated():
    # with homoscedastic noise the spread of fitted widths over seeds should
    # match the reported sigma
    base = _lorentz_trace(0.0, 1000.0, 1000.0, 1.0, kind="omit")
    fits = [an.fit_lorentzian(add_measurement_noise(base, s, 100, noise_level=1.0)) for s in range(200)]
    w = np.array([f.fwhm for f in fits])
    s = np.median([f.uncertainties["fwhm"] for f in fits])
    assert abs(w.mean() - 1000.0) < 4 * w.std() / math.sqrt(w.size)
    assert w.std() == pytest.approx(s, rel=0.2)


def test_flat_trace_has_no_peak():
    x = np.linspace(-1, 1, 201)
    t = SpectrumTrace(x, np.ones(201), "spontaneous_psd")
    with pytest.raises(NoPeakFound):
        an.fit_lorentzian(add_measurement_noise(t, 0, 10))


def test_too_few_points():
    with pytest.raises(InsufficientData):
        an.fit_lorentzian(SpectrumTrace(np.arange(5.0), np.ones(5), "omit"))


def test_regression_closure_noiseless():
    omit_p = [7e-6, 30e-6, 120e-6, 500e-6, 1.3e-3]
    omia_p = [4e-6, 12e-6, 19e-6]
    ot = scenario_traces(P_CAL, omit_p, "omit", 0, noisy=False)
    at = scenario_traces(P_CAL, omia_p, "omia", 0, noisy=False)
    fo = [an.fit_lorentzian(an.cavity_normalized(t, P.kappa), "dip") for t in ot]
    fa = [an.fit_lorentzian(an.cavity_normalized(t, P.kappa), "peak") for t in at]
    reg = an.fit_linewidth_vs_power(
        [(p, f.fwhm, f.uncertainties["fwhm"]) for p, f in zip(omit_p, fo)],
        [(p, f.fwhm, f.uncertainties["fwhm"]) for p, f in zip(omia_p, fa)],
    )
    assert reg.weighted
    assert reg.gamma0 == pytest.approx(600.0, rel=1e-3)
    assert reg.power_at_unity_C == pytest.approx(22.8e-6, rel=1e-3)
    n1 = dyn.intracavity_photons(reg.power_at_unity_C, P_CAL)
    assert an.extract_g0(reg.gamma0, P.kappa, n1) == pytest.approx(6.08, rel=1e-3)


def test_regression_exact_line():
    pts = [(p, 600 * (1 + p / 22.8e-6), 1.0) for p in (1e-5, 5e-5, 2e-4)]
    neg = [(p, 600 * (1 - p / 22.8e-6), 1.0) for p in (5e-6, 1e-5)]
    reg = an.fit_linewidth_vs_power(pts, neg)
    assert reg.weighted
    assert reg.gamma0 == pytest.approx(600.0, rel=1e-12)
    assert reg.power_at_unity_C == pytest.approx(22.8e-6, rel=1e-12)
    assert reg.cooperativity(22.8e-6) == pytest.approx(1.0)


def test_regression_errors():
    with pytest.raises(InsufficientData):
        an.fit_linewidth_vs_power([(1e-5, 700.0)])
    with pytest.raises(InsufficientData):
        an.fit_linewidth_vs_power([(1e-5, 700.0), (1e-5, 710.0)])
    with pytest.raises(NegativeSlope):
        an.fit_linewidth_vs_power([(1e-5, 700.0), (2e-5, 600.0)])


def test_occupation_estimators():
    assert an.occupation_from_linewidth(600.0, 600.0 * 58, 22.4) == pytest.approx(22.4 / 58)
    with pytest.raises(UnphysicalLinewidth):
        an.occupation_from_linewidth(600.0, 500.0, 22.4)
    # brightness 4C/(1+C)^2 with width gamma0(1+C) gives n_th/(1+C)
    C = 57.0
    v = 4 * C / (1 + C) ** 2
    assert an.occupation_from_area(v, 600.0 * (1 + C), C, 600.0, 22.4) == pytest.approx(22.4 / (1 + C))


def test_cooling_table_noiseless_closure():
    powers = [24e-6, 50e-6, 100e-6, 200e-6, 386e-6, 600e-6, 900e-6, 1.3e-3]
    traces = scenario_traces(P_CAL, powers, "spontaneous_psd", 0, noisy=False)
    reg = an.LinewidthRegression(600.0, 600.0 / 22.8e-6, 22.8e-6, {}, 0, False)
    rows = an.build_cooling_table(traces, P_CAL, reg)
    for r in rows:
        expected = 22.4 / (1 + r.cooperativity)
        assert r.ok
        assert r.occupation_from_linewidth == pytest.approx(expected, rel=1e-3)
        assert r.occupation_from_area == pytest.approx(expected, rel=1e-2)


def test_cooling_table_records_failures_in_row():
    powers = [24e-6, 1.3e-3]
    traces = scenario_traces(P_CAL, powers, "spontaneous_psd", 0, noisy=False)
    flat = traces[0].with_values(np.ones(len(traces[0])))
    reg = an.LinewidthRegression(600.0, 600.0 / 22.8e-6, 22.8e-6, {}, 0, False)
    rows = an.build_cooling_table([flat, traces[1]], P_CAL, reg)
    assert not rows[0].ok and "NoPeakFound" in rows[0].error
    assert math.isnan(rows[0].occupation_from_linewidth)


def test_area_trend_noiseless():
    powers = [24e-6, 100e-6, 386e-6, 1.3e-3]
    traces = scenario_traces(P_CAL, powers, "spontaneous_psd", 0, noisy=False)
    fits = [(p, an.fit_lorentzian(t)) for p, t in zip(powers, traces)]
    asym, rows = an.area_trend(fits, an.CooperativityModel(22.8e-6))
    assert asym == pytest.approx(dyn.anti_stokes_flux(P_CAL, 1e12), rel=1e-3)
    for _, norm, model in rows:
        assert norm == pytest.approx(model, rel=1e-3)


def test_normalized_brightness_far_extrapolation_rejected():
    f = an.fit_lorentzian(_lorentz_trace(0.0, 1000.0, 10.0, 0.0))
    with pytest.raises(InsufficientData):
        an.normalized_brightness([(1e-3, f), (1.1e-3, f)], an.CooperativityModel(1e-6))


def test_cooling_csv_and_json(tmp_path):
    reg = an.LinewidthRegression(600.0, 600.0 / 22.8e-6, 22.8e-6, {}, 0, False)
    traces = scenario_traces(P_CAL, [24e-6, 100e-6, 1.3e-3], "spontaneous_psd", 0, noisy=False)
    rows = an.build_cooling_table(traces, P_CAL, reg)
    an.write_cooling_csv(tmp_path / "c.csv", rows)
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0].split(",") == list(an.COOLING_COLUMNS)
    assert len(lines) == 4
    an.write_json(tmp_path / "c.json", {"rows": an.cooling_table_records(rows), "x": np.float64(1.5)})
    assert '"x": 1.5' in (tmp_path / "c.json").read_text()
