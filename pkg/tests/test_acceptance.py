"""
Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py``.
"""

import csv
import io
import math
import sys
from dataclasses import replace

import numpy as np
import pytest

from phononlab import analysis as an
from phononlab import cli, config
from phononlab import dynamics as dyn
from phononlab.coupling import AlignmentState, coupling_map, phase_match_envelope, poisson_weight, transverse_overlap
from phononlab.errors import SelfOscillation
from phononlab.optcavity import OpticalCavityGeometry, cavity_linewidth, optical_waist, resonance_spectrum
from phononlab.resonator import (
    AcousticMode,
    HbarGeometry,
    acoustic_fsr,
    acoustic_waist,
    coherence_metrics,
    mode_spectrum,
    thermal_occupation,
    transverse_mode_spacing,
)
from phononlab.specsynth import detuning_grid, scenario_traces

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from oracles import (  # noqa: E402
    dense_scan_roots,
    envelope_by_integral,
    overlap_by_quadrature,
    probe_response_linear_solve,
)

PAPER_SEEDS = range(100)


def rel_err(got, ref):
    return abs(got - ref) / abs(ref)


class Criterion:
    """Collects named checks and prints one summary line."""

    def __init__(self, label):
        self.label = label
        self.checks = []

    def check(self, name, ok, detail):
        self.checks.append((name, bool(ok), detail))

    def finish(self):
        ok = all(c[1] for c in self.checks)
        details = "; ".join(f"{n}: {d}{'' if o else ' [FAIL]'}" for n, o, d in self.checks)
        print(f"{'PASS' if ok else 'FAIL'} {self.label} | {details}", file=sys.__stdout__, flush=True)
        return ok


def criterion_1():
    c = Criterion("1 geometry closure")
    hb, og = HbarGeometry(), OpticalCavityGeometry()
    fsr = acoustic_fsr(hb)
    c.check("FSR", rel_err(fsr, 6.04e6) <= 1e-12, f"{fsr / 1e6:.6f} MHz")
    dnu = transverse_mode_spacing(hb)
    c.check("dnu_T", rel_err(dnu, 140e3) <= 0.05, f"{dnu / 1e3:.2f} kHz vs 140 ({rel_err(dnu, 140e3):.1%})")
    w = acoustic_waist(hb, 12.66e9)
    c.check("acoustic waist", rel_err(w, 31e-6) <= 0.10, f"{w * 1e6:.2f} um vs 31 ({rel_err(w, 31e-6):.1%})")
    wo = optical_waist(og)["intensity_radius"]
    c.check("optical radius", rel_err(wo, 39e-6) <= 0.03, f"{wo * 1e6:.2f} um vs 39 ({rel_err(wo, 39e-6):.1%})")
    kappa = cavity_linewidth(og.mean_fsr, og.finesse)
    c.check("kappa", rel_err(kappa, 4e6) <= 0.10, f"{kappa / 1e6:.3f} MHz vs 4 ({rel_err(kappa, 4e6):.1%})")
    return c.finish()


def criterion_2():
    c = Criterion("2 thermal occupation")
    n = thermal_occupation(12.607e9, 13.6)
    c.check("n_th", rel_err(n, 22.4) <= 0.03, f"{n:.3f} vs 22.4 ({rel_err(n, 22.4):.1%})")
    hb = HbarGeometry()
    f, gamma = 12.66e9, 590.0
    w = acoustic_waist(hb, f)
    mode = AcousticMode(2096, 0, f, gamma, w, f / gamma, 7.5e-9)
    fq = coherence_metrics(mode)["fq_product"]
    n7 = thermal_occupation(f, 7.0)
    c.check("fQ", rel_err(fq, 2.7e17) <= 0.02, f"{fq:.4g} Hz vs 2.7e17 ({rel_err(fq, 2.7e17):.1%}), n(7 K)={n7:.2f}")
    return c.finish()


def criterion_3():
    c = Criterion("3 parameter self-consistency")
    p = dyn.SystemParams(eta_ext=0.5)
    n1 = dyn.photons_for_cooperativity(p, 1.0)
    c.check("n_c(C=1)", rel_err(n1, 1.65e7) <= 0.01, f"{n1:.4g}")
    p1 = dyn.power_at_unity_cooperativity(p)
    c.check("P(C=1)", rel_err(p1, 22.8e-6) <= 0.25, f"{p1 * 1e6:.2f} uW vs 22.8 ({rel_err(p1, 22.8e-6):.1%})")
    return c.finish()


def criterion_4():
    c = Criterion("4 linewidth pipeline, 100 seeds")
    cfg = config.load()
    truth_p1 = dyn.power_at_unity_cooperativity(cfg.system_params)
    ok_g, ok_p = 0, 0
    for seed in PAPER_SEEDS:
        *_, reg = cli._fig2_fits(cfg, seed, 1)
        ok_g += abs(reg.gamma0 - cfg.system_params.gamma0) <= 30.0
        ok_p += abs(reg.power_at_unity_C - truth_p1) <= 1.2e-6
    n = len(PAPER_SEEDS)
    c.check("gamma0 +/-30 Hz", ok_g >= 0.9 * n, f"{ok_g}/{n}")
    c.check("P1 +/-1.2 uW", ok_p >= 0.9 * n, f"{ok_p}/{n}")
    return c.finish()


def _fig3(cfg, seed):
    *_, reg = cli._fig2_fits(cfg, seed, 1)
    sp, sy = cfg.system_params, cfg.synth
    traces = scenario_traces(
        sp, cfg.powers("spontaneous_psd"), "spontaneous_psd", seed, first_stream=cli.PSD_STREAMS,
        averages=sy["psd_averages"], background=sy["psd_background"], noisy=sy["noisy"],
    )
    return reg, traces, an.build_cooling_table(traces, sp, reg)


def criterion_5():
    c = Criterion("5 cooling pipeline")
    quiet = config.from_mapping({"defaults": "paper", "synth": {"noisy": False}})
    reg, traces, table = _fig3(quiet, 0)
    final = table[-1]
    c.check("C at 1.3 mW", rel_err(final.cooperativity, 57.0) <= 0.01, f"{final.cooperativity:.2f}")
    for key in ("occupation_from_linewidth", "occupation_from_area"):
        v = getattr(final, key)
        c.check(f"noiseless {key}", rel_err(v, 0.386) <= 0.01, f"{v:.4f}")
    fits = [(r.transmitted_power, an.fit_lorentzian(t)) for r, t in zip(table, traces)]
    _, rows = an.area_trend(fits, reg.c_model)
    worst = max(abs(a - m) / m for _, a, m in rows)
    c.check("area trend", worst < 0.02, f"max residual {worst:.2e}")

    noisy = config.load()
    finals = [_fig3(noisy, s)[2][-1] for s in range(20)]
    worst_n = max(max(f.occupation_from_linewidth, f.occupation_from_area) for f in finals)
    c.check("noisy < 0.45 (20 seeds)", worst_n < 0.45, f"max {worst_n:.3f}")
    return c.finish()


def criterion_6():
    c = Criterion("6 oracle suites")
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(20):
        a, b = rng.uniform(20e-6, 45e-6, 2)
        if rng.random() < 0.3:
            b = a
        d, m = rng.uniform(0, 15e-6), int(rng.integers(0, 6))
        worst = max(worst, abs(transverse_overlap(AlignmentState(d, a, b), m) - overlap_by_quadrature(d, a, b, m)))
    c.check("overlap", worst <= 1e-6, f"{worst:.1e}")

    hb = HbarGeometry()
    fsr = acoustic_fsr(hb)
    freqs = 12.6e9 + rng.uniform(-5 * fsr, 5 * fsr, 20)
    env = max(abs(phase_match_envelope(f, 12.6e9, hb) - envelope_by_integral(f, 12.6e9, hb)) for f in freqs)
    c.check("phase match", env <= 1e-6, f"{env:.1e}")

    og = OpticalCavityGeometry()
    center = 194.06e12
    modes = resonance_spectrum(og, 40e9, center)
    ref = dense_scan_roots(og, center - 20e9, center + 20e9, 20e3)
    same = len(modes) == len(ref)
    err = np.max(np.abs(np.array([m.frequency for m in modes]) - ref)) if same else math.inf
    c.check("optical resonances", same and err <= 1e3, f"{err:.2e} Hz over {len(modes)} modes")

    modes_a = mode_spectrum(hb, 12.607e9, 15e6, 600.0, 2)
    f0 = min((m for m in modes_a if m.transverse_order == 0), key=lambda m: abs(m.frequency - 12.607e9)).frequency
    cmap = coupling_map(modes_a, AlignmentState(4e-6, 32.7e-6, 32.7e-6), 6.08, hb, f0)
    params = replace(dyn.SystemParams(), phonon_frequency=f0)
    x = np.unique(np.concatenate([np.linspace(-8e6, 8e6, 401), np.linspace(-20e3, 20e3, 201)]))
    worst = 0.0
    for kind, C in (("red", 5.0), ("blue", 0.7)):
        n_c = dyn.photons_for_cooperativity(params, C)
        fn = dyn.omit_transmission if kind == "red" else dyn.omia_transmission
        model = fn(cmap, params, n_c, x).values
        ref = probe_response_linear_solve(cmap, params, n_c, x, kind)
        worst = max(worst, float(np.max(np.abs(model - ref) / ref)))
    c.check("OMIT/OMIA", worst <= 1e-9, f"{worst:.1e}")
    return c.finish()


def criterion_7():
    c = Criterion("7 invariants")
    xis = np.linspace(0, 20, 41)
    norm = max(abs(sum(poisson_weight(x, m) for m in range(200)) - 1) for x in xis)
    c.check("Poisson norm", norm <= 1e-9, f"{norm:.1e}")

    p = dyn.SystemParams()
    lin = 0.0
    for C in (0.5, 1.0, 2.0, 4.0):
        n_c = dyn.photons_for_cooperativity(p, C)
        width = dyn.effective_linewidth(p, C)
        trace = dyn.omit_transmission(None, p, n_c, detuning_grid(width, 40, 40))
        fit = an.fit_lorentzian(an.cavity_normalized(trace, p.kappa), "dip")
        lin = max(lin, rel_err(fit.fwhm, p.gamma0 * (1 + C)), rel_err(width, p.gamma0 * (1 + C)))
    c.check("Gamma_eff linear", lin <= 1e-3, f"{lin:.1e}")

    Cs = np.concatenate([np.linspace(0, 100, 1001), [57.0, 1e3]])
    alg = max(abs(dyn.steady_state_occupation(p, C) * (1 + C) - p.n_th) / p.n_th for C in Cs)
    c.check("n(1+C)=n_th", alg <= 4e-16, f"{alg:.1e}")

    iff = True
    for C in np.linspace(0, 2, 81):
        for pump in ("red", "blue"):
            try:
                dyn.effective_linewidth(p, C, pump)
                if pump == "blue":
                    dyn.omia_transmission(None, p, dyn.photons_for_cooperativity(p, C), [0.0])
                raised = False
            except SelfOscillation:
                raised = True
            iff &= raised == (pump == "blue" and C >= 1)
    c.check("self-oscillation iff", iff, "blue and C>=1 only")

    powers = [7e-6, 60e-6, 500e-6, 1.3e-3]
    det = True
    for kind in ("omit", "spontaneous_psd"):
        runs = [scenario_traces(p, powers, kind, 3, jobs=j) for j in (1, 4, 1)]
        det &= all(a.identical(b) for r in runs[1:] for a, b in zip(runs[0], r))
    c.check("determinism", det, "jobs 1/4 and replay bitwise equal")
    return c.finish()


def criterion_8():
    c = Criterion("8 selectivity")
    w = 32.7e-6
    cfg = config.from_mapping({"defaults": "paper", "alignment": {"optical_intensity_radius": w, "acoustic_waist": w}})
    text = cli.run_sweep(cfg, cli.parse_grid(["alignment.transverse_offset=0:10e-6:101"]), jobs=2)
    rows = list(csv.DictReader(io.StringIO(text)))
    d = np.array([float(r["alignment.transverse_offset"]) for r in rows])
    db = np.array([float(r["l1_suppression_dB"]) for r in rows])
    i = int(np.flatnonzero((db[:-1] >= 20) & (db[1:] < 20))[0])
    # suppression is linear in log(d) between samples
    t = (db[i] - 20) / (db[i] - db[i + 1])
    crossing = math.exp(math.log(d[i]) + t * (math.log(d[i + 1]) - math.log(d[i])))
    oracle = w * math.sqrt(2 * 10 ** (-20 / 10))
    c.check("20 dB boundary", rel_err(crossing, 4.6e-6) <= 0.02, f"{crossing * 1e6:.4f} um vs 4.6")
    c.check("Poisson oracle", rel_err(crossing, oracle) <= 0.02, f"oracle {oracle * 1e6:.4f} um")
    return c.finish()


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 9)])
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [fn() for fn in CRITERIA]
    sys.exit(0 if all(results) else 1)
