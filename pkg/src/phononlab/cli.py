"""
``phonon-lab`` command-line entry point.

Commands
--------
design     geometry, mode and coupling report as JSON on stdout
reproduce  fig2 (linewidth vs power) or fig3 (cooling) pipeline to files
sweep      Cartesian parameter grid of scalar outputs to CSV

Exit codes: 0 success, 2 physics or invariant failure, 64 usage, 65 config.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import math
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import analysis, config, coupling, dynamics, optcavity, resonator, specsynth
from .errors import ConfigError, EmptyGrid, PhononLabError

EXIT_OK = 0
EXIT_PHYSICS = 2
EXIT_USAGE = 64
EXIT_CONFIG = 65

FIGURES = ("fig2", "fig3")
# disjoint noise streams per measurement series of one seed
OMIT_STREAMS, OMIA_STREAMS, PSD_STREAMS = 0, 1000, 2000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- design ------------------------------------------------------------------


def _acoustic_modes(cfg: config.ScenarioConfig):
    ac = cfg.acoustic
    return resonator.mode_spectrum(
        cfg.hbar_geometry,
        center=cfg.system_params.phonon_frequency,
        span=ac["span"],
        gamma0=ac["gamma0"],
        max_transverse=ac["max_transverse"],
        mass_convention=ac["mass_convention"],
    )


def _coupling(cfg: config.ScenarioConfig, modes=None) -> coupling.CouplingMap:
    modes = modes if modes is not None else _acoustic_modes(cfg)
    f_b = cfg.brillouin_frequency
    if f_b is None:
        # centre the phase-matching envelope on the addressed fundamental
        f0 = cfg.system_params.phonon_frequency
        f_b = min((m for m in modes if m.transverse_order == 0), key=lambda m: abs(m.frequency - f0)).frequency
    return coupling.coupling_map(modes, cfg.alignment, cfg.reference_g0, cfg.hbar_geometry, f_b)


def design_report(cfg: config.ScenarioConfig) -> Dict:
    """Aggregate geometry, optical pair and coupling results into one mapping."""
    hb, og, sp = cfg.hbar_geometry, cfg.optical_geometry, cfg.system_params
    ms = cfg.mode_search
    modes = _acoustic_modes(cfg)
    cmap = _coupling(cfg, modes)
    addressed, g_addr = cmap.strongest(0)
    spectrum = optcavity.resonance_spectrum(og, ms["span"], ms["center"])
    pair = optcavity.find_operating_pair(spectrum, sp.phonon_frequency, ms["pair_tolerance"], ms["min_suppression"])
    try:
        l1_db = coupling.l1_suppression_db(cmap, addressed.family_index)
    except PhononLabError:
        l1_db = None
    waist = resonator.acoustic_waist(hb, sp.phonon_frequency)
    return {
        "acoustic": {
            "fsr_Hz": resonator.acoustic_fsr(hb),
            "transverse_spacing_Hz": resonator.transverse_mode_spacing(hb),
            "waist_m": waist,
            "motional_mass_kg": resonator.motional_mass(hb, waist, cfg.acoustic["mass_convention"]),
            "thermal_occupation": resonator.thermal_occupation(sp.phonon_frequency, cfg.acoustic["temperature"]),
            "brillouin_frequency_estimate_Hz": coupling.brillouin_frequency(hb),
            "modes_in_window": len(modes),
        },
        "optical": {
            "mean_fsr_Hz": og.mean_fsr,
            "finesse": og.finesse,
            "kappa_empty_Hz": optcavity.cavity_linewidth(og.mean_fsr, og.finesse),
            "waist": optcavity.optical_waist(og),
            "resonances_in_window": len(spectrum),
        },
        "operating_pair": {
            "red_Hz": pair.red.frequency,
            "blue_Hz": pair.blue.frequency,
            "red_linewidth_Hz": pair.red.linewidth,
            "blue_linewidth_Hz": pair.blue.linewidth,
            "spacing_Hz": pair.pair_spacing,
            "spacing_error_Hz": pair.pair_spacing - sp.phonon_frequency,
            "stokes_suppression": pair.stokes_suppression,
        },
        "coupling": {
            "brillouin_frequency_Hz": cmap.brillouin_frequency,
            "addressed_mode": addressed.label,
            "addressed_frequency_Hz": addressed.frequency,
            "addressed_g0_Hz": g_addr,
            "l1_suppression_dB": l1_db,
            "alignment": {
                "transverse_offset_m": cfg.alignment.transverse_offset,
                "optical_intensity_radius_m": cfg.alignment.optical_intensity_radius,
                "acoustic_waist_m": cfg.alignment.acoustic_waist,
            },
            "modes": [{"label": m.label, "frequency_Hz": m.frequency, "g0_Hz": g} for m, g in cmap.entries],
        },
        "drive": {
            "eta_ext": sp.eta_ext,
            "power_at_unity_C_W": dynamics.power_at_unity_cooperativity(sp),
            "photons_at_unity_C": dynamics.photons_for_cooperativity(sp, 1.0),
        },
        "_spectrum": spectrum,
        "_cmap": cmap,
    }


def _public(report: Dict) -> Dict:
    return {k: v for k, v in report.items() if not k.startswith("_")}


# -- reproduce ---------------------------------------------------------------


class _Outputs:
    """Tracks files written into one output directory for the manifest."""

    def __init__(self, root: str):
        self.root = root
        self.files: List[str] = []
        os.makedirs(root, exist_ok=True)

    def path(self, name: str) -> str:
        self.files.append(name)
        return os.path.join(self.root, name)

    def manifest(self, payload: Dict) -> None:
        entries = []
        for name in self.files:
            p = os.path.join(self.root, name)
            if os.path.exists(p):
                with open(p, "rb") as fh:
                    entries.append({"file": name, "sha256": hashlib.sha256(fh.read()).hexdigest()})
        payload = dict(payload, files=entries)
        analysis.write_json(os.path.join(self.root, "manifest.json"), payload)


def _write_traces_csv(path, traces) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["transmitted_power_W", "detuning_Hz", "value", "kind"])
        for t in traces:
            P = repr(float(t.metadata["transmitted_power"]))
            for x, y in zip(t.detunings, t.values):
                w.writerow([P, repr(float(x)), repr(float(y)), t.kind])


def _write_dat(path, header: Sequence[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for r in rows:
            fh.write(" ".join(repr(float(v)) for v in r) + "\n")


def _fig2_fits(cfg, seed, jobs):
    sp, sy = cfg.system_params, cfg.synth
    common = dict(averages=sy["vna_averages"], noise_level=sy["vna_noise_level"], noisy=sy["noisy"], jobs=jobs)
    omit_p, omia_p = cfg.powers("omit"), cfg.powers("omia")
    if not omit_p:
        raise ConfigError("fig2 needs an omit drive", key="drive")
    omit = specsynth.scenario_traces(sp, omit_p, "omit", seed, first_stream=OMIT_STREAMS, **common)
    omia = specsynth.scenario_traces(sp, omia_p, "omia", seed, first_stream=OMIA_STREAMS, **common) if omia_p else []
    f_omit = [analysis.fit_lorentzian(analysis.cavity_normalized(t, sp.kappa), "dip") for t in omit]
    f_omia = [analysis.fit_lorentzian(analysis.cavity_normalized(t, sp.kappa), "peak") for t in omia]
    reg = analysis.fit_linewidth_vs_power(
        [(P, f.fwhm, f.uncertainties["fwhm"]) for P, f in zip(omit_p, f_omit)],
        [(P, f.fwhm, f.uncertainties["fwhm"]) for P, f in zip(omia_p, f_omia)],
    )
    return omit, omia, f_omit, f_omia, reg


def _fig2_summary(cfg, reg):
    sp = cfg.system_params
    n_c1 = dynamics.intracavity_photons(reg.power_at_unity_C, sp)
    g0 = analysis.extract_g0(reg.gamma0, sp.kappa, n_c1)
    return {
        "gamma0_Hz": reg.gamma0,
        "power_at_unity_C_W": reg.power_at_unity_C,
        "g0_Hz": g0,
        "uncertainties": reg.uncertainties,
        "n_points": reg.n_points,
        "weighted": reg.weighted,
        "configured": {
            "gamma0_Hz": sp.gamma0,
            "power_at_unity_C_W": dynamics.power_at_unity_cooperativity(sp),
            "g0_Hz": sp.g0,
        },
    }


def reproduce_fig2(cfg, seed: int, jobs: int, out: _Outputs) -> Dict:
    omit, omia, f_omit, f_omia, reg = _fig2_fits(cfg, seed, jobs)
    _write_traces_csv(out.path("fig2_omit_traces.csv"), omit)
    if omia:
        _write_traces_csv(out.path("fig2_omia_traces.csv"), omia)
    rows = [("omit", t, f) for t, f in zip(omit, f_omit)] + [("omia", t, f) for t, f in zip(omia, f_omia)]
    with open(out.path("fig2_fits.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["measurement", "transmitted_power_W", "center_Hz", "fwhm_Hz", "fwhm_err_Hz", "area", "background"])
        for kind, t, f in rows:
            w.writerow([kind, repr(float(t.metadata["transmitted_power"])), repr(f.center), repr(f.fwhm),
                        repr(f.uncertainties["fwhm"]), repr(f.area), repr(f.background)])
    # OMIA points plotted at negative power, as in the joint regression
    _write_dat(
        out.path("fig2_linewidth.dat"),
        ["signed_power_W", "fwhm_Hz", "fwhm_err_Hz"],
        [(P if k == "omit" else -P, f.fwhm, f.uncertainties["fwhm"])
         for k, t, f in rows for P in [float(t.metadata["transmitted_power"])]],
    )
    with open(out.path("fig2.gp"), "w") as fh:
        fh.write(
            "set xlabel 'signed transmitted power (W)'\n"
            "set ylabel 'linewidth (Hz)'\n"
            f"g0 = {reg.gamma0!r}\nP1 = {reg.power_at_unity_C!r}\n"
            "plot 'fig2_linewidth.dat' using 1:2:3 with yerrorbars title 'fits', "
            "g0*(1+x/P1) title 'regression'\n"
        )
    summary = _fig2_summary(cfg, reg)
    analysis.write_json(out.path("fig2_summary.json"), summary)
    return summary


def reproduce_fig3(cfg, seed: int, jobs: int, out: _Outputs) -> Dict:
    sp, sy = cfg.system_params, cfg.synth
    powers = cfg.powers("spontaneous_psd")
    if not powers:
        raise ConfigError("fig3 needs a spontaneous_psd drive", key="drive")
    # cooperativity calibration comes from the linewidth pipeline on the same seed
    *_, reg = _fig2_fits(cfg, seed, jobs)
    traces = specsynth.scenario_traces(
        sp, powers, "spontaneous_psd", seed, first_stream=PSD_STREAMS, averages=sy["psd_averages"],
        background=sy["psd_background"], noisy=sy["noisy"], jobs=jobs,
    )
    _write_traces_csv(out.path("fig3_psd_traces.csv"), traces)
    table = analysis.build_cooling_table(traces, sp, reg)
    analysis.write_cooling_csv(out.path("fig3_cooling.csv"), table)
    _write_dat(
        out.path("fig3_cooling.dat"),
        ["cooperativity", "n_linewidth", "n_linewidth_err", "n_area", "n_area_err"],
        [(r.cooperativity, r.occupation_from_linewidth, r.uncertainties.get("occupation_from_linewidth", math.nan),
          r.occupation_from_area, r.uncertainties.get("occupation_from_area", math.nan)) for r in table],
    )
    with open(out.path("fig3.gp"), "w") as fh:
        fh.write(
            "set logscale x\nset xlabel 'cooperativity'\nset ylabel 'occupation'\n"
            f"nth = {sp.n_th!r}\n"
            "plot 'fig3_cooling.dat' using 1:2:3 with yerrorbars title 'linewidth', "
            "'' using 1:4:5 with yerrorbars title 'area', nth/(1+x) title 'model'\n"
        )
    final = table[-1]
    summary = {
        "final": {
            "transmitted_power_W": final.transmitted_power,
            "cooperativity": final.cooperativity,
            "occupation_from_linewidth": final.occupation_from_linewidth,
            "occupation_from_area": final.occupation_from_area,
            "error": final.error,
        },
        "calibration": {"gamma0_Hz": reg.gamma0, "power_at_unity_C_W": reg.power_at_unity_C},
        "failed_rows": sum(1 for r in table if not r.ok),
    }
    analysis.write_json(out.path("fig3_summary.json"), summary)
    return summary


# -- sweep -------------------------------------------------------------------


def parse_grid(specs: Sequence[str]) -> List[tuple]:
    """
    ``key=start:stop:num`` (inclusive linspace) or ``key=v1,v2,...``.

    Raises
    ------
    EmptyGrid
        No axis given or an axis with no values.
    """
    if not specs:
        raise EmptyGrid("sweep needs at least one --grid axis")
    axes = []
    for s in specs:
        key, sep, rhs = s.partition("=")
        if not sep or not key:
            raise UsageError(f"bad grid spec {s!r}; expected key=start:stop:num or key=v1,v2")
        try:
            if ":" in rhs:
                start, stop, num = rhs.split(":")
                values = [float(v) for v in np.linspace(float(start), float(stop), int(num))]
            else:
                values = [json.loads(v) for v in rhs.split(",") if v.strip()]
        except ValueError as exc:
            raise UsageError(f"bad grid spec {s!r}: {exc}") from None
        if not values:
            raise EmptyGrid(f"grid axis {key!r} is empty")
        axes.append((key, values))
    return axes


SWEEP_COLUMNS = (
    "acoustic_fsr_Hz",
    "transverse_spacing_Hz",
    "acoustic_waist_m",
    "addressed_g0_Hz",
    "l1_suppression_dB",
    "power_at_unity_C_W",
    "max_cooperativity",
    "final_occupation",
)


def _sweep_cell(raw: Dict) -> List[str]:
    try:
        cfg = config.build(raw)
        hb, sp = cfg.hbar_geometry, cfg.system_params
        cmap = _coupling(cfg)
        mode, g = cmap.strongest(0)
        try:
            l1 = coupling.l1_suppression_db(cmap, mode.family_index)
        except PhononLabError:
            l1 = math.nan
        p_max = max(cfg.powers("omit") + cfg.powers("spontaneous_psd") or [0.0])
        c_max = float(dynamics.cooperativity(sp, dynamics.intracavity_photons(p_max, sp)))
        values = [
            resonator.acoustic_fsr(hb),
            resonator.transverse_mode_spacing(hb),
            resonator.acoustic_waist(hb, sp.phonon_frequency),
            g,
            l1,
            dynamics.power_at_unity_cooperativity(sp),
            c_max,
            float(dynamics.steady_state_occupation(sp, c_max)),
        ]
        return [repr(float(v)) for v in values] + [""]
    except (PhononLabError, ValueError) as exc:
        return ["nan"] * len(SWEEP_COLUMNS) + [f"{type(exc).__name__}: {exc}"]


def run_sweep(cfg: config.ScenarioConfig, axes, jobs: int = 1) -> str:
    """CSV text, one row per grid cell in lexicographic order of the axes."""
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")
    cells = list(itertools.product(*[vals for _, vals in axes]))
    raws = []
    for combo in cells:
        raw = cfg.raw
        for (key, _), v in zip(axes, combo):
            raw = config.set_path(raw, key, v)
        raws.append(raw)
    if jobs == 1:
        rows = [_sweep_cell(r) for r in raws]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, raws, chunksize=max(1, len(raws) // (4 * jobs))))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([k for k, _ in axes] + list(SWEEP_COLUMNS) + ["error"])
    for combo, row in zip(cells, rows):
        w.writerow([json.dumps(v) for v in combo] + row)
    return buf.getvalue()


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario file; omitted means the paper preset")
    common.add_argument("--seed", type=int, help="override synth.seed")
    common.add_argument("--jobs", type=int, default=1, help="worker count")
    common.add_argument("--out", help=f"output directory (overrides ${config.OUTPUT_ENV} and the config)")

    p = _Parser(prog="phonon-lab", description="Brillouin cavity optomechanics design and simulation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("design", parents=[common], help="geometry and coupling report")
    rp = sub.add_parser("reproduce", parents=[common], help="figure pipelines")
    rp.add_argument("figure", choices=FIGURES)
    sw = sub.add_parser("sweep", parents=[common], help="parameter grid")
    sw.add_argument("--grid", action="append", default=[], metavar="KEY=SPEC",
                    help="dotted config key with start:stop:num or v1,v2,...; repeatable")
    return p


def _load(args) -> config.ScenarioConfig:
    cfg = config.load(args.config)
    if args.seed is not None:
        cfg = config.build(config.set_path(cfg.raw, "synth.seed", int(args.seed)))
    return cfg


def _dispatch(args) -> int:
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    if args.command == "sweep":
        # validate the grid before touching the config
        axes = parse_grid(args.grid)
    cfg = _load(args)

    if args.command == "design":
        report = design_report(cfg)
        text = json.dumps(_public(report), indent=2, sort_keys=True, default=analysis.json_default)
        print(text)
        if args.out or os.environ.get(config.OUTPUT_ENV):
            out = _Outputs(config.resolve_output_dir(cfg, args.out))
            with open(out.path("design.json"), "w") as fh:
                fh.write(text + "\n")
            optcavity.write_spectrum_csv(out.path("optical_spectrum.csv"), report["_spectrum"])
            coupling.write_coupling_csv(out.path("coupling_map.csv"), report["_cmap"])
        return EXIT_OK

    out = _Outputs(config.resolve_output_dir(cfg, args.out))
    if args.command == "sweep":
        text = run_sweep(cfg, axes, args.jobs)
        with open(out.path("sweep.csv"), "w", newline="") as fh:
            fh.write(text)
        sys.stdout.write(text)
        return EXIT_OK

    seed = cfg.synth["seed"]
    base = {"command": "reproduce", "figure": args.figure, "seed": seed, "config": args.config}
    try:
        fn = reproduce_fig2 if args.figure == "fig2" else reproduce_fig3
        summary = fn(cfg, seed, args.jobs, out)
    except Exception as exc:
        out.manifest(dict(base, status="failed", error=f"{type(exc).__name__}: {exc}"))
        raise
    out.manifest(dict(base, status="ok"))
    print(json.dumps(summary, indent=2, sort_keys=True, default=analysis.json_default))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _dispatch(args)
    except UsageError as exc:
        print(f"phonon-lab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EmptyGrid as exc:
        print(f"phonon-lab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"phonon-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PhononLabError, ValueError) as exc:
        print(f"phonon-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
