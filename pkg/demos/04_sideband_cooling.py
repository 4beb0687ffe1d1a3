"""
Phonon occupation from spontaneous anti-Stokes spectra.

Uses the same preset as the command-line pipeline: the cooperativity
calibration comes from a linewidth regression, then each PSD trace gives
two occupation estimates.
"""

from phononlab import analysis, config, specsynth

cfg = config.load()
params = cfg.system_params
# exact calibration for brevity; the CLI derives it from OMIT/OMIA fits
reg = analysis.LinewidthRegression(params.gamma0, params.gamma0 / 22.8e-6, 22.8e-6, {}, 0, False)

traces = specsynth.scenario_traces(
    params, cfg.powers("spontaneous_psd"), "spontaneous_psd", seed=2, averages=1000, background=1.0
)
print("  P (uW)      C    n (width)   n (area)   n_th/(1+C)")
for row in analysis.build_cooling_table(traces, params, reg):
    print(
        f"{row.transmitted_power * 1e6:8.1f} {row.cooperativity:6.1f}"
        f"   {row.occupation_from_linewidth:8.3f}   {row.occupation_from_area:8.3f}"
        f"   {params.n_th / (1 + row.cooperativity):8.3f}"
    )
