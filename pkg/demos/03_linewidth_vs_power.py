"""
Intrinsic linewidth and power calibration from OMIT and OMIA traces.

Synthesizes noisy transmission traces at each pump power, fits every
feature with a Lorentzian and regresses the widths against power.
"""

from phononlab import analysis, config, dynamics, specsynth

cfg = config.load()  # built-in preset
params = cfg.system_params
omit_p, omia_p = cfg.powers("omit"), cfg.powers("omia")

omit = specsynth.scenario_traces(params, omit_p, "omit", seed=1, noise_level=0.5)
omia = specsynth.scenario_traces(params, omia_p, "omia", seed=1, noise_level=0.5, first_stream=1000)

# Divide out the bare cavity so only the optomechanical feature remains.
fits_omit = [analysis.fit_lorentzian(analysis.cavity_normalized(t, params.kappa), "dip") for t in omit]
fits_omia = [analysis.fit_lorentzian(analysis.cavity_normalized(t, params.kappa), "peak") for t in omia]

for label, powers, fits in (("OMIT", omit_p, fits_omit), ("OMIA", omia_p, fits_omia)):
    for p, f in zip(powers, fits):
        print(f"{label} {p * 1e6:7.1f} uW   width {f.fwhm:9.1f} +/- {f.uncertainties['fwhm']:.1f} Hz")

reg = analysis.fit_linewidth_vs_power(
    [(p, f.fwhm, f.uncertainties["fwhm"]) for p, f in zip(omit_p, fits_omit)],
    [(p, f.fwhm, f.uncertainties["fwhm"]) for p, f in zip(omia_p, fits_omia)],
)
n1 = dynamics.intracavity_photons(reg.power_at_unity_C, params)
print(f"\ngamma0 = {reg.gamma0:.1f} +/- {reg.uncertainties['gamma0']:.1f} Hz")
print(f"P(C=1) = {reg.power_at_unity_C * 1e6:.2f} +/- {reg.uncertainties['power_at_unity_C'] * 1e6:.2f} uW")
print(f"g0     = {analysis.extract_g0(reg.gamma0, params.kappa, n1):.3f} Hz")
