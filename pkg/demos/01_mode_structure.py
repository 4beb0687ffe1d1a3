"""
Acoustic and optical mode structure of the default device.

Prints the acoustic ladder near 12.6 GHz, then scans the optical cavity
for the adjacent mode pair whose spacing matches the phonon frequency.
"""

from phononlab.optcavity import OpticalCavityGeometry, find_operating_pair, optical_waist, resonance_spectrum
from phononlab.resonator import (
    HbarGeometry,
    acoustic_fsr,
    acoustic_waist,
    mode_spectrum,
    thermal_occupation,
    transverse_mode_spacing,
)

hbar = HbarGeometry()
print(f"acoustic FSR          {acoustic_fsr(hbar) / 1e6:.3f} MHz")
print(f"transverse spacing    {transverse_mode_spacing(hbar) / 1e3:.1f} kHz")
print(f"waist at 12.607 GHz   {acoustic_waist(hbar, 12.607e9) * 1e6:.1f} um")
print(f"n_th at 13.6 K        {thermal_occupation(12.607e9, 13.6):.2f}")

print("\nacoustic modes within 15 MHz:")
for m in mode_spectrum(hbar, 12.607e9, 15e6, 600.0, max_transverse=2):
    print(f"  n={m.family_index} {m.label}  {m.frequency / 1e9:.6f} GHz")

cavity = OpticalCavityGeometry()
print(f"\noptical finesse {cavity.finesse:.0f}, intensity radius {optical_waist(cavity)['intensity_radius'] * 1e6:.1f} um")

# The slab makes neighbouring spacings vary by ~2 GHz, so only a few
# pairs land near the phonon frequency.
spectrum = resonance_spectrum(cavity, span=200e9, center=194.06e12)
pair = find_operating_pair(spectrum, target=12.607e9, tolerance=1e6)
print(f"operating pair: red {pair.red.frequency / 1e12:.6f} THz, blue {pair.blue.frequency / 1e12:.6f} THz")
print(f"  spacing error {pair.pair_spacing - 12.607e9:+.0f} Hz, Stokes suppression {pair.stokes_suppression:.0f}")
