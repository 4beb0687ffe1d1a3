"""
Design and simulation toolkit for Brillouin cavity optomechanics with
bulk acoustic wave resonators.

Modules
-------
resonator   acoustic mode structure and thermal occupation
optcavity   optical cavity with an intracavity crystal slab
coupling    single-photon coupling map from phase matching and alignment
dynamics    linearized OMIT/OMIA and spontaneous-scattering spectra
specsynth   seeded synthetic measurement traces
analysis    Lorentzian fits, linewidth regression and thermometry
cli         ``phonon-lab`` command-line interface
"""

from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
