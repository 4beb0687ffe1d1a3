import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import envelope_by_integral, overlap_by_quadrature
from phononlab.coupling import (
    AlignmentState,
    brillouin_frequency,
    coupling_map,
    l1_suppression_db,
    offset_for_suppression,
    phase_match_envelope,
    poisson_weight,
    transverse_overlap,
)
from phononlab.errors import EmptyInput
from phononlab.resonator import HbarGeometry, acoustic_fsr, mode_spectrum

GEOM = HbarGeometry()
W = 32.7e-6


def test_overlap_matches_quadrature_oracle():
    rng = np.random.default_rng(20240611)
    worst = 0.0
    for _ in range(20):
        a = rng.uniform(20e-6, 45e-6)
        b = a if rng.random() < 0.3 else rng.uniform(20e-6, 45e-6)
        d = rng.uniform(0, 15e-6)
        m = int(rng.integers(0, 6))
        got = transverse_overlap(AlignmentState(d, a, b), m)
        worst = max(worst, abs(got - overlap_by_quadrature(d, a, b, m)))
    assert worst <= 1e-6


@given(d=st.floats(0, 40e-6), a=st.floats(20e-6, 45e-6), b=st.floats(20e-6, 45e-6))
@settings(max_examples=25, deadline=None)
def test_overlaps_sum_to_one(d, a, b):
    # Hermite-Gaussians are complete, so the weights over all orders sum to 1
    state = AlignmentState(d, a, b)
    total = sum(transverse_overlap(state, m) for m in range(200))
    assert total == pytest.approx(1.0, abs=1e-9)


@given(xi=st.floats(0, 20))
@settings(max_examples=40, deadline=None)
def test_poisson_normalization(xi):
    assert sum(poisson_weight(xi, m) for m in range(200)) == pytest.approx(1.0, abs=1e-9)


def test_matched_overlap_is_poisson():
    d = 5e-6
    xi = d**2 / (2 * W**2)
    for m in range(5):
        assert transverse_overlap(AlignmentState(d, W, W), m) == pytest.approx(
            math.exp(-xi) * xi**m / math.factorial(m), rel=1e-12
        )


def test_centred_matched_fundamental_is_unity():
    assert transverse_overlap(AlignmentState(0.0, W, W), 0) == 1.0
    assert transverse_overlap(AlignmentState(0.0, W, W), 1) == 0.0


def test_centred_mismatch_has_no_odd_orders():
    s = AlignmentState(0.0, 38.5e-6, W)
    assert transverse_overlap(s, 1) == 0.0
    assert 0 < transverse_overlap(s, 2) < transverse_overlap(s, 0) < 1


def test_phase_match_matches_brute_integral():
    f_b = 12.6e9
    fsr = acoustic_fsr(GEOM)
    rng = np.random.default_rng(7)
    freqs = f_b + np.concatenate([rng.uniform(-5 * fsr, 5 * fsr, 20), fsr * np.arange(-3, 4)])
    for f in freqs:
        assert phase_match_envelope(f, f_b, GEOM) == pytest.approx(envelope_by_integral(f, f_b, GEOM), abs=1e-6)


def test_phase_match_landmarks():
    f_b = 12.6e9
    fsr = acoustic_fsr(GEOM)
    assert phase_match_envelope(f_b, f_b, GEOM) == 1.0
    assert phase_match_envelope(f_b + fsr, f_b, GEOM) == pytest.approx(2 / math.pi, rel=1e-12)
    assert phase_match_envelope(f_b + 2 * fsr, f_b, GEOM) == pytest.approx(0.0, abs=1e-12)


def test_brillouin_estimate():
    assert brillouin_frequency(GEOM) == pytest.approx(2 * 1.53 * 6040 / 1550e-9)


def test_offset_for_20db():
    d = offset_for_suppression(20.0, W)
    assert d == pytest.approx(4.6245e-6, rel=1e-4)
    xi = d**2 / (2 * W**2)
    # L1/L0 power ratio of the Poisson law is xi
    assert 10 * math.log10(1 / xi) == pytest.approx(20.0)


def _map(d, a=W, b=W):
    modes = mode_spectrum(GEOM, 12.607e9, 15e6, 600.0, 2)
    f0 = min((m for m in modes if m.transverse_order == 0), key=lambda m: abs(m.frequency - 12.607e9)).frequency
    return coupling_map(modes, AlignmentState(d, a, b), 6.08, GEOM, f0)


def test_coupling_map_bounds_and_peak():
    cmap = _map(3e-6)
    assert np.all(cmap.rates <= 6.08) and np.all(cmap.rates >= 0)
    mode, g = cmap.strongest(0)
    assert mode.frequency == cmap.brillouin_frequency
    assert g == pytest.approx(6.08 * math.sqrt(math.exp(-(3e-6) ** 2 / (2 * W**2))))


def test_l1_suppression_matches_poisson_ratio():
    cmap = _map(0.0)
    l0 = cmap.strongest(0)[0]
    l1 = [m for m, _ in cmap.family(l0.family_index) if m.transverse_order == 1][0]
    # the L1 mode sits one transverse spacing off the phase-matching peak
    env_db = -20 * math.log10(phase_match_envelope(l1.frequency, l0.frequency, GEOM))
    assert 0 < env_db < 0.01
    for d in (1e-6, 4.6e-6, 9e-6):
        xi = d**2 / (2 * W**2)
        assert l1_suppression_db(_map(d)) == pytest.approx(-10 * math.log10(xi) + env_db, rel=1e-10)
    assert l1_suppression_db(_map(0.0)) == math.inf


def test_coupling_map_errors():
    with pytest.raises(EmptyInput):
        coupling_map([], AlignmentState(0, W, W), 6.08, GEOM)
    with pytest.raises(ValueError):
        AlignmentState(-1e-6, W, W)
    with pytest.raises(EmptyInput):
        _map(0.0).strongest(7)


def test_offset_of_one_waist():
    s = AlignmentState(W, W, W)
    assert transverse_overlap(s, 0) == pytest.approx(0.6065, abs=1e-4)
    assert transverse_overlap(s, 1) == pytest.approx(0.3033, abs=1e-4)
