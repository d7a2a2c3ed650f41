import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from wavridge.cwt import CwtField, ScaleGrid, SignalSeries, frequency_to_scale, transform
from wavridge.errors import ContractViolation
from wavridge.ridge import (
    Ridge,
    RidgeConfig,
    RidgePoint,
    SignalModel,
    amplitude_track,
    dominant_ridge,
    extract_track,
    freq_from_phase,
    freq_from_scale,
    link_ridges,
    scale_maxima,
    stationary_phase_modulus,
)
from wavridge.wavelet import make_wavelet

DT = 0.005
T = np.arange(-20, 20 + DT / 2, DT)
MID = T.size // 2


def _field(values, sigma, nu_lo, nu_hi, voices=16, kind="new"):
    w = make_wavelet(kind, sigma)
    s = SignalSeries.from_samples(T, values)
    return transform(s, w, ScaleGrid.from_frequencies(w, nu_lo, nu_hi, voices)), w


@pytest.fixture(scope="module")
def tone_field():
    return _field(np.cos(5 * T), 5.0, 0.4, 1.6)


@pytest.fixture(scope="module")
def two_tone_field():
    return _field(np.cos(2 * T) + np.cos(8 * T), 8.0, 0.2, 2.0)


def _crossing(ridges, j):
    return [r for r in ridges if r.b[0] <= T[j] <= r.b[-1]]


def _unflagged_interior(track):
    lo, hi = T[T.size // 4], T[-T.size // 4]
    return (~track.boundary_flag) & (track.b >= lo) & (track.b <= hi)


# --- maxima ----------------------------------------------------------------


def test_tone_single_maximum(tone_field):
    F, w = tone_field
    pts = scale_maxima(F, MID)
    assert len(pts) == 1
    assert abs(math.log(pts[0].a_r) - math.log(w.mean_freq / 5)) < F.grid.log_step
    assert pts[0].b == pytest.approx(T[MID])


def test_two_tones_two_maxima(two_tone_field):
    F, w = two_tone_field
    pts = scale_maxima(F, MID)
    assert len(pts) == 2
    got = sorted(p.a_r for p in pts)
    want = [w.mean_freq / 8, w.mean_freq / 2]
    assert_allclose(np.log(got), np.log(want), atol=F.grid.log_step)


def test_zero_field_has_no_maxima():
    grid = ScaleGrid.log_spaced(0.1, 1.0, 8)
    F = CwtField(grid, 0.0, 0.01, np.zeros((len(grid), 50), dtype=complex), make_wavelet("new", 1.0))
    assert scale_maxima(F, 10) == []
    assert link_ridges(F) == []


def test_maxima_index_checked(tone_field):
    F, _ = tone_field
    with pytest.raises(ContractViolation):
        scale_maxima(F, F.shape[1])


def test_noise_floor_discards_weak_maxima(two_tone_field):
    F, _ = two_tone_field
    assert len(scale_maxima(F, MID, noise_floor=0.5)) == 2
    assert scale_maxima(F, MID, noise_floor=1.01) == []


def test_point_invariants(tone_field):
    F, _ = tone_field
    for p in scale_maxima(F, MID):
        assert F.scales[0] <= p.a_r <= F.scales[-1]
        assert p.modulus >= 0
        assert -math.pi < p.phase <= math.pi


# --- linking ---------------------------------------------------------------


def test_tone_one_ridge_over_interior(tone_field):
    F, _ = tone_field
    ridges = link_ridges(F)
    assert len(ridges) == 1
    r = ridges[0]
    assert r.b[0] <= T[T.size // 4] and r.b[-1] >= T[-T.size // 4]


def test_two_tones_never_merge(two_tone_field):
    F, w = two_tone_field
    ridges = link_ridges(F)
    assert len(_crossing(ridges, MID)) == 2
    lo_a, hi_a = w.mean_freq / 8, w.mean_freq / 2
    split = math.sqrt(lo_a * hi_a)
    for r in _crossing(ridges, MID):
        a = r.a_r
        assert np.all(a < split) or np.all(a > split)


def test_ridges_are_ordered_and_long(two_tone_field):
    F, _ = two_tone_field
    cfg = RidgeConfig(min_length=20)
    for r in link_ridges(F, cfg):
        assert len(r) >= 20
        assert np.all(np.diff(r.b) > 0)


def test_ridge_requires_increasing_b():
    p = RidgePoint(b=1.0, a_r=1.0, modulus=1.0, phase=0.0, boundary_flag=False)
    with pytest.raises(ContractViolation):
        Ridge((p, p))


def test_linking_deterministic(two_tone_field):
    F, _ = two_tone_field
    a, b = link_ridges(F), link_ridges(F)
    assert [r.points for r in a] == [r.points for r in b]


def test_dominant_ridge(tone_field):
    F, _ = tone_field
    ridges = link_ridges(F)
    assert dominant_ridge(ridges) is ridges[0]
    assert dominant_ridge([]) is None


# --- amplitude -------------------------------------------------------------


def test_tone_amplitude(tone_field):
    F, w = tone_field
    track = extract_track(dominant_ridge(link_ridges(F)), F)
    sel = _unflagged_interior(track)
    assert np.all(np.abs(track.amplitude[sel] - 1) < 0.02)


def test_amplitude_scales_linearly(tone_field):
    F1, w = tone_field
    F3, _ = _field(3 * np.cos(5 * T), 5.0, 0.4, 1.6)
    t1 = extract_track(dominant_ridge(link_ridges(F1)), F1)
    t3 = extract_track(dominant_ridge(link_ridges(F3)), F3)
    sel = _unflagged_interior(t3)
    assert np.all(np.abs(t3.amplitude[sel] - 3) < 0.06)
    assert_allclose(t3.amplitude, 3 * t1.amplitude, rtol=1e-6)
    assert_allclose(t3.a_r, t1.a_r, rtol=1e-9)


def test_zero_modulus_zero_amplitude():
    w = make_wavelet("new", 2.0)
    r = Ridge((RidgePoint(0.0, 1.0, 0.0, 0.0, False),))
    assert amplitude_track(r, w) == [(0.0, 0.0)]


def test_empty_ridge_rejected():
    with pytest.raises(ContractViolation):
        amplitude_track(Ridge(()), make_wavelet("new", 1.0))


# --- frequency -------------------------------------------------------------


def test_tone_frequency_from_scale(tone_field):
    F, w = tone_field
    track = extract_track(dominant_ridge(link_ridges(F)), F)
    sel = _unflagged_interior(track)
    assert np.all(np.abs(track.freq_mod[sel] / (5 / (2 * math.pi)) - 1) < 0.01)


def test_tone_frequency_from_phase(tone_field):
    F, w = tone_field
    track = extract_track(dominant_ridge(link_ridges(F)), F)
    sel = _unflagged_interior(track)
    assert np.all(np.abs(track.freq_phase[sel] / (5 / (2 * math.pi)) - 1) < 0.005)


def test_estimators_agree_on_tone(tone_field):
    F, _ = tone_field
    track = extract_track(dominant_ridge(link_ridges(F)), F)
    sel = _unflagged_interior(track)
    assert np.all(np.abs(track.freq_mod[sel] / track.freq_phase[sel] - 1) < 0.05)


def test_frequency_reciprocal_in_scale():
    w = make_wavelet("new", 2.0)
    r1 = Ridge((RidgePoint(0.0, 0.5, 1.0, 0.0, False),))
    r2 = Ridge((RidgePoint(0.0, 1.0, 1.0, 0.0, False),))
    assert freq_from_scale(r2, w)[0][1] == pytest.approx(0.5 * freq_from_scale(r1, w)[0][1], rel=1e-15)
    assert freq_from_scale(r1, w)[0][1] == pytest.approx(w.mean_freq / (2 * math.pi * 0.5))


def _phase_ridge(phases, db=0.1):
    return Ridge(tuple(RidgePoint(k * db, 1.0, 1.0, float(ph), False) for k, ph in enumerate(phases)))


def test_phase_constant_gives_zero():
    nu = [v for _, v in freq_from_phase(_phase_ridge([0.3] * 6))]
    assert_allclose(nu, 0.0, atol=1e-12)


def test_phase_unwraps_across_branch_cut():
    raw = 2.5 * np.arange(20) * 0.1
    wrapped = np.angle(np.exp(1j * raw))
    nu = np.array([v for _, v in freq_from_phase(_phase_ridge(wrapped))])
    assert_allclose(nu, 2.5 / (2 * math.pi), rtol=1e-12)


def test_phase_needs_three_points():
    with pytest.raises(ContractViolation):
        freq_from_phase(_phase_ridge([0.0, 0.1]))


def test_track_arrays_consistent(tone_field):
    F, _ = tone_field
    track = extract_track(dominant_ridge(link_ridges(F)), F)
    n = len(track)
    for arr in track.columns().values():
        assert len(arr) == n
    assert np.all(track.amplitude >= 0)
    assert np.all(track.freq_mod > 0)


def test_ridge_stable_under_noise(tone_field):
    F, w = tone_field
    rng = np.random.default_rng(11)
    # white noise at 1% of the tone's RMS
    noisy = np.cos(5 * T) + 0.01 * math.sqrt(0.5) * rng.standard_normal(T.size)
    Fn, _ = _field(noisy, 5.0, 0.4, 1.6)
    clean = extract_track(dominant_ridge(link_ridges(F)), F)
    rough = extract_track(dominant_ridge(link_ridges(Fn)), Fn)
    common, i, j = np.intersect1d(np.round(clean.b / DT), np.round(rough.b / DT), return_indices=True)
    sel = _unflagged_interior(clean)[i]
    moved = np.abs(np.log(clean.a_r[i][sel]) - np.log(rough.a_r[j][sel])) < F.grid.log_step
    assert moved.mean() >= 0.95


# --- stationary-phase oracle -----------------------------------------------


def _chirp_model():
    return SignalModel(lambda t: 1.0, lambda t: t * t, lambda t: 2 * t, lambda t: 2.0)


def _flat_model(amp=1.3):
    return SignalModel(lambda t: amp, lambda t: 3 * t, lambda t: 3.0, lambda t: 0.0)


def test_oracle_on_ridge_slow_form():
    w = make_wavelet("new", 2.0)
    got = stationary_phase_modulus(w, 0.4, 1.0, _flat_model(), 1.0, simplified=True)
    assert got == pytest.approx((math.pi / 2) ** 0.25 * math.sqrt(w.env_std) * 1.3, rel=1e-14)


def test_oracle_zero_curvature_forms_agree():
    w = make_wavelet("new", 2.0)
    full = stationary_phase_modulus(w, 0.4, 0.7, _flat_model(), 1.0)
    slow = stationary_phase_modulus(w, 0.4, 0.7, _flat_model(), 1.0, simplified=True)
    assert full == slow


def test_oracle_inverts_amplitude_formula():
    w = make_wavelet("new", 1.0)
    mod = stationary_phase_modulus(w, 0.3, 2.0, _flat_model(0.8), 2.0, simplified=True)
    r = Ridge((RidgePoint(2.0, 0.3, mod, 0.0, False),))
    assert amplitude_track(r, w)[0][1] == pytest.approx(0.8, rel=1e-14)


def test_oracle_decays_off_stationary_point():
    w = make_wavelet("new", 1.0)
    on = stationary_phase_modulus(w, 0.3, 2.0, _chirp_model(), 2.0)
    off = stationary_phase_modulus(w, 0.3, 2.0, _chirp_model(), 3.0)
    assert off < on


def test_oracle_matches_transform_on_gentle_chirp():
    # large sigma: the envelope is Gaussian and the oracle should be tight
    w = make_wavelet("new", 5.0)
    t = np.arange(-30, 30, 0.005)
    s = SignalSeries.from_samples(t, np.cos(0.05 * t * t + 4 * t))
    model = SignalModel(lambda x: 1.0, lambda x: 0.05 * x * x + 4 * x, lambda x: 0.1 * x + 4, lambda x: 0.1)
    F = transform(s, w, ScaleGrid.log_spaced(frequency_to_scale(w, 1.0), frequency_to_scale(w, 0.4), 32))
    track = extract_track(dominant_ridge(link_ridges(F)), F)
    sel = (np.abs(track.b) < 10) & ~track.boundary_flag
    pred = [stationary_phase_modulus(w, a, b, model, b) for a, b in zip(track.a_r[sel], track.b[sel])]
    assert_allclose(track.modulus[sel], pred, rtol=0.02)
