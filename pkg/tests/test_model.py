import io
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from wavridge.cwt import ScaleGrid, SignalSeries, scale_to_frequency, transform
from wavridge.errors import ContractViolation, InsufficientDataError, ParseError
from wavridge.model import (
    FitResult,
    RrdfInput,
    SignalKind,
    SyntheticSpec,
    fit_constant,
    fit_exponential,
    parse_columns,
    parse_rrdf,
    power_spectrum,
    rrdf_from_density,
    rrdf_signal,
    spectrum_peak,
    synth,
)
from wavridge.ridge import dominant_ridge, extract_track, link_ridges
from wavridge.wavelet import make_wavelet

# --- synthetic signals -----------------------------------------------------


def test_synth_chirp_values():
    s = synth(SyntheticSpec("chirp", -1.0, 1.0, 0.5))
    assert_allclose(s.axis, [-1.0, -0.5, 0.0, 0.5, 1.0])
    assert_allclose(s.values, np.sin(s.axis ** 2), rtol=0, atol=0)
    assert s.values[2] == 0.0


def test_synth_damped_is_causal():
    s = synth(SyntheticSpec("damped", -1.0, 2.0, 0.25))
    assert not np.any(s.values[s.axis < 0])
    assert s.values[s.axis == 0.0][0] == 0.0
    r = 0.25
    assert_allclose(s.values[5], 31.8 * math.exp(-0.35 * r) * math.sin(2 * math.pi * 1.08 * r), rtol=1e-14)
    assert s.axis_label == "r"


def test_synth_tone_amplitude():
    s = synth(SyntheticSpec(SignalKind.TONE, 0.0, 10.0, 0.01, amplitude=2.5, omega=3.0))
    assert_allclose(s.values, 2.5 * np.cos(3.0 * s.axis), atol=1e-15)


def test_signal_kind_aliases_and_errors():
    assert SignalKind.parse("rrdf") is SignalKind.DAMPED
    with pytest.raises(ContractViolation):
        SignalKind.parse("square")
    with pytest.raises(ContractViolation):
        SyntheticSpec("tone", 1.0, 0.0, 0.1)
    with pytest.raises(ContractViolation):
        SyntheticSpec("tone", 0.0, 1.0, 0.0)


# --- RRDF construction -----------------------------------------------------

R = np.arange(0.05, 10.0, 0.05)


def test_uniform_density_gives_zero_rrdf():
    d = rrdf_from_density(RrdfInput("density", R, np.full_like(R, 0.8), rho0=0.8))
    assert not np.any(d.values)


def test_inverse_r_excess_gives_constant():
    c = 1.7
    rho = 0.8 + c / (4 * math.pi * R)
    d = rrdf_from_density(RrdfInput("density", R, rho, rho0=0.8))
    assert_allclose(d.values, c, rtol=1e-12)


def test_rrdf_spot_value():
    rho = 0.8 + 0.1 * np.sin(R)
    d = rrdf_from_density(RrdfInput("density", R, rho, rho0=0.8))
    i = int(np.argmin(np.abs(R - 2.0)))
    assert_allclose(d.values[i], 8 * math.pi * (rho[i] - 0.8), rtol=1e-12)


def test_rrdf_linear_in_density_excess():
    rng = np.random.default_rng(5)
    e1, e2 = rng.standard_normal(R.size), rng.standard_normal(R.size)
    d1 = rrdf_from_density(RrdfInput("density", R, 1 + e1, rho0=1.0)).values
    d2 = rrdf_from_density(RrdfInput("density", R, 1 + e2, rho0=1.0)).values
    d12 = rrdf_from_density(RrdfInput("density", R, 1 + e1 + 3 * e2, rho0=1.0)).values
    assert_allclose(d12, d1 + 3 * d2, rtol=1e-12, atol=1e-12)


def test_rrdf_cut_at_half_box():
    d = rrdf_from_density(RrdfInput("density", R, np.full_like(R, 2.0), rho0=1.0, l_half=5.0))
    assert not np.any(d.values[R >= 5.0])
    assert np.all(d.values[R < 5.0] > 0)


def test_rrdf_rejects_nonuniform_axis():
    r = np.array([0.1, 0.2, 0.4, 0.5])
    with pytest.raises(ContractViolation):
        rrdf_from_density(RrdfInput("density", r, np.ones(4), rho0=1.0))


def test_density_mode_needs_rho0():
    with pytest.raises(ContractViolation):
        RrdfInput("density", R, np.ones_like(R))


def test_reduced_mode_passes_values_through():
    v = np.sin(R)
    s = rrdf_signal(RrdfInput("reduced", R, v))
    assert_allclose(s.values, v)
    assert s.dt == pytest.approx(0.05)


# --- parsing ---------------------------------------------------------------


def test_parse_rrdf_header():
    text = "# mode=density rho0=0.85 lhalf=4\nr,rho\n0.1 0.9\n0.2 1.0\n0.3 0.8\n"
    data = parse_rrdf(io.StringIO(text))
    assert data.mode.value == "density"
    assert data.rho0 == 0.85 and data.l_half == 4.0
    assert_allclose(data.r, [0.1, 0.2, 0.3])


def test_parse_defaults_to_reduced():
    data = parse_rrdf(io.StringIO("0.1,1\n0.2,2\n"))
    assert data.mode.value == "reduced"


def test_parse_error_reports_line_number():
    text = "# comment\n0.1 1\n0.2 x\n"
    with pytest.raises(ParseError) as info:
        parse_columns(io.StringIO(text))
    assert info.value.line == 3
    assert str(info.value).startswith("line 3:")


def test_parse_error_on_column_count():
    with pytest.raises(ParseError) as info:
        parse_columns(io.StringIO("1 2\n3 4 5\n"))
    assert info.value.line == 2


def test_parse_error_on_too_few_rows():
    with pytest.raises(ParseError):
        parse_rrdf(io.StringIO("# mode=reduced\n0.1 1\n"))


def test_parse_error_on_bad_mode():
    with pytest.raises(ParseError):
        parse_rrdf(io.StringIO("# mode=weird\n0.1 1\n0.2 2\n"))


# --- power spectrum --------------------------------------------------------


def test_tone_spectrum_peak_within_one_bin():
    s = synth(SyntheticSpec("tone", 0.0, 100.0, 0.01, omega=5.0))
    nu, p = power_spectrum(s)
    assert abs(spectrum_peak(nu, p) - 5 / (2 * math.pi)) <= nu[1] - nu[0]


def test_zero_signal_spectrum_is_zero():
    nu, p = power_spectrum(SignalSeries(0, 0.1, np.zeros(64)))
    assert not np.any(p)
    assert nu[-1] == pytest.approx(5.0)


def test_damped_spectrum_peak_and_width():
    s = synth(SyntheticSpec("damped", 0.005, 25.0, 0.005))
    nu, p = power_spectrum(s)
    peak = spectrum_peak(nu, p)
    assert abs(peak - 1.08) <= 0.01
    half = nu[p >= p.max() / 2]
    # a decaying oscillation has a Lorentzian line of width ~ beta / pi
    assert half.max() - half.min() > 0.05


def test_spectrum_peak_needs_bins():
    with pytest.raises(InsufficientDataError):
        spectrum_peak(np.array([0.0, 1.0]), np.array([1.0, 2.0]), nu_min=5.0)


def test_tone_spectrum_and_cwt_frequency_axes_agree():
    s = synth(SyntheticSpec("tone", -30.0, 30.0, 0.01, omega=4.0))
    nu, p = power_spectrum(s)
    w = make_wavelet("new", 5.0)
    F = transform(s, w, ScaleGrid.from_frequencies(w, 0.3, 1.3, 32))
    col = F.modulus[:, len(s) // 2]
    nu_cwt = scale_to_frequency(w, F.scales[np.argmax(col)])
    assert abs(nu_cwt / spectrum_peak(nu, p) - 1) < 0.02


# --- fits ------------------------------------------------------------------


def test_exponential_fit_exact_data():
    x = np.linspace(0, 10, 50)
    fit = fit_exponential(x, 3.0 * np.exp(-0.4 * x), 0, 10)
    assert_allclose(fit.params["alpha"], 3.0, rtol=1e-10)
    assert_allclose(fit.params["beta"], 0.4, rtol=1e-10)
    assert fit.rms < 1e-12
    assert fit.n_points == 49


def test_exponential_fit_of_constant():
    x = np.linspace(0, 10, 20)
    fit = fit_exponential(x, np.full(20, 2.0), 0, 11)
    assert abs(fit.params["beta"]) < 1e-12


def test_exponential_fit_error_grows_with_noise():
    rng = np.random.default_rng(11)
    x = np.linspace(0, 10, 200)
    clean = np.exp(-0.3 * x)
    small = fit_exponential(x, clean * np.exp(0.01 * rng.standard_normal(200)), 0, 11)
    large = fit_exponential(x, clean * np.exp(0.1 * rng.standard_normal(200)), 0, 11)
    assert large.errors["beta"] > small.errors["beta"] > 0


def test_exponential_fit_needs_points():
    x = np.arange(7.0)
    with pytest.raises(InsufficientDataError):
        fit_exponential(x, np.ones(7), 0, 10)


def test_exponential_fit_needs_positive_amplitude():
    x = np.arange(10.0)
    y = np.ones(10)
    y[3] = 0.0
    with pytest.raises(ContractViolation):
        fit_exponential(x, y, 0, 10)


def test_constant_fit():
    x = np.arange(10.0)
    fit = fit_constant(x, np.full(10, 1.08), 0, 10)
    assert fit.params["value"] == pytest.approx(1.08, abs=1e-15)
    assert fit.errors["value"] == pytest.approx(0.0, abs=1e-15)
    two = fit_constant([0.0, 1.0], [1.0, 1.2], 0, 2)
    assert two.params["value"] == pytest.approx(1.1)
    with pytest.raises(InsufficientDataError):
        fit_constant(x, x, 20, 30)


def test_fit_json_keys():
    fit = fit_constant([0.0, 1.0], [1.0, 1.2], 0, 2)
    assert isinstance(fit, FitResult)
    assert set(fit.to_json()) == {"model", "params", "errors", "range", "rms", "n_points"}
    assert fit.to_json()["range"] == [0.0, 2.0]


# --- full pipeline on a synthetic RRDF ---------------------------------------


@pytest.fixture(scope="module")
def damped():
    return synth(SyntheticSpec("damped", 0.005, 25.0, 0.005))


def _track(signal, sigma):
    w = make_wavelet("new", sigma)
    F = transform(signal, w, ScaleGrid.from_frequencies(w, 0.25, 4.0, 16))
    tr = extract_track(dominant_ridge(link_ridges(F)), F)
    keep = ~tr.boundary_flag
    return tr, keep


def test_pipeline_recovers_frequency(damped):
    tr, keep = _track(damped, 3.0)
    for est in (tr.freq_mod, tr.freq_phase):
        fit = fit_constant(tr.b[keep], est[keep], 5, 18)
        assert abs(fit.params["value"] / 1.08 - 1) < 0.01


def test_pipeline_recovers_decay(damped):
    tr, keep = _track(damped, 2.0)
    fit = fit_exponential(tr.b[keep], tr.amplitude[keep], 5, 18)
    assert abs(fit.params["beta"] / 0.35 - 1) < 0.03
    assert abs(fit.params["alpha"] / 31.8 - 1) < 0.1
