"""Continuous wavelet transform with the 1/|a| prefactor.

    F(a, b) = 1/a * int conj(psi((t - b) / a)) f(t) dt

The signal is zero outside its sampled range.  On the sample grid the integral
is a discrete correlation of the samples with the sampled, truncated wavelet,
evaluated either directly or by FFT convolution; both give the same numbers up
to rounding.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import signal as sps

from .errors import ContractViolation, ReconstructionCoverageError, UnderResolvedScaleWarning
from .wavelet import MotherWavelet, admissibility_constant, eval_wavelet, fourier_transform, tail_radius

__all__ = [
    "SignalSeries",
    "ScaleGrid",
    "CwtField",
    "transform",
    "scale_to_frequency",
    "frequency_to_scale",
    "truncation_radius",
    "cone_of_influence",
    "reconstruction_gain",
    "reconstruct",
]

# cone-of-influence threshold: wavelet mass fraction falling outside the data
COI_MASS = 1e-3


@dataclass(frozen=True, eq=False)
class SignalSeries:
    """Uniformly sampled real signal ``values[k]`` at ``t0 + k * dt``."""

    t0: float
    dt: float
    values: np.ndarray
    axis_label: str = "t"
    value_label: str = "f"

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size == 0:
            raise ContractViolation("signal is empty")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ContractViolation(f"dt must be positive, got {self.dt!r}")
        if not math.isfinite(self.t0):
            raise ContractViolation("t0 must be finite")
        if not np.all(np.isfinite(values)):
            raise ContractViolation("signal contains non-finite samples")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))

    @classmethod
    def from_samples(cls, t, values, rtol=1e-6, **labels):
        """Build from an explicit axis, which must be uniform to ``rtol``."""
        t = np.asarray(t, dtype=float)
        if t.size == 0:
            raise ContractViolation("signal is empty")
        if t.size == 1:
            raise ContractViolation("need at least two samples to infer dt")
        steps = np.diff(t)
        dt = (t[-1] - t[0]) / (t.size - 1)
        if dt <= 0 or np.max(np.abs(steps - dt)) > rtol * dt:
            raise ContractViolation("sample axis is not uniform and increasing")
        return cls(float(t[0]), float(dt), values, **labels)

    def __len__(self):
        return self.values.size

    @property
    def axis(self):
        return self.t0 + self.dt * np.arange(self.values.size)

    @property
    def t_end(self):
        return self.t0 + self.dt * (self.values.size - 1)


@dataclass(frozen=True, eq=False)
class ScaleGrid:
    """Strictly increasing positive scales."""

    scales: np.ndarray

    def __post_init__(self):
        scales = np.array(self.scales, dtype=float).ravel()
        if scales.size == 0:
            raise ContractViolation("scale grid is empty")
        if not np.all(np.isfinite(scales)) or np.any(scales <= 0):
            raise ContractViolation("scales must be positive and finite")
        if np.any(np.diff(scales) <= 0):
            raise ContractViolation("scales must be strictly increasing")
        scales.setflags(write=False)
        object.__setattr__(self, "scales", scales)

    @classmethod
    def log_spaced(cls, a_min, a_max, voices=16):
        """Geometric grid with ``voices`` scales per octave, endpoints included."""
        if not 0 < a_min < a_max:
            raise ContractViolation("need 0 < a_min < a_max")
        n = int(math.ceil(voices * math.log2(a_max / a_min))) + 1
        return cls(np.geomspace(a_min, a_max, max(n, 2)))

    @classmethod
    def from_frequencies(cls, w: MotherWavelet, nu_min, nu_max, voices=16):
        """Grid whose frequency axis spans [nu_min, nu_max]."""
        if not 0 < nu_min < nu_max:
            raise ContractViolation("need 0 < nu_min < nu_max")
        return cls.log_spaced(frequency_to_scale(w, nu_max), frequency_to_scale(w, nu_min), voices)

    def __len__(self):
        return self.scales.size

    @property
    def log_step(self):
        """Median spacing in natural-log scale."""
        if self.scales.size < 2:
            return 0.0
        return float(np.median(np.diff(np.log(self.scales))))

    def frequencies(self, w: MotherWavelet):
        return scale_to_frequency(w, self.scales)


@dataclass(frozen=True, eq=False)
class CwtField:
    """Complex transform ``values[scale_index, translation_index]``.

    ``coi`` marks coefficients whose wavelet leaks more than ``COI_MASS`` of
    its energy past either end of the data; ``under_resolved`` flags scales
    too small for the sampling.  Both are None/False when the field was loaded
    without a wavelet.
    """

    grid: ScaleGrid
    b0: float
    db: float
    values: np.ndarray
    wavelet: MotherWavelet | None = None
    coi: np.ndarray | None = None
    under_resolved: np.ndarray | None = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 2 or values.shape[0] != len(self.grid):
            raise ContractViolation(
                f"field shape {values.shape} does not match {len(self.grid)} scales"
            )
        if not np.all(np.isfinite(values)):
            raise ContractViolation("field contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.coi is None and self.wavelet is not None:
            object.__setattr__(
                self, "coi", cone_of_influence(self.wavelet, self.grid, values.shape[1], self.db)
            )
        if self.under_resolved is None:
            flags = np.zeros(len(self.grid), dtype=bool)
            if self.wavelet is not None:
                flags = self.grid.scales < _min_resolved_scale(self.wavelet, self.db)
            object.__setattr__(self, "under_resolved", flags)

    @property
    def shape(self):
        return self.values.shape

    @property
    def scales(self):
        return self.grid.scales

    @property
    def translations(self):
        return self.b0 + self.db * np.arange(self.values.shape[1])

    @cached_property
    def modulus(self):
        return np.abs(self.values)

    @cached_property
    def max_modulus(self):
        return float(self.modulus.max()) if self.values.size else 0.0

    def frequencies(self, w: MotherWavelet | None = None):
        w = w or self.wavelet
        if w is None:
            raise ContractViolation("a wavelet is needed to label the frequency axis")
        return scale_to_frequency(w, self.grid.scales)

    def with_wavelet(self, w: MotherWavelet) -> "CwtField":
        return CwtField(self.grid, self.b0, self.db, self.values, w)


# ---------------------------------------------------------------------------
# scale <-> frequency


def scale_to_frequency(w: MotherWavelet, a):
    """nu = omega_psi / (2 pi a) in cycles per unit of the signal axis."""
    a_arr = np.asarray(a, dtype=float)
    if np.any(~(a_arr > 0)):
        raise ContractViolation("scale must be positive")
    nu = w.mean_freq / (2.0 * math.pi * a_arr)
    return nu if np.ndim(a) else float(nu)


def frequency_to_scale(w: MotherWavelet, nu):
    nu_arr = np.asarray(nu, dtype=float)
    if np.any(~(nu_arr > 0)):
        raise ContractViolation("frequency must be positive")
    a = w.mean_freq / (2.0 * math.pi * nu_arr)
    return a if np.ndim(nu) else float(a)


# ---------------------------------------------------------------------------
# transform


def truncation_radius(w: MotherWavelet):
    """Wavelet support radius in units of the dimensionless wavelet argument."""
    return 7.5 * max(1.0, w.env_std)


def _min_resolved_scale(w: MotherWavelet, dt):
    # four samples per period of the mean frequency, two per envelope width
    return 2.0 * dt * max(w.mean_freq / math.pi, 1.0 / w.env_std)


def _kernel(w: MotherWavelet, a, dt, conjugate):
    """Samples of conj(psi(k dt / a)) for |k dt / a| <= truncation radius."""
    m = int(math.floor(truncation_radius(w) * a / dt))
    u = np.arange(-m, m + 1) * (dt / a)
    psi = eval_wavelet(w, u)
    return (psi if conjugate else np.conj(psi)), m


def _row_fft(f, kernel, m, scale_factor):
    full = sps.fftconvolve(f, kernel[::-1])
    return scale_factor * full[m:m + f.size]


def _row_direct(f, kernel, m, scale_factor):
    rev = kernel[::-1]
    full = np.convolve(f, rev.real) + 1j * np.convolve(f, rev.imag)
    return scale_factor * full[m:m + f.size]


def transform(
    signal: SignalSeries,
    w: MotherWavelet,
    grid: ScaleGrid,
    method="fft",
    workers=None,
    conjugate=False,
) -> CwtField:
    """Compute F(a, b) on ``grid`` x the signal's sample axis.

    Args:
        method: ``"fft"`` (FFT convolution per row) or ``"direct"``
            (explicit trapezoidal sums).
        workers: thread count for row-parallel evaluation; rows are
            independent so the result does not depend on scheduling.
        conjugate: integrate against psi instead of conj(psi).
    """
    if len(signal) == 0:
        raise ContractViolation("signal is empty")
    row = {"fft": _row_fft, "direct": _row_direct}.get(method)
    if row is None:
        raise ContractViolation(f"unknown method {method!r}")
    f = np.asarray(signal.values, dtype=float)
    dt = signal.dt

    def compute(a):
        kernel, m = _kernel(w, a, dt, conjugate)
        return row(f, kernel, m, dt / a)

    scales = grid.scales
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(compute, scales))
    else:
        rows = [compute(a) for a in scales]
    values = np.vstack(rows) if rows else np.zeros((0, f.size), dtype=complex)

    under = scales < _min_resolved_scale(w, dt)
    if np.any(under):
        warnings.warn(
            f"{int(under.sum())} scale(s) below {_min_resolved_scale(w, dt):.4g} are under-resolved",
            UnderResolvedScaleWarning,
            stacklevel=2,
        )
    return CwtField(grid, signal.t0, dt, values, w, under_resolved=under)


def cone_of_influence(w: MotherWavelet, grid: ScaleGrid, n, db):
    """Boolean mask of coefficients contaminated by the data boundaries."""
    d = tail_radius(w, COI_MASS)
    k = np.arange(n)
    dist = np.minimum(k, n - 1 - k) * db
    return dist[None, :] < d * grid.scales[:, None]


# ---------------------------------------------------------------------------
# inversion


def _log_weights(scales):
    # trapezoid weights in ln(a)
    ln = np.log(scales)
    if ln.size == 1:
        return np.ones(1)
    wts = np.empty_like(ln)
    d = np.diff(ln)
    wts[0] = 0.5 * d[0]
    wts[-1] = 0.5 * d[-1]
    wts[1:-1] = 0.5 * (d[:-1] + d[1:])
    return wts


def reconstruction_gain(w: MotherWavelet, grid: ScaleGrid, omega):
    """Fraction of a real sinusoid at angular frequency ``omega`` recovered by
    :func:`reconstruct` on this grid (1 means perfect coverage)."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    cpos, cneg = admissibility_constant(w)
    wts = _log_weights(grid.scales)
    arg = np.outer(omega, grid.scales)
    g = np.abs(fourier_transform(w, arg)) ** 2 + np.abs(fourier_transform(w, -arg)) ** 2
    return (g @ wts) / (cpos + cneg)


def _coverage_gaps(w, grid, threshold):
    nu_lo = scale_to_frequency(w, grid.scales[-1])
    nu_hi = scale_to_frequency(w, grid.scales[0])
    nu = np.geomspace(nu_lo, nu_hi, 512)
    gain = reconstruction_gain(w, grid, 2.0 * math.pi * nu)
    good = gain >= threshold
    if not np.any(good):
        return [(float(nu_lo), float(nu_hi))], nu, gain
    first, last = np.flatnonzero(good)[[0, -1]]
    gaps = []
    start = None
    for i in range(first, last + 1):
        if not good[i] and start is None:
            start = i
        elif good[i] and start is not None:
            gaps.append((float(nu[start - 1]), float(nu[i])))
            start = None
    return gaps, nu, gain


def reconstruct(field: CwtField, w: MotherWavelet | None = None, threshold=0.9) -> SignalSeries:
    """Approximate inverse by the resolution of the identity.

        f(t) = 2/C Re int int F(a, b) psi((t - b) / a) db da / a^2

    with C = int |psi_hat(w)|^2 / |w| dw over the whole axis, and trapezoid
    weights in ln(a).  Only frequencies well inside the grid's span are
    recovered; see :func:`reconstruction_gain`.

    Raises:
        ReconstructionCoverageError: no frequency reaches ``threshold`` gain,
            or the gain dips below it between covered frequencies.
    """
    w = w or field.wavelet
    if w is None:
        raise ContractViolation("reconstruct needs the analysing wavelet")
    grid = field.grid
    gaps, _, _ = _coverage_gaps(w, grid, threshold)
    if gaps:
        bands = ", ".join(f"[{lo:.4g}, {hi:.4g}]" for lo, hi in gaps)
        raise ReconstructionCoverageError(f"scale grid leaves frequency band(s) {bands} uncovered", gaps)

    cpos, cneg = admissibility_constant(w)
    dt = field.db
    wts = _log_weights(grid.scales)
    n = field.shape[1]
    out = np.zeros(n)
    for a, wt, row in zip(grid.scales, wts, field.values):
        if not np.any(row):
            continue
        m = int(math.floor(truncation_radius(w) * a / dt))
        psi = eval_wavelet(w, np.arange(-m, m + 1) * (dt / a))
        full = sps.fftconvolve(row, psi)
        out += (wt / a) * dt * full[m:m + n].real
    out *= 2.0 / (cpos + cneg)
    return SignalSeries(field.b0, dt, out)
