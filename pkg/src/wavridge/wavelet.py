"""Mother wavelets and their derived constants.

Three kinds are supported:

- ``NEW``: the modified Morlet wavelet with separate real/imaginary weights,
  ``pi^-1/4 exp(-t^2/2) [p (cos(s t) - kappa) + i q sin(s t)]``.
- ``MORLET``: the admissible Morlet wavelet ``pi^-1/4 c_M exp(-t^2/2) (exp(i s t) - kappa)``.
- ``MEXICAN_HAT``: ``sqrt(2/3) pi^-1/4 exp(-t^2/2) (t^2 - 1)``, the ``s -> 0``
  limit of the real part of ``NEW``.

Sign and labelling convention for ``NEW``: ``p`` multiplies the cosine term and
equals ``-(1 + 3 e^{-s^2} - 4 e^{-3 s^2/4})^{-1/2}``, ``q`` multiplies the sine term
and equals ``-(1 - e^{-s^2})^{-1/2}``.  These are the only weights giving unit
norm with equal real/imaginary halves; the common negative sign makes the
real part tend to the Mexican Hat above while the spectrum stays concentrated
on positive frequencies.

Closed-form spectra (:func:`eval_spectrum`) follow the published forms, which
differ from the true Fourier transform ``int exp(-i w t) psi(t) dt`` by a
positive constant, see :data:`SPECTRUM_SCALE`.  The numerical quantities
(:func:`env_variance_numeric`, :func:`mean_freq_numeric`,
:func:`mode_freq_numeric`) are the ones used downstream.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .errors import ContractViolation, NumericalFailure

__all__ = [
    "WaveletKind",
    "MotherWavelet",
    "make_wavelet",
    "SPECTRUM_SCALE",
    "SMALL_SIGMA",
    "eval_wavelet",
    "eval_spectrum",
    "fourier_transform",
    "spectrum_numeric",
    "env_variance_analytic",
    "env_variance_numeric",
    "mean_freq_analytic",
    "mean_freq_numeric",
    "mode_freq_numeric",
    "modality_count",
    "admissibility_constant",
    "tail_radius",
]

PI_M14 = math.pi ** -0.25
SQRT_2_3 = math.sqrt(2.0 / 3.0)

# Below this sigma the NEW-wavelet constants use series expansions.
SMALL_SIGMA = 1e-3
# |psi|^2 is below exp(-72) (times a polynomial) outside this radius.
T_SUPPORT = 12.0
# Spectrum beyond sigma + this margin is below exp(-72).
OMEGA_MARGIN = 12.0


class WaveletKind(str, enum.Enum):
    NEW = "new"
    MORLET = "morlet"
    MEXICAN_HAT = "mexhat"

    @classmethod
    def parse(cls, value) -> "WaveletKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "new": cls.NEW,
            "modified": cls.NEW,
            "morlet": cls.MORLET,
            "mexhat": cls.MEXICAN_HAT,
            "mexicanhat": cls.MEXICAN_HAT,
            "ricker": cls.MEXICAN_HAT,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ContractViolation(f"unknown wavelet kind {value!r}") from None


# True Fourier transform = SPECTRUM_SCALE[kind] * eval_spectrum(...).
SPECTRUM_SCALE = {
    WaveletKind.NEW: math.sqrt(2.0) * math.pi ** 0.25,
    WaveletKind.MORLET: math.sqrt(2.0 * math.pi),
    WaveletKind.MEXICAN_HAT: math.sqrt(2.0) * math.pi ** 0.25,
}


# ---------------------------------------------------------------------------
# constants


_G_SERIES = tuple(
    (3.0 * (-1.0) ** k - 4.0 * (-0.75) ** (k + 2)) / math.factorial(k + 2) for k in range(24)
)


def _g(x):
    """(1 + 3 e^-x - 4 e^-3x/4) / x^2, finite at x = 0."""
    if x < 0.5:
        # direct form cancels to relative error ~ eps / x; the series does not
        total = 0.0
        for c in reversed(_G_SERIES):
            total = total * x + c
        return total
    return (3.0 * math.expm1(-x) - 4.0 * math.expm1(-0.75 * x)) / (x * x)


def _h(x):
    """(1 - e^-x) / x, finite at x = 0."""
    if x < SMALL_SIGMA ** 2:
        return 1.0 - x / 2.0 + x * x / 6.0
    return -math.expm1(-x) / x


def _half_expm1_ratio(x):
    """expm1(-x/2) / x, finite at x = 0."""
    if x < SMALL_SIGMA ** 2:
        return -0.5 + x / 8.0 - x * x / 48.0
    return math.expm1(-0.5 * x) / x


def _check_sigma(sigma, allow_zero=False):
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma < 0 or (sigma == 0 and not allow_zero):
        raise ContractViolation(f"sigma must be positive and finite, got {sigma!r}")
    return sigma


def kappa(sigma):
    """Admissibility offset exp(-sigma^2 / 2)."""
    return math.exp(-0.5 * sigma * sigma)


def new_pq(sigma):
    """Signed weights (p, q) of the NEW wavelet; both -inf at sigma = 0."""
    sigma = _check_sigma(sigma, allow_zero=True)
    if sigma == 0.0:
        return -math.inf, -math.inf
    x = sigma * sigma
    p = -1.0 / (x * math.sqrt(_g(x)))
    q = -1.0 / (sigma * math.sqrt(_h(x)))
    return p, q


def _new_scaled_pq(sigma):
    # p * sigma^2 and q * sigma: finite for every sigma >= 0
    x = sigma * sigma
    return -1.0 / math.sqrt(_g(x)), -1.0 / math.sqrt(_h(x))


def c_morlet(sigma):
    """Morlet normalisation (1 - 2 e^{-s^2/4} kappa + kappa^2)^{-1/2}."""
    sigma = _check_sigma(sigma)
    x = sigma * sigma
    return (-2.0 * math.expm1(-0.75 * x) + math.expm1(-x)) ** -0.5


def printed_pq(sigma):
    """Weights exactly as tabulated in the source (positive roots, original labels).

    Only used to evaluate the published closed forms verbatim; note the
    labels are swapped relative to the roles in :func:`eval_wavelet`.
    """
    p, q = new_pq(sigma)
    return -q, -p


# ---------------------------------------------------------------------------
# the wavelet type


@dataclass(frozen=True)
class MotherWavelet:
    """A mother wavelet with its cached constants.

    ``p``/``q`` are NaN except for NEW, ``c_morlet`` is NaN except for MORLET.
    ``env_variance`` (sigma_psi^2) and ``mean_freq`` (omega_psi) are the
    numerical values.
    """

    kind: WaveletKind
    sigma: float
    kappa: float = field(init=False, compare=False)
    p: float = field(init=False, compare=False)
    q: float = field(init=False, compare=False)
    c_morlet: float = field(init=False, compare=False)
    env_variance: float = field(init=False, compare=False)
    mean_freq: float = field(init=False, compare=False)

    def __post_init__(self):
        kind = WaveletKind.parse(self.kind)
        if kind is WaveletKind.MEXICAN_HAT:
            sigma = 0.0
        else:
            sigma = _check_sigma(self.sigma, allow_zero=kind is WaveletKind.NEW)
        setter = object.__setattr__.__get__(self)
        setter("kind", kind)
        setter("sigma", sigma)
        setter("kappa", kappa(sigma))
        if kind is WaveletKind.NEW:
            p, q = new_pq(sigma)
        else:
            p = q = math.nan
        setter("p", p)
        setter("q", q)
        setter("c_morlet", c_morlet(sigma) if kind is WaveletKind.MORLET else math.nan)
        setter("env_variance", env_variance_numeric(sigma, kind))
        setter("mean_freq", mean_freq_numeric(sigma, kind))

    @classmethod
    def new(cls, sigma):
        return cls(WaveletKind.NEW, sigma)

    @classmethod
    def morlet(cls, sigma):
        return cls(WaveletKind.MORLET, sigma)

    @classmethod
    def mexican_hat(cls):
        return cls(WaveletKind.MEXICAN_HAT, 0.0)

    @property
    def env_std(self):
        return math.sqrt(self.env_variance)

    @property
    def mode_freq(self):
        return mode_freq_numeric(self.sigma, self.kind)

    def __call__(self, t):
        return eval_wavelet(self, t)


def make_wavelet(kind="new", sigma=1.0) -> MotherWavelet:
    return MotherWavelet(WaveletKind.parse(kind), sigma)


def _coerce(w_or_kind, sigma=None):
    if isinstance(w_or_kind, MotherWavelet):
        return w_or_kind.kind, w_or_kind.sigma
    return WaveletKind.parse(w_or_kind), sigma


# ---------------------------------------------------------------------------
# time and frequency domain evaluation


def _eval_raw(kind, sigma, t):
    t = np.asarray(t, dtype=float)
    env = PI_M14 * np.exp(-0.5 * t * t)
    if kind is WaveletKind.NEW:
        x = sigma * sigma
        g = math.sqrt(_g(x))
        h = math.sqrt(_h(x))
        # cos(st) - kappa = -2 sin^2(st/2) - expm1(-x/2), divided by x
        sinc_half = np.sinc(sigma * t / (2.0 * math.pi))
        real = (0.5 * t * t * sinc_half * sinc_half + _half_expm1_ratio(x)) / g
        imag = -t * np.sinc(sigma * t / math.pi) / h
        return env * (real + 1j * imag)
    if kind is WaveletKind.MORLET:
        c = c_morlet(sigma)
        return env * c * (np.exp(1j * sigma * t) - kappa(sigma))
    return (SQRT_2_3 * env * (t * t - 1.0)).astype(complex)


def eval_wavelet(w, t, sigma=None):
    """psi(t) for a :class:`MotherWavelet` (or ``kind, sigma``); vectorised."""
    kind, sigma = _coerce(w, sigma)
    out = _eval_raw(kind, sigma, t)
    return out if np.ndim(t) else complex(out)


def _shc(z):
    # sinh(z)/z with the removable singularity filled in
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = np.sinh(z[nz]) / z[nz]
    return out


def _spectrum_raw(kind, sigma, omega):
    omega = np.asarray(omega, dtype=float)
    if kind is WaveletKind.NEW:
        x = sigma * sigma
        z = sigma * omega
        out = np.empty_like(omega)
        small = np.abs(z) <= 30.0
        if np.any(small):
            ps, qs = _new_scaled_pq(sigma)
            om = omega[small]
            zs = z[small]
            sh = _shc(0.5 * zs)
            out[small] = np.exp(-0.5 * (x + om * om)) * (
                0.5 * ps * om * om * sh * sh + qs * om * _shc(zs)
            )
        if np.any(~small):
            # exponents combined before exponentiating: no overflow for large s*w
            p, q = new_pq(sigma)
            om = omega[~small]
            gm = np.exp(-0.5 * (om - sigma) ** 2)
            g0 = np.exp(-0.5 * (x + om * om))
            gp = np.exp(-0.5 * (om + sigma) ** 2)
            out[~small] = 0.5 * (p * (gm - 2.0 * g0 + gp) + q * (gm - gp))
        return out.astype(complex)
    if kind is WaveletKind.MORLET:
        c = c_morlet(sigma)
        val = PI_M14 * c * (np.exp(-0.5 * (omega - sigma) ** 2) - kappa(sigma) * np.exp(-0.5 * omega * omega))
        return val.astype(complex)
    return (-SQRT_2_3 * omega * omega * np.exp(-0.5 * omega * omega)).astype(complex)


def eval_spectrum(w, omega, sigma=None):
    """Closed-form spectrum in the published normalisation.

    Multiply by ``SPECTRUM_SCALE[kind]`` to get ``int exp(-i w t) psi(t) dt``.
    """
    kind, sigma = _coerce(w, sigma)
    out = _spectrum_raw(kind, sigma, omega)
    return out if np.ndim(omega) else complex(out)


def fourier_transform(w, omega, sigma=None):
    """True Fourier transform ``int exp(-i w t) psi(t) dt`` from the closed form."""
    kind, sigma = _coerce(w, sigma)
    return SPECTRUM_SCALE[kind] * eval_spectrum(kind, omega, sigma)


def _time_grid(sigma, omega_max):
    # trapezoid aliasing error ~ exp(-(2 pi / h - k)^2 / 2), k <= sigma + omega_max
    h = min(0.05, 2.0 * math.pi / (sigma + omega_max + 40.0))
    n = int(math.ceil(T_SUPPORT / h))
    return np.arange(-n, n + 1) * (T_SUPPORT / n), T_SUPPORT / n


def spectrum_numeric(w, omega, sigma=None):
    """Fourier transform of :func:`eval_wavelet` by trapezoidal quadrature.

    The integrand is a Gaussian times trigonometric terms, for which the
    trapezoid rule converges geometrically.
    """
    kind, sigma = _coerce(w, sigma)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    t, h = _time_grid(sigma, float(np.max(np.abs(omega))) if omega.size else 0.0)
    psi = _eval_raw(kind, sigma, t) * h
    out = np.empty(omega.shape, dtype=complex)
    flat_in = omega.ravel()
    flat_out = out.ravel()
    chunk = max(1, 2_000_000 // t.size)
    for start in range(0, flat_in.size, chunk):
        om = flat_in[start:start + chunk]
        flat_out[start:start + chunk] = np.exp(-1j * np.outer(om, t)) @ psi
    return out


# ---------------------------------------------------------------------------
# envelope variance


def env_variance_analytic(sigma):
    """Published closed form for sigma_psi^2, evaluated verbatim.

    Uses the tabulated weights as printed (see :func:`printed_pq`).  It tends
    to sqrt(pi)/4 for large sigma, whereas the actual variance of |psi|^2
    tends to 1/2; :func:`env_variance_numeric` is the value used downstream.
    """
    sigma = _check_sigma(sigma)
    p, q = printed_pq(sigma)
    x = sigma * sigma
    e1 = math.exp(-x)
    e34 = math.exp(-0.75 * x)
    return 0.25 * math.sqrt(math.pi) * (
        q * q * ((2.0 * x - 1.0) * e1 + 1.0)
        + p * p * ((3.0 - 2.0 * x) * e1 - 2.0 * e34 * (2.0 - x))
    )


def _quad(func, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(func, a, b, **kw)
        except integrate.IntegrationWarning as exc:
            raise NumericalFailure(f"quadrature on [{a}, {b}] did not converge: {exc}") from exc
    return val, err


def _piecewise_quad(func, lo, hi, width, **kw):
    edges = np.linspace(lo, hi, max(2, int(math.ceil((hi - lo) / width)) + 1))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += _quad(func, a, b, **kw)[0]
    return total


@lru_cache(maxsize=512)
def _env_moments(kind, sigma):
    def dens(t):
        v = _eval_raw(kind, sigma, t)
        return v.real * v.real + v.imag * v.imag

    width = min(1.0, 8.0 * math.pi / max(sigma, 1e-12))
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    norm = _piecewise_quad(dens, -T_SUPPORT, T_SUPPORT, width, **opts)
    second = _piecewise_quad(lambda t: t * t * dens(t), -T_SUPPORT, T_SUPPORT, width, **opts)
    return norm, second


def env_variance_numeric(sigma, kind=WaveletKind.NEW):
    """Variance of the density |psi|^2 / int |psi|^2 by adaptive quadrature.

    For the unit-norm NEW and MORLET wavelets this is int t^2 |psi|^2 dt.
    """
    kind = WaveletKind.parse(kind)
    if kind is WaveletKind.MEXICAN_HAT:
        sigma = 0.0
    else:
        sigma = _check_sigma(sigma, allow_zero=kind is WaveletKind.NEW)
    norm, second = _env_moments(kind, sigma)
    return second / norm


# ---------------------------------------------------------------------------
# characteristic frequency


def mean_freq_analytic(sigma):
    """Published closed form sqrt(pi) s p q (1 - e^{-3 s^2/4}), evaluated stably.

    Tends to sqrt(pi) * sigma for large sigma; the numerical mean tends to sigma.
    """
    sigma = _check_sigma(sigma)
    x = sigma * sigma
    # s p q (1 - e^{-3x/4}) = (1/sqrt(h)) * (-expm1(-3x/4)/x) / sqrt(g)
    ratio = 0.75 - 9.0 * x / 32.0 if x < SMALL_SIGMA ** 2 else -math.expm1(-0.75 * x) / x
    return math.sqrt(math.pi) * ratio / math.sqrt(_h(x) * _g(x))


@lru_cache(maxsize=512)
def _mean_freq(kind, sigma):
    hi = sigma + OMEGA_MARGIN

    def power(om):
        v = spectrum_numeric(kind, om, sigma)[0]
        return v.real * v.real + v.imag * v.imag

    # integrals are O(1); the absolute floor covers the round-off-level w < 0 lobe
    opts = dict(epsabs=1e-13, epsrel=1e-11, limit=400)
    # the real Mexican Hat has an even spectrum: average over w > 0 only
    lo = 0.0 if kind is WaveletKind.MEXICAN_HAT else -hi
    pieces = [(lo, 0.0), (0.0, hi)] if lo < 0 else [(0.0, hi)]
    num = den = 0.0
    for a, b in pieces:
        den += _quad(power, a, b, **opts)[0]
        num += _quad(lambda om: om * power(om), a, b, **opts)[0]
    if not den > 0:
        raise NumericalFailure("spectrum has no mass")
    return num / den


def mean_freq_numeric(sigma, kind=WaveletKind.NEW):
    """Mean angular frequency int w |psi_hat|^2 / int |psi_hat|^2.

    The average runs over the whole frequency axis (the domain on which the
    closed form of :func:`mean_freq_analytic` is an exact mean), except for
    the real Mexican Hat whose even spectrum is averaged over w > 0.  The
    spectrum comes from :func:`spectrum_numeric`.
    """
    kind = WaveletKind.parse(kind)
    if kind is WaveletKind.MEXICAN_HAT:
        sigma = 0.0
    else:
        sigma = _check_sigma(sigma, allow_zero=kind is WaveletKind.NEW)
    return _mean_freq(kind, sigma)


@lru_cache(maxsize=512)
def _mode_freq(kind, sigma):
    hi = sigma + OMEGA_MARGIN
    grid = np.linspace(0.0, hi, 6001)[1:]
    power = np.abs(eval_spectrum(kind, grid, sigma)) ** 2
    i = int(np.argmax(power))
    i = min(max(i, 1), grid.size - 2)

    def neg_power(om):
        return -abs(eval_spectrum(kind, om, sigma)) ** 2

    res = optimize.minimize_scalar(
        neg_power,
        bracket=(grid[i - 1], grid[i], grid[i + 1]),
        method="golden",
        options={"xtol": 1e-11},
    )
    return float(res.x)


def mode_freq_numeric(sigma, kind=WaveletKind.NEW):
    """Position of the highest peak of |psi_hat|^2 on w > 0.

    Grid scan followed by golden-section refinement.
    """
    kind = WaveletKind.parse(kind)
    if kind is WaveletKind.MEXICAN_HAT:
        sigma = 0.0
    else:
        sigma = _check_sigma(sigma, allow_zero=kind is WaveletKind.NEW)
    return _mode_freq(kind, sigma)


# ---------------------------------------------------------------------------
# shape diagnostics


def modality_count(w, sigma=None, half_width=8.0, step=1e-3):
    """Number of strict local maxima of |psi|^2 on a uniform grid.

    Runs of equal samples (plateaus) count as one point.
    """
    kind, sigma = _coerce(w, sigma)
    n = int(round(half_width / step))
    t = np.arange(-n, n + 1) * step
    v = _eval_raw(kind, sigma, t)
    y = v.real * v.real + v.imag * v.imag
    keep = np.concatenate(([True], np.diff(y) != 0))
    y = y[keep]
    if y.size < 3:
        return 0
    peaks = (y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])
    return int(np.count_nonzero(peaks))


@lru_cache(maxsize=512)
def _admissibility(kind, sigma):
    def dens(om):
        v = fourier_transform(kind, om, sigma)
        return (v.real * v.real + v.imag * v.imag) / abs(om)

    hi = sigma + OMEGA_MARGIN
    opts = dict(epsabs=1e-13, epsrel=1e-10, limit=400)
    pos = _quad(dens, 0.0, hi, **opts)[0]
    neg = _quad(dens, -hi, 0.0, **opts)[0]
    return pos, neg


def admissibility_constant(w, sigma=None):
    """(C+, C-): integrals of |psi_hat(w)|^2 / |w| over w > 0 and w < 0."""
    kind, sigma = _coerce(w, sigma)
    return _admissibility(kind, sigma)


@lru_cache(maxsize=512)
def _tail_radius(kind, sigma, mass):
    norm, _ = _env_moments(kind, sigma)

    def dens(t):
        v = _eval_raw(kind, sigma, t)
        return v.real * v.real + v.imag * v.imag

    def excess(d):
        return _quad(dens, d, T_SUPPORT, epsabs=0.0, epsrel=1e-10, limit=200)[0] / norm - mass

    return float(optimize.brentq(excess, 0.0, T_SUPPORT, xtol=1e-10))


def tail_radius(w, mass=1e-3):
    """Distance d with a one-sided fraction ``mass`` of |psi|^2 beyond d."""
    return _tail_radius(w.kind, w.sigma, float(mass))
