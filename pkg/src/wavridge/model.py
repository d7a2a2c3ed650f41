"""Test signals, RRDF ingestion, Fourier power spectra and track fits."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import stats

from .cwt import SignalSeries
from .errors import ContractViolation, InsufficientDataError, ParseError

__all__ = [
    "SignalKind",
    "SyntheticSpec",
    "RrdfMode",
    "RrdfInput",
    "FitResult",
    "synth",
    "rrdf_from_density",
    "read_rrdf",
    "parse_rrdf",
    "power_spectrum",
    "spectrum_peak",
    "fit_exponential",
    "fit_constant",
    "MIN_EXP_POINTS",
    "rrdf_signal",
    "parse_columns",
]

MIN_EXP_POINTS = 8
PAD_FACTOR = 4


class SignalKind(str, Enum):
    TONE = "tone"
    CHIRP = "chirp"
    DAMPED = "damped_oscillation"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("damped", "rrdf"):
            return cls.DAMPED
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ContractViolation(f"unknown signal kind {value!r} (expected one of {names})") from None


@dataclass(frozen=True)
class SyntheticSpec:
    """Closed-form test signal on a uniform grid.

    ``tone``: amplitude * cos(omega * t).
    ``chirp``: sin(t^2).
    ``damped_oscillation``: alpha * exp(-beta r) * sin(2 pi nu r) for r >= 0, else 0.
    """

    kind: SignalKind
    t_min: float
    t_max: float
    dt: float
    amplitude: float = 1.0
    omega: float = 1.0
    alpha: float = 31.8
    beta: float = 0.350
    nu: float = 1.08

    def __post_init__(self):
        object.__setattr__(self, "kind", SignalKind.parse(self.kind))
        if not self.dt > 0:
            raise ContractViolation(f"dt must be positive, got {self.dt}")
        if not self.t_min < self.t_max:
            raise ContractViolation(f"need t_min < t_max, got {self.t_min}, {self.t_max}")
        if self.beta < 0:
            raise ContractViolation(f"decay rate must be non-negative, got {self.beta}")

    def axis(self):
        n = int(math.floor((self.t_max - self.t_min) / self.dt + 1e-9)) + 1
        return self.t_min + self.dt * np.arange(n)


def synth(spec: SyntheticSpec) -> SignalSeries:
    t = spec.axis()
    if spec.kind is SignalKind.TONE:
        y = spec.amplitude * np.cos(spec.omega * t)
        label = "t"
    elif spec.kind is SignalKind.CHIRP:
        y = np.sin(t * t)
        label = "t"
    else:
        y = np.where(
            t >= 0,
            spec.alpha * np.exp(-spec.beta * np.maximum(t, 0.0)) * np.sin(2.0 * math.pi * spec.nu * t),
            0.0,
        )
        label = "r"
    return SignalSeries(t0=float(t[0]), dt=spec.dt, values=y, axis_label=label, value_label="f")


# ---------------------------------------------------------------------------
# RRDF input


class RrdfMode(str, Enum):
    DENSITY = "density"
    REDUCED = "reduced"


@dataclass(frozen=True, eq=False)
class RrdfInput:
    """Tabulated rho(r) (density mode) or d(r) (reduced mode) on a uniform r axis."""

    mode: RrdfMode
    r: np.ndarray
    values: np.ndarray
    rho0: float | None = None
    l_half: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", RrdfMode(self.mode))
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size == 0:
            raise ContractViolation("r and values must be equal-length non-empty 1-D arrays")
        if np.any(r <= 0):
            raise ContractViolation("r axis must be positive")
        if self.mode is RrdfMode.DENSITY and not (self.rho0 is not None and self.rho0 > 0):
            raise ContractViolation("density mode needs rho0 > 0")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", v)


def _uniform_step(x):
    if x.size < 2:
        raise ContractViolation("need at least two samples to fix the spacing")
    steps = np.diff(x)
    dt = (x[-1] - x[0]) / (x.size - 1)
    if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-6 * dt:
        raise ContractViolation("axis is not uniformly spaced")
    return dt


def rrdf_from_density(data: RrdfInput) -> SignalSeries:
    """d(r) = 4 pi r (rho(r) - rho0), set to zero outside 0 < r < L_half."""
    if data.mode is not RrdfMode.DENSITY:
        raise ContractViolation("rrdf_from_density needs density-mode input")
    dr = _uniform_step(data.r)
    d = 4.0 * math.pi * data.r * (data.values - data.rho0)
    if data.l_half is not None:
        d = np.where(data.r < data.l_half, d, 0.0)
    return SignalSeries(t0=float(data.r[0]), dt=dr, values=d, axis_label="r", value_label="d")


def rrdf_signal(data: RrdfInput) -> SignalSeries:
    """Signal for either input mode (reduced data is cut at L_half only)."""
    if data.mode is RrdfMode.DENSITY:
        return rrdf_from_density(data)
    dr = _uniform_step(data.r)
    d = data.values
    if data.l_half is not None:
        d = np.where(data.r < data.l_half, d, 0.0)
    return SignalSeries(t0=float(data.r[0]), dt=dr, values=d, axis_label="r", value_label="d")


_HEADER_KEY = re.compile(r"(\w+)\s*=\s*(\S+)")
_SPLIT = re.compile(r"[,\s]+")


def parse_columns(lines, min_rows=1):
    """Two-column numeric table; ``#`` lines are comments.

    One non-numeric row before the data is taken as column names.  Returns
    (x, y, header) where ``header`` maps keys from ``key=value`` pairs found
    on comment lines.
    """
    xs, ys, header = [], [], {}
    seen_header = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            header.update((k.lower(), v) for k, v in _HEADER_KEY.findall(line))
            continue
        parts = [p for p in _SPLIT.split(line) if p]
        if len(parts) != 2:
            raise ParseError(f"expected 2 columns, found {len(parts)}", lineno)
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            if not xs and not seen_header:
                seen_header = True  # column names, e.g. "t,f"
                continue
            raise ParseError(f"not a number in {line!r}", lineno) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ParseError("non-finite value", lineno)
        xs.append(x)
        ys.append(y)
    if len(xs) < min_rows:
        raise ParseError(f"need at least {min_rows} data rows, found {len(xs)}", None)
    return np.array(xs), np.array(ys), header


def _header_float(header, key):
    if key not in header:
        return None
    try:
        return float(header[key])
    except ValueError:
        raise ParseError(f"header value {key}={header[key]!r} is not a number", 1) from None


def parse_rrdf(lines) -> RrdfInput:
    r, v, header = parse_columns(lines, min_rows=2)
    mode = header.get("mode", "reduced").lower()
    if mode not in ("density", "reduced"):
        raise ParseError(f"unknown mode {mode!r}", 1)
    rho0 = _header_float(header, "rho0")
    l_half = _header_float(header, "lhalf")
    try:
        return RrdfInput(mode=mode, r=r, values=v, rho0=rho0, l_half=l_half)
    except ContractViolation as exc:
        raise ParseError(str(exc), None) from None


def read_rrdf(path) -> RrdfInput:
    with open(Path(path), encoding="utf-8") as fh:
        return parse_rrdf(fh)


# ---------------------------------------------------------------------------
# spectra


def power_spectrum(signal: SignalSeries, pad=PAD_FACTOR, window=False):
    """Positive-frequency power spectrum |dt * DFT|^2 against nu in cycles per unit.

    Args:
        signal: uniformly sampled input.
        pad: zero-padding factor applied to the length before the DFT.
        window: apply a Hann taper first.

    Returns:
        (nu, power) arrays, nu from 0 to the Nyquist frequency.
    """
    y = np.asarray(signal.values, dtype=float)
    if y.size == 0:
        raise ContractViolation("signal is empty")
    if window:
        y = y * np.hanning(y.size)
    n = max(1, int(pad)) * y.size
    spec = np.fft.rfft(y, n=n) * signal.dt
    nu = np.fft.rfftfreq(n, d=signal.dt)
    return nu, spec.real ** 2 + spec.imag ** 2


def spectrum_peak(nu, power, nu_min=0.0):
    """Frequency of the highest spectral peak at nu > nu_min."""
    sel = np.flatnonzero(nu > nu_min)
    if sel.size == 0:
        raise InsufficientDataError("no spectral bins above nu_min")
    return float(nu[sel[np.argmax(power[sel])]])


# ---------------------------------------------------------------------------
# fits


@dataclass(frozen=True)
class FitResult:
    model: str
    params: dict
    errors: dict
    x_lo: float
    x_hi: float
    rms: float
    n_points: int
    extra: dict = field(default_factory=dict, compare=False)

    def to_json(self):
        return {
            "model": self.model,
            "params": dict(self.params),
            "errors": dict(self.errors),
            "range": [self.x_lo, self.x_hi],
            "rms": self.rms,
            "n_points": self.n_points,
        }


def _in_range(x, y, x_lo, x_hi):
    if not x_lo < x_hi:
        raise ContractViolation(f"need x_lo < x_hi, got [{x_lo}, {x_hi})")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ContractViolation("x and y must have equal length")
    sel = (x >= x_lo) & (x < x_hi)
    return x[sel], y[sel]


def fit_exponential(x, amplitude, x_lo, x_hi) -> FitResult:
    """Least-squares fit of ln A = ln alpha - beta x over [x_lo, x_hi).

    Standard errors come from the unweighted linear fit; sigma_alpha is
    propagated as alpha * sigma(ln alpha).  ``rms`` is the residual in ln A.
    """
    xs, amps = _in_range(x, amplitude, x_lo, x_hi)
    if xs.size < MIN_EXP_POINTS:
        raise InsufficientDataError(
            f"exponential fit needs {MIN_EXP_POINTS} points in [{x_lo}, {x_hi}), found {xs.size}"
        )
    if np.any(~(amps > 0)):
        raise ContractViolation("amplitudes must be positive for a log-linear fit")
    ln_a = np.log(amps)
    res = stats.linregress(xs, ln_a)
    resid = ln_a - (res.intercept + res.slope * xs)
    alpha = math.exp(res.intercept)
    return FitResult(
        model="exponential",
        params={"alpha": alpha, "beta": -res.slope},
        errors={"alpha": alpha * res.intercept_stderr, "beta": res.stderr},
        x_lo=float(x_lo),
        x_hi=float(x_hi),
        rms=float(np.sqrt(np.mean(resid ** 2))),
        n_points=int(xs.size),
    )


def fit_constant(x, y, x_lo, x_hi) -> FitResult:
    """Mean of y over [x_lo, x_hi) with its standard error."""
    xs, ys = _in_range(x, y, x_lo, x_hi)
    if xs.size == 0:
        raise InsufficientDataError(f"no points in [{x_lo}, {x_hi})")
    mean = float(np.mean(ys))
    sem = float(np.std(ys, ddof=1) / math.sqrt(ys.size)) if ys.size > 1 else 0.0
    return FitResult(
        model="constant",
        params={"value": mean},
        errors={"value": sem},
        x_lo=float(x_lo),
        x_hi=float(x_hi),
        rms=float(np.sqrt(np.mean((ys - mean) ** 2))),
        n_points=int(xs.size),
    )
