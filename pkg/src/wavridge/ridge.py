"""Ridge detection on |F| and instantaneous amplitude / frequency tracks.

A ridge is a curve a_r(b) of local maxima of |F(., b)| over scale.  Along a
ridge the component's amplitude and frequency follow from

    A(b)  = (pi sigma_psi^2 / 2)^(-1/4) |F(a_r, b)|
    nu(b) = omega_psi / (2 pi a_r)                  (scale estimator)
    nu(b) = |d/db Arg F(a_r, b)| / (2 pi)          (phase estimator)

The stationary-phase prediction of |F| is provided separately as an oracle
for checking computed transforms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cwt import CwtField
from .errors import ContractViolation
from .wavelet import MotherWavelet

__all__ = [
    "RidgeConfig",
    "RidgePoint",
    "Ridge",
    "ComponentTrack",
    "SignalModel",
    "scale_maxima",
    "link_ridges",
    "amplitude_track",
    "freq_from_scale",
    "freq_from_phase",
    "extract_track",
    "dominant_ridge",
    "stationary_phase_modulus",
]


@dataclass(frozen=True)
class RidgeConfig:
    noise_floor: float = 1e-3
    max_jump: float = 1.5  # in scale-grid steps of log a
    min_length: int = 8
    drop_boundary_only: bool = True  # ridges lying wholly in the cone of influence


@dataclass(frozen=True)
class RidgePoint:
    b: float
    a_r: float
    modulus: float
    phase: float
    boundary_flag: bool
    column: int = -1
    node: int = -1


@dataclass(frozen=True)
class Ridge:
    points: tuple

    def __post_init__(self):
        pts = tuple(self.points)
        if any(q.b <= p.b for p, q in zip(pts, pts[1:])):
            raise ContractViolation("ridge points must be strictly increasing in b")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def b(self):
        return np.array([p.b for p in self.points])

    @property
    def a_r(self):
        return np.array([p.a_r for p in self.points])

    @property
    def modulus(self):
        return np.array([p.modulus for p in self.points])

    @property
    def phase(self):
        return np.array([p.phase for p in self.points])

    @property
    def boundary_flag(self):
        return np.array([p.boundary_flag for p in self.points], dtype=bool)


@dataclass(frozen=True, eq=False)
class ComponentTrack:
    """Per-point amplitude and both frequency estimates along one ridge."""

    b: np.ndarray
    a_r: np.ndarray
    modulus: np.ndarray
    amplitude: np.ndarray
    freq_mod: np.ndarray
    freq_phase: np.ndarray
    boundary_flag: np.ndarray
    source: Ridge

    def __len__(self):
        return self.b.size

    def columns(self):
        return {
            "b": self.b,
            "a_r": self.a_r,
            "modulus": self.modulus,
            "amplitude": self.amplitude,
            "freq_mod": self.freq_mod,
            "freq_phase": self.freq_phase,
            "boundary_flag": self.boundary_flag.astype(int),
        }


# ---------------------------------------------------------------------------
# maxima along scale


def _parabola_peak(x, y):
    """Vertex (x, y) of the parabola through three points; None if degenerate."""
    x0, x1, x2 = x
    y0, y1, y2 = y
    d01, d12, d02 = x0 - x1, x1 - x2, x0 - x2
    denom = d01 * d02 * d12
    if denom == 0:
        return None
    c2 = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    if not c2 < 0:
        return None
    c1 = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    c0 = y1 - c1 * x1 - c2 * x1 * x1
    xv = -c1 / (2.0 * c2)
    if not x0 <= xv <= x2:
        return None
    return xv, c0 + c1 * xv + c2 * xv * xv


def _column_maxima(field: CwtField, j, power_col, log_a, floor):
    """Refined maxima for one column, given |F|^2 in ``power_col``."""
    inner = power_col[1:-1]
    is_max = (inner > power_col[:-2]) & (inner > power_col[2:]) & (inner > floor * floor)
    out = []
    coi = field.coi
    b = field.b0 + field.db * j
    for i in np.flatnonzero(is_max) + 1:
        peak = _parabola_peak(log_a[i - 1:i + 2], power_col[i - 1:i + 2])
        if peak is None:
            la, pw = log_a[i], power_col[i]
        else:
            la, pw = peak
        a_r = math.exp(la)
        node = i if peak is None else int(np.argmin(np.abs(log_a[i - 1:i + 2] - la))) + i - 1
        out.append(
            RidgePoint(
                b=b,
                a_r=a_r,
                modulus=math.sqrt(max(pw, 0.0)),
                phase=float(np.angle(field.values[node, j])),
                boundary_flag=bool(coi[node, j]) if coi is not None else False,
                column=j,
                node=node,
            )
        )
    return out


def scale_maxima(field: CwtField, b_index: int, noise_floor=1e-3):
    """Interior local maxima of |F(., b)| over scale, refined in (log a, |F|^2).

    Maxima below ``noise_floor * max|F|`` (whole field) are dropped.
    """
    n = field.shape[1]
    if not 0 <= b_index < n:
        raise ContractViolation(f"b_index {b_index} out of range [0, {n})")
    if field.shape[0] < 3:
        return []
    floor = noise_floor * field.max_modulus
    col = field.modulus[:, b_index]
    return _column_maxima(field, b_index, col * col, np.log(field.scales), floor)


# ---------------------------------------------------------------------------
# linking


def link_ridges(field: CwtField, config: RidgeConfig = RidgeConfig()):
    """Greedy nearest-neighbour linking of per-column maxima into ridges.

    A maximum continues a ridge ending in the previous column if their
    log-scales differ by at most ``config.max_jump`` grid steps.  Candidate
    pairs are taken in order of increasing jump, then decreasing modulus.
    Ridges shorter than ``config.min_length`` columns are dropped, as are
    (by default) ridges whose every point is boundary-flagged: those are
    produced by the zero extension at the data edges.
    """
    nscale, ncol = field.shape
    if nscale < 3 or ncol == 0 or field.max_modulus == 0:
        return []
    log_a = np.log(field.scales)
    bound = config.max_jump * field.grid.log_step + 1e-12
    floor = config.noise_floor * field.max_modulus
    power = field.modulus ** 2

    finished = []
    active = []  # lists of points, each ending at column j - 1
    for j in range(ncol):
        maxima = _column_maxima(field, j, power[:, j], log_a, floor)
        pairs = []
        for ri, ridge in enumerate(active):
            last = math.log(ridge[-1].a_r)
            for mi, pt in enumerate(maxima):
                jump = abs(math.log(pt.a_r) - last)
                if jump <= bound:
                    pairs.append((jump, -pt.modulus, ri, mi))
        pairs.sort()
        used_r, used_m = set(), set()
        next_active = []
        for _, _, ri, mi in pairs:
            if ri in used_r or mi in used_m:
                continue
            used_r.add(ri)
            used_m.add(mi)
            active[ri].append(maxima[mi])
            next_active.append(active[ri])
        for ri, ridge in enumerate(active):
            if ri not in used_r:
                finished.append(ridge)
        for mi, pt in enumerate(maxima):
            if mi not in used_m:
                next_active.append([pt])
        active = next_active
    finished.extend(active)
    ridges = [Ridge(tuple(r)) for r in finished if len(r) >= config.min_length]
    if config.drop_boundary_only:
        ridges = [r for r in ridges if not all(p.boundary_flag for p in r.points)]
    ridges.sort(key=lambda r: (r.points[0].b, r.points[0].a_r))
    return ridges


def dominant_ridge(ridges: Sequence[Ridge]):
    """The ridge carrying the largest summed modulus, or None."""
    if not ridges:
        return None
    return max(ridges, key=lambda r: float(np.sum(r.modulus)))


# ---------------------------------------------------------------------------
# amplitude and frequency


def amplitude_track(ridge: Ridge, w: MotherWavelet):
    """List of (b, A) with A = (pi sigma_psi^2 / 2)^(-1/4) |F(a_r, b)|."""
    if len(ridge) == 0:
        raise ContractViolation("ridge is empty")
    factor = (0.5 * math.pi * w.env_variance) ** -0.25
    return [(p.b, factor * p.modulus) for p in ridge]


def freq_from_scale(ridge: Ridge, w: MotherWavelet):
    """List of (b, nu) with nu = omega_psi / (2 pi a_r)."""
    if len(ridge) == 0:
        raise ContractViolation("ridge is empty")
    return [(p.b, w.mean_freq / (2.0 * math.pi * p.a_r)) for p in ridge]


def freq_from_phase(ridge: Ridge, field: CwtField | None = None):
    """List of (b, nu) with nu = |d Arg F / db| / (2 pi) along the ridge.

    The phase is taken at the scale node nearest each ridge point, unwrapped,
    and differentiated with central differences (one-sided at the ends).
    ``field`` is accepted for interface symmetry; the phases are stored on
    the ridge points.
    """
    if len(ridge) < 3:
        raise ContractViolation("phase derivative needs at least 3 ridge points")
    b = ridge.b
    phase = np.unwrap(ridge.phase)
    nu = np.abs(np.gradient(phase, b)) / (2.0 * math.pi)
    return list(zip(b.tolist(), nu.tolist()))


def extract_track(ridge: Ridge, field: CwtField, w: MotherWavelet | None = None) -> ComponentTrack:
    w = w or field.wavelet
    if w is None:
        raise ContractViolation("a wavelet is needed to interpret the ridge")
    amp = np.array([v for _, v in amplitude_track(ridge, w)])
    fmod = np.array([v for _, v in freq_from_scale(ridge, w)])
    if len(ridge) >= 3:
        fph = np.array([v for _, v in freq_from_phase(ridge, field)])
    else:
        fph = np.full(len(ridge), np.nan)
    return ComponentTrack(
        b=ridge.b,
        a_r=ridge.a_r,
        modulus=ridge.modulus,
        amplitude=amp,
        freq_mod=fmod,
        freq_phase=fph,
        boundary_flag=ridge.boundary_flag,
        source=ridge,
    )


# ---------------------------------------------------------------------------
# stationary-phase oracle


@dataclass(frozen=True)
class SignalModel:
    """Analytic component A(t) cos(phi(t)) with its phase derivatives."""

    amplitude: Callable[[float], float]
    phase: Callable[[float], float]
    phase_d1: Callable[[float], float]
    phase_d2: Callable[[float], float]


def stationary_phase_modulus(w: MotherWavelet, a, b, model: SignalModel, t_s, simplified=False):
    """Stationary-phase estimate of |F(a, b)| for a single oscillatory component.

    With Phi'' = phi''(t_s) (the wavelet frequency is constant) and
    s = sigma_psi,

        |F|^2 = sqrt(pi/2) s A(t_s)^2 (1 + 4 a^4 s^4 Phi''^2)^(-1/2)
                * exp(-a^2 s^2 Phi''^2 (t_s - b)^2 / (1 + 4 a^4 s^4 Phi''^2))

    ``simplified=True`` drops the 4 a^4 s^4 Phi''^2 terms (slow frequency
    variation).  Valid when |phi'| >> |A'/A|.
    """
    var = w.env_variance
    s = math.sqrt(var)
    d2 = float(model.phase_d2(t_s))
    if not math.isfinite(d2):
        raise ContractViolation("phase curvature must be finite")
    amp = float(model.amplitude(t_s))
    spread = 0.0 if simplified else 4.0 * a ** 4 * var * var * d2 * d2
    denom = 1.0 + spread
    sq = (
        math.sqrt(0.5 * math.pi) * s * amp * amp / math.sqrt(denom)
        * math.exp(-(a * a * var * d2 * d2 * (t_s - b) ** 2) / denom)
    )
    return math.sqrt(sq)
