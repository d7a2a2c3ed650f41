"""Continuous wavelet transform toolkit with ridge-based extraction of
instantaneous frequency and amplitude."""
from .cwt import (
    CwtField,
    ScaleGrid,
    SignalSeries,
    cone_of_influence,
    frequency_to_scale,
    reconstruct,
    scale_to_frequency,
    transform,
)
from .errors import (
    ContractViolation,
    InsufficientDataError,
    NumericalFailure,
    ParseError,
    ReconstructionCoverageError,
    UnderResolvedScaleWarning,
)
from .model import (
    FitResult,
    RrdfInput,
    SyntheticSpec,
    fit_constant,
    fit_exponential,
    power_spectrum,
    rrdf_from_density,
    synth,
)
from .ridge import (
    ComponentTrack,
    Ridge,
    RidgeConfig,
    RidgePoint,
    amplitude_track,
    dominant_ridge,
    extract_track,
    freq_from_phase,
    freq_from_scale,
    link_ridges,
    scale_maxima,
    stationary_phase_modulus,
)
from .wavelet import MotherWavelet, WaveletKind, make_wavelet

__version__ = "0.1.0"
