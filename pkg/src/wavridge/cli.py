"""Command-line front end: ``wavridge <subcommand> [options]``.

Subcommands write plain CSV / JSON / CWTF files into ``--output-dir``:

    wavelet      mother wavelet samples, spectrum, envelope, sigma tables
    synth        closed-form test signals
    transform    CWT of a signal file (CWTF grid, |F| CSV, JSON sidecar)
    extract      ridges of a CWTF grid, per-ridge tracks, optional fits
    spectrum     Fourier power spectrum of a signal file
    reconstruct  inverse transform of a CWTF grid

Options may also come from a ``key = value`` file given with ``--config``;
command-line flags take precedence over the file, which takes precedence
over built-in defaults.

Exit codes: 0 success (including empty results), 1 usage error,
2 I/O or parse error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .cwt import ScaleGrid, SignalSeries, reconstruct, transform
from .errors import (
    ContractViolation,
    InsufficientDataError,
    NumericalFailure,
    ParseError,
    ReconstructionCoverageError,
    UnderResolvedScaleWarning,
)
from .model import (
    SyntheticSpec,
    fit_constant,
    fit_exponential,
    parse_columns,
    parse_rrdf,
    power_spectrum,
    rrdf_signal,
    spectrum_peak,
    synth,
)
from .ridge import RidgeConfig, dominant_ridge, extract_track, link_ridges
from .wavelet import (
    WaveletKind,
    env_variance_analytic,
    env_variance_numeric,
    eval_wavelet,
    fourier_transform,
    make_wavelet,
    mean_freq_analytic,
    mean_freq_numeric,
    mode_freq_numeric,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "kind": "new",
    "sigma": 1.0,
    "voices": 16,
    "noise_floor": 1e-3,
    "max_jump": 1.5,
    "min_length": 8,
    "output_dir": ".",
}

SIDECAR = "field.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class FitSpec:
    model: str  # "exp" or "const"
    lo: float
    hi: float

    @classmethod
    def parse(cls, text):
        parts = str(text).split(":")
        if len(parts) != 3 or parts[0] not in ("exp", "const"):
            raise UsageError(f"bad --fit {text!r}; expected exp:LO:HI or const:LO:HI")
        try:
            lo, hi = float(parts[1]), float(parts[2])
        except ValueError:
            raise UsageError(f"bad --fit range in {text!r}") from None
        if not lo < hi:
            raise UsageError(f"--fit range needs LO < HI, got {text!r}")
        return cls(parts[0], lo, hi)

    @property
    def tag(self):
        return f"{self.model}_{self.lo:g}_{self.hi:g}"


# ---------------------------------------------------------------------------
# argument handling


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file with default option values")
    p.add_argument("--output-dir", help="directory for output files (default: current)")
    p.add_argument("--format", action="append", choices=["csv", "json", "bin"],
                   help="restrict outputs to these formats (repeatable)")


def _wavelet_opts(p: argparse.ArgumentParser):
    p.add_argument("--kind", help="mother wavelet: new, morlet or mexhat (default: new)")
    p.add_argument("--sigma", type=float, help="wavelet parameter sigma (default: 1)")


def _grid_opts(p: argparse.ArgumentParser):
    p.add_argument("--nu-min", type=float, help="lowest analysed frequency (cycles per unit)")
    p.add_argument("--nu-max", type=float, help="highest analysed frequency (cycles per unit)")
    p.add_argument("--voices", type=int, help="scales per octave (default: 16)")
    p.add_argument("--method", choices=["fft", "direct"], help="transform evaluation path")


def build_parser():
    parser = _Parser(prog="wavridge", description="Wavelet ridge analysis of 1-D signals.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("wavelet", help="tabulate the mother wavelet and its properties")
    _common(p)
    _wavelet_opts(p)
    p.add_argument("--envelope", action="store_true", help="write |psi(t)|^2 only")
    p.add_argument("--table", choices=["omega-psi", "sigma-psi"], help="tabulate against sigma")
    p.add_argument("--sigma-max", type=float, help="upper sigma for --table (default: 10)")
    p.add_argument("--sigma-step", type=float, help="sigma spacing for --table (default: 0.1)")
    p.add_argument("--t-max", type=float, help="half-width of the time axis (default: 8)")
    p.add_argument("--dt", type=float, help="time step (default: 0.01)")

    p = sub.add_parser("synth", help="write a closed-form test signal")
    _common(p)
    p.add_argument("--signal", help="tone, chirp or damped (default: chirp)")
    p.add_argument("--t-min", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--amplitude", type=float, help="tone amplitude")
    p.add_argument("--omega", type=float, help="tone angular frequency")
    p.add_argument("--alpha", type=float, help="damped oscillation prefactor")
    p.add_argument("--beta", type=float, help="damped oscillation decay rate")
    p.add_argument("--nu", type=float, help="damped oscillation frequency")

    p = sub.add_parser("transform", help="continuous wavelet transform of a signal file")
    _common(p)
    _wavelet_opts(p)
    _grid_opts(p)
    p.add_argument("input", help="two-column signal file (RRDF header accepted)")

    p = sub.add_parser("extract", help="ridges and tracks from a CWTF grid")
    _common(p)
    _wavelet_opts(p)
    p.add_argument("--noise-floor", type=float, help="maxima floor relative to max|F| (default: 1e-3)")
    p.add_argument("--max-jump", type=float, help="ridge continuity bound in grid steps (default: 1.5)")
    p.add_argument("--min-length", type=int, help="shortest kept ridge in columns (default: 8)")
    p.add_argument("--fit", action="append",
                   help="exp:LO:HI (amplitude) or const:LO:HI (frequency); repeatable")
    p.add_argument("--fit-source", choices=["mod", "phase"],
                   help="frequency estimator used by const fits (default: mod)")
    p.add_argument("grid", help="CWTF file written by 'transform'")

    p = sub.add_parser("spectrum", help="Fourier power spectrum of a signal file")
    _common(p)
    p.add_argument("--pad", type=int, help="zero-padding factor (default: 4)")
    p.add_argument("--window", action="store_true", help="apply a Hann window")
    p.add_argument("input")

    p = sub.add_parser("reconstruct", help="inverse transform of a CWTF grid")
    _common(p)
    _wavelet_opts(p)
    p.add_argument("--reference", help="signal file to compare against (interior half)")
    p.add_argument("grid")
    return parser


def load_config(path):
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "fit":
            out.setdefault("fit", []).append(value)
        else:
            out[key] = value
    return out


_CASTS = {
    "sigma": float, "nu_min": float, "nu_max": float, "voices": int, "noise_floor": float,
    "max_jump": float, "min_length": int, "sigma_max": float, "sigma_step": float,
    "t_max": float, "t_min": float, "dt": float, "amplitude": float, "omega": float,
    "alpha": float, "beta": float, "nu": float, "pad": int,
}


def resolve(args, config):
    """Merge flags over config over defaults; returns a plain dict."""
    opts = {k: v for k, v in vars(args).items()}
    known = set(opts)
    for key, value in config.items():
        if key not in known or key in ("config", "command", "input", "grid"):
            raise UsageError(f"config key {key!r} does not apply to '{args.command}'")
        if opts.get(key) is None or (key in ("envelope", "window") and not opts[key]):
            try:
                if key in ("envelope", "window"):
                    value = str(value).lower() in ("1", "true", "yes", "on")
                elif key in _CASTS:
                    value = _CASTS[key](value)
            except ValueError:
                raise UsageError(f"config value for {key!r} is not a number: {value!r}") from None
            opts[key] = value
    for key, value in DEFAULTS.items():
        if key in opts and opts[key] is None:
            opts[key] = value
    return opts


def _wavelet_from(opts, sidecar=None):
    kind = opts.get("kind")
    sigma = opts.get("sigma")
    if sidecar:
        kind = kind if opts.get("_kind_given") else sidecar["wavelet"]["kind"]
        sigma = sigma if opts.get("_sigma_given") else sidecar["wavelet"]["sigma"]
    try:
        kind = WaveletKind.parse(kind)
    except ContractViolation as exc:
        raise UsageError(str(exc)) from None
    if kind is not WaveletKind.MEXICAN_HAT and not (sigma is not None and sigma > 0):
        raise UsageError(f"--sigma must be positive, got {sigma}")
    return make_wavelet(kind, sigma)


def _wants(opts, fmt, default):
    chosen = opts.get("format")
    return fmt in chosen if chosen else fmt in default


def _outdir(opts):
    out = Path(opts["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_input_signal(path) -> SignalSeries:
    """Signal file; files with a ``mode=`` header are read as RRDF data."""
    with open(Path(path), encoding="utf-8") as fh:
        lines = fh.readlines()
    _, _, header = parse_columns(lines, min_rows=2)
    if "mode" in header:
        return rrdf_signal(parse_rrdf(lines))
    return io.read_signal(path)


# ---------------------------------------------------------------------------
# subcommands


def cmd_wavelet(opts, out):
    w = _wavelet_from(opts)
    tag = f"{w.kind.value}_sigma{w.sigma:g}"
    if opts.get("table"):
        return _wavelet_table(opts, out, w.kind)
    t_max = opts.get("t_max") or 8.0
    dt = opts.get("dt") or 0.01
    t = np.linspace(-t_max, t_max, int(round(2 * t_max / dt)) + 1)
    psi = eval_wavelet(w, t)
    env = np.abs(psi) ** 2
    if opts.get("envelope"):
        path = out / f"envelope_{tag}.csv"
        io.write_csv(path, ["t", "abs2"], [t, env])
        print(f"wrote {path}")
        return EXIT_OK
    path = out / f"wavelet_{tag}.csv"
    io.write_csv(path, ["t", "re", "im", "abs2"], [t, psi.real, psi.imag, env])
    print(f"wrote {path}")
    om_max = max(8.0, w.sigma + 8.0)
    om = np.linspace(-om_max, om_max, 1601)
    spec = fourier_transform(w, om)
    path = out / f"spectrum_{tag}.csv"
    io.write_csv(path, ["omega", "re", "im", "abs2"], [om, spec.real, spec.imag, np.abs(spec) ** 2])
    print(f"wrote {path}")
    if _wants(opts, "json", ("json",)):
        path = out / f"wavelet_{tag}.json"
        io.write_json(path, {
            "kind": w.kind.value, "sigma": w.sigma, "env_variance": w.env_variance,
            "mean_freq": w.mean_freq, "mode_freq": w.mode_freq,
        })
        print(f"wrote {path}")
    return EXIT_OK


def _wavelet_table(opts, out, kind):
    sigma_max = opts.get("sigma_max") or 10.0
    step = opts.get("sigma_step") or 0.1
    if not (sigma_max > 0 and step > 0):
        raise UsageError("--sigma-max and --sigma-step must be positive")
    sig = step * np.arange(1, int(math.floor(sigma_max / step + 1e-9)) + 1)
    name = opts["table"]
    if name == "omega-psi":
        cols = [sig, [mean_freq_numeric(s, kind) for s in sig], [mode_freq_numeric(s, kind) for s in sig]]
        header = ["sigma", "mean_numeric", "mode_numeric"]
        if kind is WaveletKind.NEW:
            cols.insert(1, [mean_freq_analytic(s) for s in sig])
            header.insert(1, "mean_analytic")
    else:
        cols = [sig, [math.sqrt(env_variance_numeric(s, kind)) for s in sig]]
        header = ["sigma", "sigma_psi_numeric"]
        if kind is WaveletKind.NEW:
            cols.insert(1, [math.sqrt(env_variance_analytic(s)) for s in sig])
            header.insert(1, "sigma_psi_analytic")
    path = out / f"table_{name}_{kind.value}.csv"
    io.write_csv(path, header, [np.asarray(c, dtype=float) for c in cols])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_synth(opts, out):
    kind = opts.get("signal") or "chirp"
    defaults = {
        "chirp": (-10.0, 10.0, 0.005),
        "tone": (-20.0, 20.0, 0.005),
        "damped": (0.005, 25.0, 0.005),
        "damped_oscillation": (0.005, 25.0, 0.005),
    }.get(kind, (-10.0, 10.0, 0.005))
    extra = {k: opts[k] for k in ("amplitude", "omega", "alpha", "beta", "nu") if opts.get(k) is not None}
    try:
        spec = SyntheticSpec(
            kind,
            opts["t_min"] if opts.get("t_min") is not None else defaults[0],
            opts["t_max"] if opts.get("t_max") is not None else defaults[1],
            opts["dt"] if opts.get("dt") is not None else defaults[2],
            **extra,
        )
    except ContractViolation as exc:
        raise UsageError(str(exc)) from None
    sig = synth(spec)
    path = out / f"{spec.kind.value}.csv"
    io.write_signal(path, sig)
    print(f"wrote {path} ({len(sig)} samples)")
    return EXIT_OK


def _grid_for(opts, w, sig: SignalSeries):
    duration = sig.dt * max(len(sig) - 1, 1)
    nu_min = opts.get("nu_min") if opts.get("nu_min") is not None else 2.0 / duration
    nu_max = opts.get("nu_max") if opts.get("nu_max") is not None else 0.1 / sig.dt
    voices = opts["voices"]
    if not 0 < nu_min < nu_max:
        raise UsageError(f"need 0 < nu-min < nu-max, got {nu_min}, {nu_max}")
    if voices < 4:
        raise UsageError(f"--voices must be at least 4, got {voices}")
    return ScaleGrid.from_frequencies(w, nu_min, nu_max, voices), nu_min, nu_max


def cmd_transform(opts, out):
    w = _wavelet_from(opts)
    sig = _read_input_signal(opts["input"])
    grid, nu_min, nu_max = _grid_for(opts, w, sig)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UnderResolvedScaleWarning)
        field = transform(sig, w, grid, method=opts.get("method") or "fft")
    for item in caught:
        print(f"warning: {item.message}", file=sys.stderr)
    meta = {
        "wavelet": {"kind": w.kind.value, "sigma": w.sigma},
        "n_scales": field.shape[0],
        "n_translations": field.shape[1],
        "b0": field.b0,
        "db": field.db,
        "nu_min": nu_min,
        "nu_max": nu_max,
        "voices": opts["voices"],
        "axis_label": sig.axis_label,
        "under_resolved_scales": int(np.count_nonzero(field.under_resolved)),
    }
    if _wants(opts, "bin", ("bin",)):
        io.write_cwtf(out / "field.cwtf", field)
    if _wants(opts, "csv", ("csv",)):
        io.write_modulus_csv(out / "modulus.csv", field, w)
    io.write_json(out / SIDECAR, meta)
    freqs = field.frequencies()
    print(f"grid {field.shape[0]} scales x {field.shape[1]} translations")
    print(f"frequency span {freqs.min():.6g} .. {freqs.max():.6g}")
    print(f"translation span {field.b0:.6g} .. {field.translations[-1]:.6g}")
    return EXIT_OK


def _load_grid(opts):
    grid_path = Path(opts["grid"])
    sidecar = None
    side = grid_path.with_name(SIDECAR)
    if side.exists():
        try:
            sidecar = json.loads(side.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise ParseError(f"{side}: {exc}", None) from None
    if sidecar is None and opts.get("kind") is None:
        raise UsageError(f"no {SIDECAR} next to {grid_path}; pass --kind and --sigma")
    w = _wavelet_from(opts, sidecar)
    field = io.read_cwtf(grid_path, w)
    return field, w


def cmd_extract(opts, out):
    fits = [FitSpec.parse(f) for f in (opts.get("fit") or [])]
    field, w = _load_grid(opts)
    config = RidgeConfig(
        noise_floor=opts["noise_floor"], max_jump=opts["max_jump"], min_length=opts["min_length"]
    )
    ridges = link_ridges(field, config)
    entries = []
    tracks = []
    for i, ridge in enumerate(ridges):
        track = extract_track(ridge, field, w)
        tracks.append(track)
        name = f"ridge_{i:03d}.csv"
        cols = track.columns()
        if _wants(opts, "csv", ("csv",)):
            io.write_csv(out / name, list(cols), list(cols.values()))
        entries.append({
            "file": name,
            "n_points": len(track),
            "b_start": float(track.b[0]),
            "b_end": float(track.b[-1]),
            "mean_modulus": float(np.mean(track.modulus)),
        })
    dom = dominant_ridge(ridges)
    manifest = {
        "wavelet": {"kind": w.kind.value, "sigma": w.sigma},
        "ridges": entries,
        "dominant": None if dom is None else ridges.index(dom),
    }
    io.write_json(out / "manifest.json", manifest)
    print(f"{len(ridges)} ridge(s) found")
    if not ridges:
        print("warning: no ridges found; manifest is empty", file=sys.stderr)
    if fits:
        if dom is None:
            raise InsufficientDataError("cannot fit: no ridges found")
        track = tracks[ridges.index(dom)]
        keep = ~track.boundary_flag
        source = opts.get("fit_source") or "mod"
        for spec in fits:
            if spec.model == "exp":
                res = fit_exponential(track.b[keep], track.amplitude[keep], spec.lo, spec.hi)
            else:
                freq = track.freq_mod if source == "mod" else track.freq_phase
                res = fit_constant(track.b[keep], freq[keep], spec.lo, spec.hi)
            report = res.to_json()
            if spec.model == "const":
                report["estimator"] = source
            io.write_json(out / f"fit_{spec.tag}.json", report)
            params = ", ".join(f"{k}={v:.6g}+-{res.errors[k]:.2g}" for k, v in res.params.items())
            print(f"fit {spec.tag}: {params}")
    return EXIT_OK


def cmd_spectrum(opts, out):
    sig = _read_input_signal(opts["input"])
    nu, power = power_spectrum(sig, pad=opts.get("pad") or 4, window=bool(opts.get("window")))
    io.write_csv(out / "spectrum.csv", ["nu", "power"], [nu, power])
    if np.any(power > 0):
        print(f"highest peak at nu = {spectrum_peak(nu, power):.6g}")
    return EXIT_OK


def cmd_reconstruct(opts, out):
    field, w = _load_grid(opts)
    rec = reconstruct(field, w)
    io.write_signal(out / "reconstructed.csv", rec)
    if opts.get("reference"):
        ref = _read_input_signal(opts["reference"])
        if len(ref) != len(rec):
            raise UsageError("reference length differs from the grid")
        n = len(rec)
        inner = slice(n // 4, n - n // 4)
        denom = np.linalg.norm(ref.values[inner])
        err = np.linalg.norm(rec.values[inner] - ref.values[inner]) / denom if denom else float("nan")
        print(f"relative L2 error (interior half) = {err:.6g}")
    return EXIT_OK


COMMANDS = {
    "wavelet": cmd_wavelet,
    "synth": cmd_synth,
    "transform": cmd_transform,
    "extract": cmd_extract,
    "spectrum": cmd_spectrum,
    "reconstruct": cmd_reconstruct,
}


def run(argv=None):
    """Run the CLI and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = load_config(args.config) if args.config else {}
        opts = resolve(args, config)
        opts["_kind_given"] = args.__dict__.get("kind") is not None or "kind" in config
        opts["_sigma_given"] = args.__dict__.get("sigma") is not None or "sigma" in config
        out = _outdir(opts)
        return COMMANDS[args.command](opts, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        where = f" ({exc.filename})" if getattr(exc, "filename", None) else ""
        print(f"I/O error: {exc.strerror or exc}{where}", file=sys.stderr)
        return EXIT_IO
    except (NumericalFailure, InsufficientDataError, ReconstructionCoverageError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ContractViolation as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
