"""Command-line front ends: ``ofdm-src`` (signal source) and ``ofdm-analyze``.

Exit codes: 0 success, 1 validation or I/O failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import occupancy_report, papr, psd_welch
from .iqfile import FORMATS, IqFileError, format_from_extension, read_iq, read_sidecar, write_iq, write_json
from .profiles import (
    ProfileError,
    StandardId,
    builtin_profile,
    load_profile_file,
    profile_to_dict,
    validate,
)
from .rfchain import apply_chain, load_impairment_config, parse_stage, stage_to_dict
from .rxoracle import demodulate, measure_ber, measure_evm
from .txchain import generate_frame, modulate_symbols, scramble, source_bits

REPORT_SCHEMA_VERSION = 1
PROFILE_NAMES = [s.value for s in StandardId]


class _Usage(Exception):
    pass


def _json_float(v):
    v = float(v)
    return v if math.isfinite(v) else None


def _stage_arg(text):
    try:
        return parse_stage(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_profile_args(p: argparse.ArgumentParser, required: bool) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--profile", choices=PROFILE_NAMES, help="builtin standard profile")
    g.add_argument("--profile-file", metavar="PATH", help="profile document (JSON)")


def _resolve_profile(args):
    if args.profile:
        return builtin_profile(args.profile)
    if args.profile_file:
        return load_profile_file(args.profile_file)
    return None


def _read_bits_file(path) -> np.ndarray:
    """Packed bytes, most significant bit first."""
    return np.unpackbits(np.frombuffer(Path(path).read_bytes(), dtype=np.uint8))


def _occupancy_summary(buf, vp) -> dict:
    occ = occupancy_report(buf, vp)
    return {
        "occupied_k": occ.occupied_k,
        "occupied_count": len(occ.occupied_k),
        "null_suppression_db": _json_float(occ.null_suppression_db(vp)),
        "used_spread_db": _json_float(occ.used_spread_db(vp)),
    }


def _papr_summary(buf, window_len) -> dict:
    rep = papr(buf, window_len)
    return {
        "overall_db": rep.overall_db,
        "window_len": rep.window_len,
        "per_window_db": [float(v) for v in rep.per_window_db],
    }


def _run(parser, body, argv) -> int:
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        body(args)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ProfileError, IqFileError, ValueError, OSError) as exc:
        print(f"{parser.prog}: {exc}", file=sys.stderr)
        return 1
    return 0


# --- ofdm-src -------------------------------------------------------------------

def _src_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ofdm-src",
        description="Generate OFDM baseband IQ samples from a standard profile.",
    )
    _add_profile_args(p, required=True)
    p.add_argument("--symbols", type=int, metavar="K",
                   help="payload OFDM symbols (default: the profile's symbols_per_frame)")
    p.add_argument("--seed", type=int, default=0, help="PRBS seed for the payload (default 0)")
    p.add_argument("--bits-file", metavar="PATH",
                   help="payload bits as packed bytes, MSB first (overrides --seed)")
    p.add_argument("--out", required=True, metavar="PATH", help="sample file to write")
    p.add_argument("--format", choices=sorted(FORMATS), default="cf32le")
    p.add_argument("--impair", action="append", type=_stage_arg, default=[], metavar="STAGE",
                   help="impairment stage, e.g. awgn:snr_db=20,seed=7 (repeatable, applied in order)")
    p.add_argument("--impair-file", metavar="PATH", help="JSON list of impairment stages")
    p.add_argument("--real", action="store_true",
                   help="Hermitian-extend each symbol for a real line signal (DMT)")
    p.add_argument("--report", metavar="PATH", help="write a JSON run report")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _src(args) -> None:
    params = _resolve_profile(args)
    vp = validate(params)
    n_symbols = args.symbols if args.symbols is not None else vp.params.symbols_per_frame
    if n_symbols < 1:
        raise _Usage("--symbols must be >= 1")
    source = _read_bits_file(args.bits_file) if args.bits_file else args.seed
    stages = list(args.impair)
    if args.impair_file:
        stages += load_impairment_config(Path(args.impair_file).read_text())

    buf = generate_frame(vp, source, n_symbols, real_output=args.real)
    buf = apply_chain(buf, stages)
    seed = None if args.bits_file else args.seed
    write_iq(buf, args.out, args.format, seed=seed,
             extra={"symbols": n_symbols, "real_output": args.real})

    if args.report:
        report = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool": "ofdm-src",
            "profile": profile_to_dict(vp),
            "symbols": n_symbols,
            "seed": seed,
            "bits_file": Path(args.bits_file).name if args.bits_file else None,
            "real_output": args.real,
            "impairments": [stage_to_dict(s) for s in stages],
            "format": args.format,
            "sample_count": len(buf),
            "sample_rate_hz": buf.sample_rate_hz,
            "duration_s": buf.duration_s,
            "papr": _papr_summary(buf, vp.symbol_len),
            "occupancy": _occupancy_summary(buf, vp),
        }
        write_json(args.report, report)


def cli_src(argv=None) -> int:
    return _run(_src_parser(), _src, argv)


# --- ofdm-analyze ----------------------------------------------------------------

def _parse_psd(text: str) -> dict:
    opts = {"nfft": 1024, "overlap": 0.5, "window": "hann"}
    conv = {"nfft": int, "overlap": float, "window": str}
    for item in filter(None, (t.strip() for t in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep or key not in conv:
            raise _Usage(f"bad --psd option {item!r}; use nfft=N,overlap=F,window=hann|rect")
        try:
            opts[key] = conv[key](value)
        except ValueError:
            raise _Usage(f"bad value for --psd {key}: {value!r}") from None
    return opts


def _analyze_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ofdm-analyze",
        description="Measure spectra, subcarrier occupancy, PAPR and loopback BER/EVM.",
    )
    p.add_argument("--in", dest="input", required=True, metavar="PATH", help="sample file")
    p.add_argument("--format", choices=sorted(FORMATS), help="payload format (default: from sidecar)")
    p.add_argument("--sample-rate", type=float, metavar="HZ", help="override/replace the sidecar rate")
    _add_profile_args(p, required=False)
    p.add_argument("--psd", nargs="?", const="", metavar="OPTS",
                   help="Welch PSD, options nfft=1024,overlap=0.5,window=hann")
    p.add_argument("--occupancy", action="store_true", help="per-subcarrier power (needs a profile)")
    p.add_argument("--papr", action="store_true", help="peak-to-average power ratio")
    p.add_argument("--loopback", action="store_true",
                   help="demodulate and compare with the regenerated payload (needs a profile)")
    p.add_argument("--seed", type=int, help="payload seed for --loopback (default: from sidecar)")
    p.add_argument("--bits-file", metavar="PATH", help="payload bits for --loopback")
    p.add_argument("--equalize", action="store_true",
                   help="equalise with the reference symbol during --loopback")
    p.add_argument("--report", metavar="PATH", help="report file (default: stdout)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _analyze(args) -> None:
    meta = read_sidecar(args.input)
    if meta is None and args.sample_rate is None:
        raise _Usage(f"{args.input} has no sidecar; pass --sample-rate")
    fmt = args.format or (meta or {}).get("format") or format_from_extension(args.input)
    if fmt is None:
        raise _Usage(f"cannot tell the format of {args.input}; pass --format")
    params = _resolve_profile(args)
    if (args.occupancy or args.loopback) and params is None:
        raise _Usage("--occupancy and --loopback need --profile or --profile-file")
    psd_opts = _parse_psd(args.psd) if args.psd is not None else None

    buf = read_iq(args.input, fmt, args.sample_rate)
    vp = validate(params) if params is not None else None
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "tool": "ofdm-analyze",
        "input": Path(args.input).name,
        "sample_count": len(buf),
        "sample_rate_hz": buf.sample_rate_hz,
    }
    if vp is not None:
        report["profile"] = profile_to_dict(vp)
    if psd_opts is not None:
        psd = psd_welch(buf, **psd_opts)
        report["psd"] = {
            **psd_opts,
            "segments": psd.segments,
            "peak_hz": psd.peak_hz,
            "total_power": psd.total_power(),
            "freq_bins_hz": psd.freq_bins_hz.tolist(),
            "power_db": psd.power_db.tolist(),
        }
    if args.papr:
        report["papr"] = _papr_summary(buf, vp.symbol_len if vp is not None else None)
    if args.occupancy:
        report["occupancy"] = _occupancy_summary(buf, vp)
    if args.loopback:
        report["loopback"] = _loopback(buf, vp, args, meta)

    if args.report:
        write_json(args.report, report)
    else:
        json.dump(report, sys.stdout, indent=2, sort_keys=True, allow_nan=False)
        sys.stdout.write("\n")


def _loopback(buf, vp, args, meta) -> dict:
    if args.bits_file:
        source = _read_bits_file(args.bits_file)
    elif args.seed is not None:
        source = args.seed
    elif meta is not None and meta.get("seed") is not None:
        source = int(meta["seed"])
    else:
        raise _Usage("--loopback needs --seed or --bits-file (no seed in the sidecar)")
    rx = demodulate(buf, vp, equalize=args.equalize)
    n_symbols = rx.points.shape[0]
    tx_bits = source_bits(vp, source, n_symbols)
    ber = measure_ber(tx_bits, rx.bits)
    ref_points = modulate_symbols(vp, scramble(tx_bits, vp.params.scrambler))
    evm = measure_evm(ref_points, rx.points)
    return {
        "symbols": n_symbols,
        "errors": ber.errors,
        "total": ber.total,
        "ber": ber.ber,
        "evm_percent": evm.rms_percent,
        "evm_db": evm.rms_db,
    }


def cli_analyze(argv=None) -> int:
    return _run(_analyze_parser(), _analyze, argv)


def main_src() -> None:
    sys.exit(cli_src())


def main_analyze() -> None:
    sys.exit(cli_analyze())
