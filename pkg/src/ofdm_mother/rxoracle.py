"""Loopback reference demodulator used to verify the transmitter.

It expects frame-aligned samples and the exact parameter set used to
generate them; there is no timing or frequency synchronisation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import dft
from .profiles import validate
from .txchain import IqBuffer, demap_points, pilot_polarity, reference_values, scramble

__all__ = [
    "DemodResult",
    "EvmReport",
    "BerReport",
    "DB_FLOOR",
    "frame_symbol_count",
    "symbol_spectra",
    "demodulate",
    "measure_evm",
    "measure_ber",
]

DB_FLOOR = -200.0


@dataclass(frozen=True)
class DemodResult:
    bits: np.ndarray
    points: np.ndarray  # (n_symbols, n_data) equalised points before decisions
    channel: np.ndarray | None = None  # per-bin gain estimate, DFT order


@dataclass(frozen=True)
class EvmReport:
    rms_percent: float
    rms_db: float
    per_symbol: np.ndarray  # percent


@dataclass(frozen=True)
class BerReport:
    errors: int
    total: int
    ber: float


def _samples(iq) -> np.ndarray:
    return iq.samples if isinstance(iq, IqBuffer) else np.asarray(iq, dtype=complex)


def frame_symbol_count(n_samples: int, params) -> int:
    """OFDM symbols (reference included) in a frame of ``n_samples``."""
    vp = validate(params)
    body = n_samples - vp.window_rolloff
    if body <= 0 or body % vp.symbol_len:
        raise ValueError(
            f"{n_samples} samples is not a whole number of {vp.symbol_len}-sample symbols"
            + (f" plus a {vp.window_rolloff}-sample tail" if vp.window_rolloff else ""))
    return body // vp.symbol_len


def symbol_spectra(iq, params) -> np.ndarray:
    """DFT of every CP-stripped symbol body, shape (n_symbols, fft_size)."""
    vp = validate(params)
    x = _samples(iq)
    S = frame_symbol_count(x.size, vp)
    rows = x[: S * vp.symbol_len].reshape(S, vp.symbol_len)[:, vp.cp_len:]
    return dft(rows)


def demodulate(iq, params, equalize: bool = False, track_phase: bool = True) -> DemodResult:
    """Recover payload bits from a frame-aligned buffer.

    Per symbol: strip CP, DFT, divide by the per-bin channel estimate from
    the reference symbol (``equalize``), remove the common phase seen on the
    pilots (``track_phase``, when the profile has pilots), hard-demap and
    descramble.

    Raises:
        ValueError: misaligned length, or ``equalize`` without a reference
            symbol in the profile.
    """
    vp = validate(params)
    p = vp.params
    if equalize and not p.reference_symbol:
        raise ValueError("equalize=True needs a profile with reference_symbol enabled")
    Y = symbol_spectra(iq, vp)
    H = None
    if p.reference_symbol:
        ref, Y = Y[0], Y[1:]
        if equalize:
            known = reference_values(vp)
            H = np.ones(vp.fft_size, dtype=complex)
            H[vp.used_bins] = ref[vp.used_bins] / known[vp.used_bins]
            Y = Y / H
    n_sym = Y.shape[0]
    if n_sym < 1:
        raise ValueError("frame carries no payload symbols")
    data = Y[:, vp.data_bins]
    if track_phase and len(vp.pilot_bins):
        expected = pilot_polarity(vp, n_sym)[:, None] * vp.pilot_values
        corr = np.sum(Y[:, vp.pilot_bins] * np.conj(expected), axis=1)
        data = data * np.exp(-1j * np.angle(corr))[:, None]

    kinds = np.array(vp.data_kinds)
    offsets = np.concatenate(([0], np.cumsum(vp.data_bits)[:-1]))
    bits = np.empty((n_sym, vp.bits_per_symbol), dtype=np.uint8)
    for kind in dict.fromkeys(vp.data_kinds):
        cols = np.flatnonzero(kinds == kind)
        b = int(vp.data_bits[cols[0]])
        decided = demap_points(data[:, cols], kind).reshape(n_sym, cols.size, b)
        bits[:, offsets[cols][:, None] + np.arange(b)] = decided
    payload = scramble(bits.reshape(-1), p.scrambler)
    return DemodResult(payload, data, H)


def _db(ratio: float) -> float:
    return max(20.0 * math.log10(ratio), DB_FLOOR) if ratio > 0 else DB_FLOOR


def measure_evm(ref_points, rx_points) -> EvmReport:
    """RMS error vector magnitude, normalised by the reference power.

    2-D inputs are treated as (symbols, points) and also give a per-symbol
    EVM; 1-D inputs count as a single symbol.
    """
    ref = np.asarray(ref_points, dtype=complex)
    rx = np.asarray(rx_points, dtype=complex)
    if ref.shape != rx.shape:
        raise ValueError(f"point count mismatch: {ref.shape} vs {rx.shape}")
    if ref.size == 0:
        raise ValueError("no points to compare")
    ref_pow = np.mean(np.abs(ref) ** 2)
    if ref_pow == 0:
        raise ValueError("reference points have zero power")
    err = np.abs(rx - ref) ** 2
    evm = math.sqrt(np.mean(err) / ref_pow)
    row_pow = np.mean(np.abs(np.atleast_2d(ref)) ** 2, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        per = np.sqrt(np.atleast_2d(err).mean(axis=1) / row_pow)
    return EvmReport(100.0 * evm, _db(evm), 100.0 * per)


def measure_ber(tx_bits, rx_bits) -> BerReport:
    tx = np.asarray(tx_bits, dtype=np.uint8).ravel()
    rx = np.asarray(rx_bits, dtype=np.uint8).ravel()
    if tx.size != rx.size:
        raise ValueError(f"bit count mismatch: {tx.size} vs {rx.size}")
    errors = int(np.count_nonzero(tx != rx))
    return BerReport(errors, tx.size, errors / tx.size if tx.size else 0.0)
