"""Spectral and envelope measurements on IQ buffers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import dft
from .profiles import Role, validate
from .rxoracle import DB_FLOOR, symbol_spectra
from .txchain import IqBuffer

__all__ = [
    "PsdReport",
    "OccupancyReport",
    "PaprReport",
    "psd_welch",
    "occupancy_report",
    "papr",
    "to_db",
]


def to_db(power) -> np.ndarray:
    """10*log10 with zero (and anything below the floor) clamped to -200 dB."""
    p = np.asarray(power, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(p)
    return np.maximum(np.nan_to_num(out, nan=DB_FLOOR, neginf=DB_FLOOR), DB_FLOOR)


@dataclass(frozen=True)
class PsdReport:
    """Welch estimate; ``power_db`` is power per bin (bins sum to mean |x|^2)."""

    freq_bins_hz: np.ndarray
    power_db: np.ndarray
    nfft: int
    segments: int

    @property
    def peak_hz(self) -> float:
        return float(self.freq_bins_hz[int(np.argmax(self.power_db))])

    def total_power(self) -> float:
        return float(np.sum(10.0 ** (self.power_db / 10.0)))


def _window(name: str, n: int) -> np.ndarray:
    name = name.lower()
    if name == "hann":
        # Periodic Hann: overlap-adds to a constant at 50 % overlap.
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    if name in ("rect", "rectangular", "boxcar"):
        return np.ones(n)
    raise ValueError(f"unknown window {name!r}; use 'hann' or 'rect'")


def psd_welch(iq, nfft: int = 1024, overlap: float = 0.5, window: str = "hann",
              sample_rate_hz: float | None = None) -> PsdReport:
    """Welch-averaged periodogram over [-fs/2, fs/2).

    Each segment is windowed and transformed; |X|^2 is divided by
    nfft * sum(w^2) so that the bins of the average add up to the mean
    signal power.
    """
    if isinstance(iq, IqBuffer):
        x = iq.samples
        fs = sample_rate_hz or iq.sample_rate_hz
    else:
        x = np.asarray(iq, dtype=complex)
        fs = sample_rate_hz or 1.0
    if nfft < 1:
        raise ValueError("nfft must be positive")
    if x.size < nfft:
        raise ValueError(f"buffer of {x.size} samples is shorter than nfft={nfft}")
    if not 0.0 <= overlap < 1.0:
        raise ValueError(f"overlap must be in [0, 1), got {overlap}")
    w = _window(window, nfft)
    step = max(1, int(round(nfft * (1.0 - overlap))))
    starts = np.arange(0, x.size - nfft + 1, step)
    acc = np.zeros(nfft)
    # Fixed-size chunks, summed in index order, bound memory for long inputs.
    for i in range(0, len(starts), 256):
        segs = x[starts[i:i + 256, None] + np.arange(nfft)] * w
        acc += np.sum(np.abs(dft(segs)) ** 2, axis=0)
    p = acc / (len(starts) * nfft * np.sum(w ** 2))
    p = np.fft.fftshift(p)
    freqs = np.fft.fftshift(np.fft.fftfreq(nfft, d=1.0 / fs))
    return PsdReport(freqs, to_db(p), nfft, len(starts))


@dataclass(frozen=True)
class OccupancyReport:
    """Mean power of every logical subcarrier over the frame's symbols.

    ``power_dbc`` is relative to the mean power of the occupied bins.
    ``occupied`` marks bins within ``threshold_dbc`` of that reference.
    """

    logical_k: np.ndarray
    power_dbc: np.ndarray
    occupied: np.ndarray
    reference_power: float
    threshold_dbc: float

    @property
    def occupied_k(self) -> list[int]:
        return self.logical_k[self.occupied].tolist()

    def null_suppression_db(self, params) -> float:
        """How far the strongest declared null/DC bin sits below the reference."""
        vp = validate(params)
        smap = vp.params.subcarrier_map
        quiet = np.array([r in (Role.NULL, Role.DC) for r in smap.roles])
        if not quiet.any():
            return math.inf
        return float(-np.max(self.power_dbc[quiet]))

    def used_spread_db(self, params) -> float:
        """Peak-to-peak spread of the declared data/pilot bins, in dB."""
        vp = validate(params)
        smap = vp.params.subcarrier_map
        used = np.array([r in (Role.DATA, Role.PILOT) for r in smap.roles])
        vals = self.power_dbc[used]
        return float(vals.max() - vals.min())


def occupancy_report(iq, params, threshold_dbc: float = -60.0) -> OccupancyReport:
    """Per-subcarrier power from symbol-aligned DFTs with the CP removed."""
    vp = validate(params)
    Y = symbol_spectra(iq, vp)
    n = vp.fft_size
    power = np.mean(np.abs(Y) ** 2, axis=0)
    logical = vp.params.subcarrier_map.logical_indices()
    power = power[logical % n]
    peak = power.max()
    if peak == 0:
        dbc = np.full(n, DB_FLOOR)
        return OccupancyReport(logical, dbc, np.zeros(n, dtype=bool), 0.0, threshold_dbc)
    strong = power >= peak * 10.0 ** (threshold_dbc / 10.0)
    ref = float(power[strong].mean())
    dbc = to_db(power / ref)
    return OccupancyReport(logical, dbc, dbc > threshold_dbc, ref, threshold_dbc)


@dataclass(frozen=True)
class PaprReport:
    overall_db: float
    per_window_db: np.ndarray
    window_len: int


def _papr_db(x: np.ndarray) -> float:
    p = np.abs(x) ** 2
    mean = p.mean()
    if mean == 0:
        return 0.0
    return float(10.0 * np.log10(p.max() / mean))


def papr(iq, window_len: int | None = None) -> PaprReport:
    """10*log10(max|x|^2 / mean|x|^2), overall and per window.

    ``window_len`` is in samples (e.g. a multiple of the symbol length);
    ``None`` means one window over the whole buffer. A trailing partial
    window is kept. An all-zero buffer or window reports 0 dB.
    """
    x = iq.samples if isinstance(iq, IqBuffer) else np.asarray(iq, dtype=complex)
    if x.size == 0:
        raise ValueError("papr needs a non-empty buffer")
    overall = _papr_db(x)
    if window_len is None or window_len >= x.size:
        return PaprReport(overall, np.array([overall]), x.size)
    if window_len < 1:
        raise ValueError("window_len must be positive")
    per = np.array([_papr_db(x[i:i + window_len]) for i in range(0, x.size, window_len)])
    return PaprReport(overall, per, window_len)
