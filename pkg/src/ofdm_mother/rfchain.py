"""Analog/RF impairments applied to complex baseband buffers.

Neutral settings (each stage is then the identity):

    =============  ==============================
    Awgn           snr_db = inf
    Cfo            offset_hz = 0
    IqImbalance    gain_db = 0, phase_deg = 0
    PaRapp         input_saturation = inf
    Fir            taps = [1]
    =============  ==============================
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .numerics import gaussian_pairs
from .profiles import validate
from .txchain import IqBuffer

__all__ = [
    "Awgn",
    "Cfo",
    "IqImbalance",
    "PaRapp",
    "Fir",
    "Stage",
    "ImpairmentConfig",
    "awgn",
    "cfo",
    "iq_imbalance",
    "iq_imbalance_coefficients",
    "pa_rapp",
    "fir",
    "apply_chain",
    "parse_stage",
    "stage_from_dict",
    "stage_to_dict",
    "load_impairment_config",
    "snr_db_for_ebn0",
]


def _as_buffer(iq, sample_rate_hz: float | None = None) -> IqBuffer:
    if isinstance(iq, IqBuffer):
        return iq
    return IqBuffer(np.asarray(iq, dtype=complex), sample_rate_hz or 1.0)


def awgn(iq, snr_db: float, seed=0) -> IqBuffer:
    """Add CN(0, P/10^(snr_db/10)) noise, P being the measured mean power."""
    buf = _as_buffer(iq)
    x = buf.samples
    if x.size == 0:
        raise ValueError("awgn needs a non-empty buffer")
    if math.isinf(snr_db) and snr_db > 0:
        return buf.with_samples(x.copy())
    if math.isnan(snr_db):
        raise ValueError("snr_db must not be NaN")
    p_sig = float(np.mean(np.abs(x) ** 2))
    sigma = math.sqrt(p_sig / 10.0 ** (snr_db / 10.0))
    return buf.with_samples(x + sigma * gaussian_pairs(seed, x.size))


def cfo(iq, offset_hz: float, sample_rate_hz: float | None = None) -> IqBuffer:
    """Rotate by exp(j 2 pi offset_hz n / fs), n counted from the first sample."""
    buf = _as_buffer(iq, sample_rate_hz)
    fs = sample_rate_hz or buf.sample_rate_hz
    n = np.arange(len(buf.samples))
    return buf.with_samples(buf.samples * np.exp(2j * np.pi * (offset_hz / fs) * n))


def iq_imbalance_coefficients(gain_db: float, phase_deg: float) -> tuple[complex, complex]:
    """(alpha, beta) of y = alpha x + beta conj(x).

    With g = 10^(gain_db/20) and phi in radians::

        alpha = (1 + g exp(-j phi)) / 2
        beta  = (1 - g exp(+j phi)) / 2

    which is an ideal I branch and a Q branch with gain g and skew phi.
    Image rejection is |alpha/beta|.
    """
    g = 10.0 ** (gain_db / 20.0)
    phi = math.radians(phase_deg)
    alpha = (1.0 + g * complex(math.cos(phi), -math.sin(phi))) / 2.0
    beta = (1.0 - g * complex(math.cos(phi), math.sin(phi))) / 2.0
    return alpha, beta


def iq_imbalance(iq, gain_db: float, phase_deg: float) -> IqBuffer:
    buf = _as_buffer(iq)
    alpha, beta = iq_imbalance_coefficients(gain_db, phase_deg)
    x = buf.samples
    return buf.with_samples(alpha * x + beta * np.conj(x))


def pa_rapp(iq, smoothness_p: float, input_saturation: float) -> IqBuffer:
    """Rapp AM/AM: y = x / (1 + (|x|/vsat)^(2p))^(1/(2p)); phase unchanged."""
    if not smoothness_p > 0:
        raise ValueError(f"smoothness_p must be > 0, got {smoothness_p}")
    if not input_saturation > 0:
        raise ValueError(f"input_saturation must be > 0, got {input_saturation}")
    buf = _as_buffer(iq)
    x = buf.samples
    two_p = 2.0 * smoothness_p
    gain = (1.0 + (np.abs(x) / input_saturation) ** two_p) ** (-1.0 / two_p)
    return buf.with_samples(x * gain)


def fir(iq, taps: Sequence[complex]) -> IqBuffer:
    """Causal convolution y[n] = sum_m h[m] x[n-m], cut to the input length.

    Tap 0 is the direct path, so there is no added delay.
    """
    h = np.asarray(taps, dtype=complex).ravel()
    if h.size == 0:
        raise ValueError("fir needs at least one tap")
    buf = _as_buffer(iq)
    x = buf.samples
    return buf.with_samples(np.convolve(x, h)[: x.size])


@dataclass(frozen=True)
class Awgn:
    snr_db: float
    seed: int = 0

    def __post_init__(self):
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError(f"snr_db must be finite (or +inf for no noise), got {self.snr_db}")

    def apply(self, buf: IqBuffer) -> IqBuffer:
        return awgn(buf, self.snr_db, self.seed)


@dataclass(frozen=True)
class Cfo:
    offset_hz: float

    def apply(self, buf: IqBuffer) -> IqBuffer:
        return cfo(buf, self.offset_hz)


@dataclass(frozen=True)
class IqImbalance:
    gain_db: float = 0.0
    phase_deg: float = 0.0

    def apply(self, buf: IqBuffer) -> IqBuffer:
        return iq_imbalance(buf, self.gain_db, self.phase_deg)


@dataclass(frozen=True)
class PaRapp:
    smoothness_p: float
    input_saturation: float

    def __post_init__(self):
        if not self.smoothness_p > 0 or not self.input_saturation > 0:
            raise ValueError("pa_rapp needs smoothness_p > 0 and input_saturation > 0")

    def apply(self, buf: IqBuffer) -> IqBuffer:
        return pa_rapp(buf, self.smoothness_p, self.input_saturation)


@dataclass(frozen=True)
class Fir:
    taps: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "taps", tuple(complex(t) for t in self.taps))
        if not self.taps:
            raise ValueError("fir needs at least one tap")

    def apply(self, buf: IqBuffer) -> IqBuffer:
        return fir(buf, self.taps)


Stage = Union[Awgn, Cfo, IqImbalance, PaRapp, Fir]
ImpairmentConfig = Sequence[Stage]


def apply_chain(iq, config: Iterable[Stage]) -> IqBuffer:
    """Run ``config`` stages in order; an empty chain copies the input."""
    buf = _as_buffer(iq)
    out = buf.with_samples(buf.samples.copy())
    for stage in config:
        out = stage.apply(out)
    return out


# --- text / JSON forms -------------------------------------------------------------

_STAGES = {
    "awgn": (Awgn, {"snr_db": float, "seed": int}),
    "cfo": (Cfo, {"offset_hz": float}),
    "iq_imbalance": (IqImbalance, {"gain_db": float, "phase_deg": float}),
    "pa_rapp": (PaRapp, {"smoothness_p": float, "input_saturation": float}),
    "fir": (Fir, {"taps": None}),
}
_ALIASES = {"iq": "iq_imbalance", "rapp": "pa_rapp", "pa": "pa_rapp"}
_KEY_ALIASES = {"p": "smoothness_p", "vsat": "input_saturation", "snr": "snr_db",
                "offset": "offset_hz", "gain": "gain_db", "phase": "phase_deg"}
_NAMES = {cls: name for name, (cls, _) in _STAGES.items()}


def _parse_taps(value) -> tuple[complex, ...]:
    if isinstance(value, str):
        parts = [p for p in value.replace(" ", "").split(";") if p]
        return tuple(complex(p) for p in parts)
    out = []
    for v in value:
        out.append(complex(*v) if isinstance(v, (list, tuple)) else complex(v))
    return tuple(out)


def stage_from_dict(obj: dict) -> Stage:
    """Build a stage from ``{"type": name, **fields}``."""
    obj = dict(obj)
    name = obj.pop("type", None)
    name = _ALIASES.get(name, name)
    if name not in _STAGES:
        raise ValueError(f"unknown impairment {name!r}; expected one of {sorted(_STAGES)}")
    cls, fields = _STAGES[name]
    kwargs = {}
    for key, value in obj.items():
        key = _KEY_ALIASES.get(key, key)
        if key not in fields:
            raise ValueError(f"{name}: unknown parameter {key!r}; expected {sorted(fields)}")
        conv = fields[key]
        kwargs[key] = _parse_taps(value) if key == "taps" else conv(value)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValueError(f"{name}: {exc}") from None


def parse_stage(text: str) -> Stage:
    """Parse the command-line form ``name:key=value,key=value``.

    FIR taps are separated by semicolons: ``fir:taps=1;0.3j``.
    """
    name, _, rest = text.partition(":")
    obj: dict = {"type": name.strip()}
    if rest.strip():
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"expected key=value in {item!r}")
            obj[key.strip()] = value.strip()
    return stage_from_dict(obj)


def stage_to_dict(stage: Stage) -> dict:
    out = {"type": _NAMES[type(stage)]}
    for key in _STAGES[out["type"]][1]:
        value = getattr(stage, key)
        if key == "taps":
            value = [[t.real, t.imag] for t in value]
        out[key] = value
    return out


def load_impairment_config(text: str) -> list[Stage]:
    """JSON list of stage objects, or ``{"stages": [...]}``."""
    doc = json.loads(text)
    if isinstance(doc, dict):
        doc = doc.get("stages", [])
    return [stage_from_dict(s) for s in doc]


def snr_db_for_ebn0(ebn0_db: float, params) -> float:
    """Per-sample SNR that gives ``ebn0_db`` on the data subcarriers.

    Unit-energy subcarrier points through the 1/N inverse transform give a
    sample power of n_used/N^2, while the unscaled receive DFT puts N times
    the per-sample noise into each bin. Hence Es/N0 = SNR * N / n_used and
    Eb/N0 = Es/N0 / (mean bits per data subcarrier).
    """
    vp = validate(params)
    bits_per_bin = vp.bits_per_symbol / vp.n_data
    esn0_db = ebn0_db + 10.0 * math.log10(bits_per_bin)
    return esn0_db - 10.0 * math.log10(vp.fft_size / len(vp.used_bins))
