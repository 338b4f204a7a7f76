"""The parameter-driven OFDM transmitter.

Every standard runs through the same :func:`generate_frame` call; nothing in
this module knows which standard a parameter set describes.

Frame layout (L = fft_size + cp_len, r = window_rolloff, S = number of
OFDM symbols including the optional reference symbol)::

    symbol i occupies samples [i*L, (i+1)*L)  (cyclic prefix, then body)
    total length = S*L + r

With r > 0 each symbol also carries an r-sample cyclic postfix. Its first r
samples are ramped up and the postfix ramped down, and the postfix is
overlap-added onto the start of the next symbol's prefix. So each junction
costs r samples relative to S separate (L + r)-sample symbols, and only the
last postfix sticks out past S*L. The FFT bodies are never touched because
2*r <= cp_len.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import idft, lfsr_bits, raised_cosine_taper
from .profiles import (
    MotherModelParams,
    Role,
    ScramblerSpec,
    ValidatedParams,
    bits_per_symbol,
    validate,
)

__all__ = [
    "IqBuffer",
    "FreqSymbol",
    "map_bits",
    "demap_points",
    "constellation_points",
    "assemble_symbol",
    "add_cyclic_prefix",
    "hermitian_extend",
    "pilot_polarity",
    "reference_values",
    "prbs_bits",
    "scramble",
    "source_bits",
    "modulate_symbols",
    "frame_length",
    "generate_frame",
]

# ITU-T O.150 PRBS-31 (x^31 + x^28 + 1); default payload source.
PRBS_TAPS = (31, 28)
# Fixed generator for the reference-symbol BPSK pattern.
_REF_LFSR = ScramblerSpec((9, 5), seed=(1 << 9) - 1)


@dataclass(frozen=True)
class IqBuffer:
    """Complex baseband samples tagged with their sample rate and source."""

    samples: np.ndarray
    sample_rate_hz: float
    profile: str = ""

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def with_samples(self, samples) -> "IqBuffer":
        return IqBuffer(samples, self.sample_rate_hz, self.profile)


@dataclass(frozen=True)
class FreqSymbol:
    """One OFDM symbol in DFT bin order."""

    bins: np.ndarray
    index: int = 0


# --- constellation mapping ----------------------------------------------------

def _gray_levels(m: int) -> np.ndarray:
    """Amplitude of each m-bit Gray label (MSB first), bit 1 pulling positive."""
    L = 1 << m
    idx = np.arange(L)
    # Natural index -> Gray code; invert to get the level index of a label.
    gray = idx ^ (idx >> 1)
    level_of_label = np.empty(L, dtype=np.intp)
    level_of_label[gray] = idx
    return (2 * level_of_label - (L - 1)).astype(float)


@lru_cache(maxsize=None)
def _axis_table(kind: str) -> tuple[int, int, np.ndarray, float]:
    b = bits_per_symbol(kind)
    if b == 1:
        return 1, 0, np.array([-1.0, 1.0]), 1.0
    m = b // 2
    order = 1 << b
    scale = 1.0 / np.sqrt(2.0 * (order - 1) / 3.0)
    return b, m, _gray_levels(m), scale


def _bits_to_int(bits: np.ndarray) -> np.ndarray:
    """Rows of MSB-first bits to integers."""
    w = bits.shape[-1]
    weights = 1 << np.arange(w - 1, -1, -1)
    return bits.astype(np.intp) @ weights


def map_bits(bits, kind: str) -> np.ndarray:
    """Gray-coded unit-energy mapping of a bit stream onto ``kind`` points.

    BPSK sends 0 -> -1, 1 -> +1. Square QAM takes the first half of each
    label for I and the second half for Q, each axis Gray coded with bit 1
    meaning the positive side (QPSK: (1, 1) -> (1 + 1j)/sqrt(2)).
    """
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    b, m, levels, scale = _axis_table(kind)
    if bits.size % b:
        raise ValueError(f"{bits.size} bits is not a multiple of {b} for {kind}")
    groups = bits.reshape(-1, b)
    if b == 1:
        return levels[groups[:, 0]].astype(complex)
    i = levels[_bits_to_int(groups[:, :m])]
    q = levels[_bits_to_int(groups[:, m:])]
    return (i + 1j * q) * scale


def constellation_points(kind: str) -> np.ndarray:
    """All points of ``kind`` indexed by their integer label."""
    b = bits_per_symbol(kind)
    labels = np.arange(1 << b)
    bits = ((labels[:, None] >> np.arange(b - 1, -1, -1)) & 1).astype(np.uint8)
    return map_bits(bits.ravel(), kind)


def demap_points(points, kind: str) -> np.ndarray:
    """Hard nearest-point decisions, returned as the flattened bit stream."""
    z = np.asarray(points, dtype=complex).ravel()
    b, m, levels, scale = _axis_table(kind)
    if b == 1:
        return (z.real > 0).astype(np.uint8)
    L = 1 << m
    gray_of_level = np.arange(L) ^ (np.arange(L) >> 1)

    def axis(v):
        lvl = np.clip(np.rint((v / scale + (L - 1)) / 2.0), 0, L - 1).astype(np.intp)
        lab = gray_of_level[lvl]
        return (lab[:, None] >> np.arange(m - 1, -1, -1)) & 1

    return np.concatenate((axis(z.real), axis(z.imag)), axis=1).astype(np.uint8).ravel()


# --- bit sources ----------------------------------------------------------------

def prbs_bits(seed: int, count: int) -> np.ndarray:
    """Default payload: PRBS-31 started from a state derived from ``seed``."""
    state = int(np.random.SeedSequence(int(seed)).generate_state(1, np.uint64)[0])
    state &= (1 << 31) - 1
    return lfsr_bits(ScramblerSpec(PRBS_TAPS, seed=state or 1), count)


def scramble(bits: np.ndarray, spec: ScramblerSpec | None) -> np.ndarray:
    """Additive scrambling; the same call descrambles."""
    bits = np.asarray(bits, dtype=np.uint8)
    if spec is None:
        return bits.copy()
    return bits ^ lfsr_bits(spec, bits.size).reshape(bits.shape)


def source_bits(params, source, n_symbols: int) -> np.ndarray:
    """Payload bits for ``n_symbols`` OFDM symbols (before scrambling).

    ``source`` is either an integer PRBS seed or an explicit bit array; an
    explicit array must hold at least the required number of bits and only
    its head is used.
    """
    vp = validate(params)
    need = n_symbols * vp.bits_per_symbol
    if isinstance(source, (int, np.integer)):
        return prbs_bits(int(source), need)
    bits = np.asarray(source, dtype=np.uint8).ravel()
    if bits.size < need:
        raise ValueError(f"need {need} bits for {n_symbols} symbols, got {bits.size}")
    if np.any(bits > 1):
        raise ValueError("bit array may only contain 0 and 1")
    return bits[:need]


# --- symbol assembly --------------------------------------------------------------

def pilot_polarity(params, n_symbols: int) -> np.ndarray:
    """Per-symbol pilot multiplier (+1 for LFSR output 0, -1 for 1)."""
    vp = validate(params)
    spec = vp.params.pilot_spec.polarity
    if spec is None:
        return np.ones(n_symbols)
    return 1.0 - 2.0 * lfsr_bits(spec, n_symbols)


def _map_rows(vp: ValidatedParams, bits: np.ndarray) -> np.ndarray:
    """(n_sym, bits_per_symbol) bits -> (n_sym, n_data) points."""
    n_sym = bits.shape[0]
    out = np.empty((n_sym, vp.n_data), dtype=complex)
    offsets = np.concatenate(([0], np.cumsum(vp.data_bits)[:-1]))
    kinds = np.array(vp.data_kinds)
    for kind in dict.fromkeys(vp.data_kinds):
        cols = np.flatnonzero(kinds == kind)
        b = bits_per_symbol(kind)
        gather = offsets[cols][:, None] + np.arange(b)
        out[:, cols] = map_bits(bits[:, gather].reshape(-1), kind).reshape(n_sym, cols.size)
    return out


def modulate_symbols(params, bits) -> np.ndarray:
    """Map already-scrambled bits onto data subcarriers, one row per symbol."""
    vp = validate(params)
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size % vp.bits_per_symbol:
        raise ValueError(f"bit count {bits.size} is not a multiple of {vp.bits_per_symbol}")
    return _map_rows(vp, bits.reshape(-1, vp.bits_per_symbol))


def _assemble_rows(vp: ValidatedParams, data: np.ndarray, polarity: np.ndarray) -> np.ndarray:
    X = np.zeros((data.shape[0], vp.fft_size), dtype=complex)
    X[:, vp.data_bins] = data
    if len(vp.pilot_bins):
        X[:, vp.pilot_bins] = polarity[:, None] * vp.pilot_values
    return X


def assemble_symbol(data_syms, params, symbol_index: int = 0) -> FreqSymbol:
    """Place data points and polarity-scaled pilots on the DFT grid."""
    vp = validate(params)
    data = np.asarray(data_syms, dtype=complex).ravel()
    if data.size != vp.n_data:
        raise ValueError(f"expected {vp.n_data} data symbols, got {data.size}")
    pol = pilot_polarity(vp, symbol_index + 1)[symbol_index:]
    return FreqSymbol(_assemble_rows(vp, data[None, :], pol)[0], symbol_index)


def reference_values(params) -> np.ndarray:
    """Known reference symbol in DFT order.

    Pilot bins carry their pilot value and data bins a fixed BPSK pattern;
    null and DC bins stay 0.
    """
    vp = validate(params)
    X = np.zeros(vp.fft_size, dtype=complex)
    X[vp.data_bins] = 1.0 - 2.0 * lfsr_bits(_REF_LFSR, vp.n_data)
    X[vp.pilot_bins] = vp.pilot_values
    return X


def hermitian_extend(freq_symbol) -> FreqSymbol:
    """Mirror positive-frequency bins so the IDFT output is real.

    Sets X[N-k] = conj(X[k]) for k = 1..ceil(N/2)-1. Every negative-logical
    bin must be zero on input and the DC bin must be real.
    """
    if isinstance(freq_symbol, FreqSymbol):
        X, index = np.asarray(freq_symbol.bins, dtype=complex), freq_symbol.index
    else:
        X, index = np.asarray(freq_symbol, dtype=complex), 0
    n = X.shape[-1]
    neg = np.arange(n // 2, n)
    if np.any(X[..., neg] != 0):
        raise ValueError("hermitian_extend needs all negative-frequency bins empty")
    if np.any(X[..., 0].imag != 0):
        raise ValueError("hermitian_extend needs a real DC bin")
    Y = X.copy()
    k = np.arange(1, (n + 1) // 2)
    Y[..., n - k] = np.conj(X[..., k])
    return FreqSymbol(Y, index)


def add_cyclic_prefix(time_symbol, cp_len: int) -> np.ndarray:
    """Prepend the last ``cp_len`` samples (works row-wise on 2-D input)."""
    x = np.asarray(time_symbol)
    n = x.shape[-1]
    if not 0 <= cp_len < n:
        raise ValueError(f"cp_len must satisfy 0 <= cp_len < {n}, got {cp_len}")
    if cp_len == 0:
        return x.copy()
    return np.concatenate((x[..., n - cp_len:], x), axis=-1)


# --- frame generation --------------------------------------------------------------

def frame_length(params, n_symbols: int) -> int:
    """Sample count of a frame carrying ``n_symbols`` payload symbols."""
    vp = validate(params)
    total = n_symbols + int(vp.params.reference_symbol)
    return total * vp.symbol_len + vp.window_rolloff


def _time_rows(vp: ValidatedParams, X: np.ndarray, real_output: bool) -> np.ndarray:
    if real_output:
        X = hermitian_extend(X).bins
    return idft(X)


def _serialize(vp: ValidatedParams, x: np.ndarray) -> np.ndarray:
    """CP, optional taper/overlap-add, and concatenation of (S, N) bodies."""
    n, cp, r = vp.fft_size, vp.cp_len, vp.window_rolloff
    L = n + cp
    rows = add_cyclic_prefix(x, cp)
    S = rows.shape[0]
    if r == 0:
        return rows.reshape(-1)
    ramp = raised_cosine_taper(r)
    rows = rows.copy()
    rows[:, :r] *= ramp
    postfix = x[:, :r] * ramp[::-1]
    out = np.zeros(S * L + r, dtype=complex)
    out[:S * L] = rows.reshape(-1)
    idx = (np.arange(1, S + 1) * L)[:, None] + np.arange(r)
    out[idx] += postfix
    return out


def generate_frame(params, source=0, n_symbols: int | None = None, *,
                   real_output: bool = False) -> IqBuffer:
    """Bits to baseband IQ for any parameter set.

    Args:
        params: a :class:`MotherModelParams` or :class:`ValidatedParams`.
        source: integer PRBS seed, or an explicit payload bit array.
        n_symbols: payload OFDM symbols; defaults to ``symbols_per_frame``.
        real_output: mirror each symbol (``hermitian_extend``) so the line
            signal is real, as a DMT modem emits it.

    Pipeline: scramble -> map -> assemble -> idft -> cyclic prefix ->
    taper/overlap-add -> concatenate, with the reference symbol first when
    the profile asks for one. See the module docstring for the length rule.
    """
    vp = validate(params)
    p = vp.params
    if n_symbols is None:
        n_symbols = p.symbols_per_frame
    if not isinstance(n_symbols, (int, np.integer)) or n_symbols < 1:
        raise ValueError(f"n_symbols must be a positive integer, got {n_symbols!r}")
    bits = scramble(source_bits(vp, source, n_symbols), p.scrambler)
    data = _map_rows(vp, bits.reshape(n_symbols, vp.bits_per_symbol))
    X = _assemble_rows(vp, data, pilot_polarity(vp, n_symbols))
    if p.reference_symbol:
        X = np.vstack((reference_values(vp)[None, :], X))
    samples = _serialize(vp, _time_rows(vp, X, real_output))
    return IqBuffer(samples, p.sample_rate_hz, p.name)
