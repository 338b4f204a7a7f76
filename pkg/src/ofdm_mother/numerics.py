"""Deterministic numeric kernel shared by the transmitter, channel and oracle.

Transform convention used everywhere in the package::

    dft:   X[k] = sum_n x[n] exp(-j 2 pi k n / N)
    idft:  x[n] = (1/N) sum_k X[k] exp(+j 2 pi k n / N)

Power-of-two lengths use an iterative radix-2 kernel; every other length
goes through Bluestein's chirp-z algorithm on top of it.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "dft",
    "idft",
    "lfsr_bits",
    "lfsr_step_bits",
    "raised_cosine_taper",
    "gaussian_pairs",
]


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@lru_cache(maxsize=64)
def _bitrev(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


@lru_cache(maxsize=64)
def _twiddles(n: int) -> tuple:
    out = []
    m = 1
    while m < n:
        w = np.exp(-1j * np.pi * np.arange(m) / m)
        w.setflags(write=False)
        out.append(w)
        m *= 2
    return tuple(out)


def _fft_pow2(x: np.ndarray) -> np.ndarray:
    """Forward radix-2 DIT transform along the last axis (length power of two)."""
    n = x.shape[-1]
    batch = x.shape[:-1]
    y = x[..., _bitrev(n)]
    m = 1
    for w in _twiddles(n):
        y = y.reshape(*batch, n // (2 * m), 2, m)
        even = y[..., 0, :]
        odd = y[..., 1, :] * w
        y = np.concatenate((even + odd, even - odd), axis=-1)
        m *= 2
    return y.reshape(*batch, n)


@lru_cache(maxsize=32)
def _bluestein_plan(n: int) -> tuple:
    m = 1
    while m < 2 * n - 1:
        m *= 2
    k = np.arange(n, dtype=np.int64)
    # k^2 mod 2n keeps the chirp argument small and exact.
    chirp = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
    b = np.zeros(m, dtype=complex)
    b[:n] = np.conj(chirp)
    b[m - n + 1:] = np.conj(chirp[1:])[::-1]
    b_hat = _fft_pow2(b)
    chirp.setflags(write=False)
    b_hat.setflags(write=False)
    return m, chirp, b_hat


def _fft_bluestein(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    m, chirp, b_hat = _bluestein_plan(n)
    a = np.zeros(x.shape[:-1] + (m,), dtype=complex)
    a[..., :n] = x * chirp
    conv = np.conj(_fft_pow2(np.conj(_fft_pow2(a) * b_hat))) / m
    return conv[..., :n] * chirp


def dft(x) -> np.ndarray:
    """Forward DFT along the last axis, any length >= 1, no scaling."""
    x = np.asarray(x, dtype=complex)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ValueError("dft requires a non-empty last axis")
    n = x.shape[-1]
    if _is_pow2(n):
        return _fft_pow2(x)
    return _fft_bluestein(x)


def idft(X) -> np.ndarray:
    """Inverse DFT along the last axis with 1/N scaling."""
    X = np.asarray(X, dtype=complex)
    if X.ndim == 0 or X.shape[-1] == 0:
        raise ValueError("idft requires a non-empty last axis")
    n = X.shape[-1]
    return np.conj(dft(np.conj(X))) / n


def _register(taps, width: int, seed: int) -> list[int]:
    if seed <= 0 or seed >= (1 << width):
        raise ValueError(f"LFSR seed must be a nonzero {width}-bit value, got {seed}")
    if not taps or min(taps) < 1 or max(taps) > width:
        raise ValueError(f"LFSR taps {tuple(taps)} must lie in 1..{width}")
    # Register cell t (1-based) holds seed bit t-1.
    return [(seed >> t) & 1 for t in range(width)]


def lfsr_step_bits(taps, width: int, seed: int, count: int) -> np.ndarray:
    """Reference state-by-state Fibonacci LFSR.

    Each step outputs the XOR of the tapped cells and shifts that bit into
    cell 1. This is the 802.11a scrambler structure.
    """
    reg = _register(taps, width, seed)
    out = np.empty(count, dtype=np.uint8)
    for i in range(count):
        bit = 0
        for t in taps:
            bit ^= reg[t - 1]
        out[i] = bit
        reg = [bit] + reg[:-1]
    return out


def lfsr_bits(spec, count: int) -> np.ndarray:
    """Output bits of the Fibonacci LFSR described by ``spec``.

    ``spec`` needs ``taps``, ``width`` and ``seed`` attributes (see
    :class:`ofdm_mother.profiles.ScramblerSpec`). Bits are returned as a
    uint8 array of 0/1.

    The output obeys o[n] = XOR_t o[n - t] once n >= max(taps). Squaring the
    feedback polynomial over GF(2) gives o[n] = XOR_t o[n - t * 2**j] as well,
    so the sequence is extended in geometrically growing numpy slices instead
    of one bit at a time.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    taps = tuple(int(t) for t in spec.taps)
    width = int(spec.width)
    seed = int(spec.seed)
    head_len = min(count, 2 * max(taps))
    head = lfsr_step_bits(taps, width, seed, head_len)
    if count <= head_len:
        return head
    out = np.empty(count, dtype=np.uint8)
    out[:head_len] = head
    filled = head_len
    tmax = max(taps)
    tmin = min(taps)
    while filled < count:
        scale = 1
        while tmax * scale * 2 <= filled:
            scale *= 2
        step = min(tmin * scale, count - filled)
        block = np.zeros(step, dtype=np.uint8)
        for t in taps:
            lag = t * scale
            block ^= out[filled - lag:filled - lag + step]
        out[filled:filled + step] = block
        filled += step
    return out


def raised_cosine_taper(rolloff: int) -> np.ndarray:
    """Rising half-cosine edge w[i] = 0.5 (1 - cos(pi (i + 0.5) / rolloff)).

    The falling edge is ``w[::-1]``; the two sum to one sample by sample.
    """
    if rolloff < 0:
        raise ValueError("rolloff must be non-negative")
    if rolloff == 0:
        return np.zeros(0)
    i = np.arange(rolloff)
    return 0.5 * (1.0 - np.cos(np.pi * (i + 0.5) / rolloff))


def gaussian_pairs(seed, count: int) -> np.ndarray:
    """``count`` i.i.d. CN(0, 1) samples (each component has variance 1/2)."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, 2))
    return (g[:, 0] + 1j * g[:, 1]) * np.sqrt(0.5)
