"""Headerless IQ sample files with a JSON sidecar.

Payload layouts:

* ``cf32le``: interleaved I, Q as little-endian IEEE-754 float32 (8 bytes
  per complex sample).
* ``cf64le``: the same with float64 (16 bytes per sample).
* ``csv``: one ``i,q`` line per sample written with ``repr`` precision.
  Slow and large; meant for eyeballing in a spreadsheet.

The sidecar lives next to the payload as ``<path>.meta.json`` and records
``format``, ``sample_rate_hz``, ``profile``, ``seed`` and ``sample_count``.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .txchain import IqBuffer

__all__ = [
    "FORMATS",
    "IqFileError",
    "sidecar_path",
    "write_iq",
    "read_iq",
    "read_sidecar",
    "write_json",
]

FORMATS = {"cf32le": np.dtype("<f4"), "cf64le": np.dtype("<f8"), "csv": None}
_EXTENSIONS = {".cf32": "cf32le", ".cf64": "cf64le", ".csv": "csv",
               ".cf32le": "cf32le", ".cf64le": "cf64le"}


class IqFileError(ValueError):
    pass


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_json(path, obj) -> None:
    """Deterministic JSON (sorted keys, fixed indent, trailing newline)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def format_from_extension(path) -> str | None:
    return _EXTENSIONS.get(Path(path).suffix.lower())


def write_iq(iq: IqBuffer, path, fmt: str = "cf32le", seed=None, extra: dict | None = None) -> Path:
    """Write samples plus sidecar; returns the sidecar path."""
    if fmt not in FORMATS:
        raise IqFileError(f"unknown format {fmt!r}; expected one of {sorted(FORMATS)}")
    x = np.asarray(iq.samples, dtype=complex)
    if not np.all(np.isfinite(x)):
        raise IqFileError("refusing to write non-finite samples")
    if fmt == "csv":
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(f"{v.real!r},{v.imag!r}\n" for v in x.tolist())
    else:
        inter = np.empty(2 * x.size, dtype=FORMATS[fmt])
        inter[0::2] = x.real
        inter[1::2] = x.imag
        with open(path, "wb") as fh:
            fh.write(inter.tobytes())
    meta = {
        "format": fmt,
        "sample_rate_hz": float(iq.sample_rate_hz),
        "profile": iq.profile,
        "seed": seed,
        "sample_count": int(x.size),
    }
    if extra:
        meta.update(extra)
    side = sidecar_path(path)
    write_json(side, meta)
    return side


def read_sidecar(path) -> dict | None:
    side = sidecar_path(path)
    if not side.exists():
        return None
    try:
        with open(side, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise IqFileError(f"{side}: malformed sidecar ({exc.msg})") from None


def read_iq(path, fmt: str | None = None, sample_rate_hz: float | None = None) -> IqBuffer:
    """Read a payload and check it against its sidecar.

    ``fmt`` and ``sample_rate_hz`` override the sidecar; without a sidecar
    both must come from the caller (the format may also follow from the
    file extension).

    Raises:
        IqFileError: unknown format, truncated payload, or a sidecar whose
            sample count or format disagrees with the payload.
        OSError: the file cannot be read.
    """
    meta = read_sidecar(path)
    if fmt is None:
        fmt = (meta or {}).get("format") or format_from_extension(path)
    if fmt is None:
        raise IqFileError(f"{path}: cannot tell the sample format; pass it explicitly")
    if fmt not in FORMATS:
        raise IqFileError(f"unknown format {fmt!r}; expected one of {sorted(FORMATS)}")
    if meta is not None and meta.get("format") not in (None, fmt):
        raise IqFileError(f"{path}: sidecar says {meta['format']}, reading as {fmt}")
    if sample_rate_hz is None:
        if meta is None or "sample_rate_hz" not in meta:
            raise IqFileError(f"{path}: no sidecar sample rate; pass one explicitly")
        sample_rate_hz = float(meta["sample_rate_hz"])

    if fmt == "csv":
        rows = np.loadtxt(path, delimiter=",", ndmin=2) if os.path.getsize(path) else np.zeros((0, 2))
        if rows.shape[1] != 2:
            raise IqFileError(f"{path}: expected two columns, got {rows.shape[1]}")
        x = rows[:, 0] + 1j * rows[:, 1]
    else:
        raw = Path(path).read_bytes()
        width = FORMATS[fmt].itemsize
        if len(raw) % (2 * width):
            raise IqFileError(
                f"{path}: truncated sample: {len(raw)} bytes is not a multiple of {2 * width}")
        inter = np.frombuffer(raw, dtype=FORMATS[fmt]).astype(float)
        x = inter[0::2] + 1j * inter[1::2]
    if meta is not None and "sample_count" in meta and meta["sample_count"] != x.size:
        raise IqFileError(
            f"{path}: sidecar sample_count {meta['sample_count']} != payload {x.size}")
    return IqBuffer(x, sample_rate_hz, (meta or {}).get("profile") or "")
