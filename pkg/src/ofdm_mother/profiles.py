"""Parameter sets for the reconfigurable OFDM transmitter.

A :class:`MotherModelParams` fully describes one standard instance. Profiles
are written with signed (logical) subcarrier indices; :func:`validate` turns
them into a :class:`ValidatedParams` holding DFT-order lookup tables, and is
the only place that conversion happens.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Mapping, Sequence

import jsonschema
import numpy as np

__all__ = [
    "Role",
    "SubcarrierMap",
    "ConstellationSpec",
    "PilotSpec",
    "ScramblerSpec",
    "MotherModelParams",
    "ValidatedParams",
    "StandardId",
    "ProfileError",
    "ProfileParseError",
    "ProfileValidationError",
    "bits_per_symbol",
    "builtin_profile",
    "validate",
    "load_profile",
    "load_profile_file",
    "profile_to_dict",
    "dump_profile",
    "builtin_profile_path",
    "profile_schema",
]


class Role(str, Enum):
    DATA = "data"
    PILOT = "pilot"
    NULL = "null"
    DC = "dc"


_KIND_RE = re.compile(r"^(BPSK|QPSK|QAM(\d+)|QAM\((\d+)\))$")


def bits_per_symbol(kind: str) -> int:
    """Bits carried by one point of constellation ``kind``.

    Accepted names: BPSK, QPSK, QAM16, QAM64, QAM<M> for M = 2**b with even
    b in 2..14, and QAM(b) naming the bit count directly.
    """
    m = _KIND_RE.match(kind)
    if m is None:
        raise ValueError(f"unknown constellation {kind!r}")
    if kind == "BPSK":
        return 1
    if kind == "QPSK":
        return 2
    if m.group(3) is not None:
        b = int(m.group(3))
    else:
        order = int(m.group(2))
        b = order.bit_length() - 1
        if order != 1 << b:
            raise ValueError(f"QAM order must be a power of two, got {kind!r}")
    if b % 2 or not 2 <= b <= 14:
        raise ValueError(f"square QAM needs an even bit count in 2..14, got {kind!r}")
    return b


@dataclass(frozen=True)
class SubcarrierMap:
    """Role of every subcarrier, stored in logical order.

    ``roles[i]`` belongs to logical index ``k = i - ceil(N/2)``; logical k
    lives in DFT bin ``k mod N``.
    """

    roles: tuple[Role, ...]

    @property
    def size(self) -> int:
        return len(self.roles)

    @property
    def k_min(self) -> int:
        return -((self.size + 1) // 2)

    def logical_indices(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_min + self.size)

    def role(self, k: int) -> Role:
        return self.roles[k - self.k_min]

    def indices(self, role: Role) -> list[int]:
        return [k for k, r in zip(self.logical_indices().tolist(), self.roles) if r is role]

    def counts(self) -> dict[Role, int]:
        return {r: sum(1 for x in self.roles if x is r) for r in Role}

    @classmethod
    def from_indices(cls, fft_size: int, data: Sequence[int] = (),
                     pilots: Sequence[int] = (), dc: bool = False) -> "SubcarrierMap":
        k_min = -((fft_size + 1) // 2)
        roles = [Role.NULL] * fft_size
        for role, ks in ((Role.DATA, data), (Role.PILOT, pilots)):
            for k in ks:
                i = int(k) - k_min
                if not 0 <= i < fft_size:
                    raise ValueError(f"logical index {k} outside the {fft_size}-bin grid")
                if roles[i] is not Role.NULL:
                    raise ValueError(f"logical index {k} assigned twice")
                roles[i] = role
        if dc:
            if roles[-k_min] is not Role.NULL:
                raise ValueError("logical index 0 cannot be both DC and used")
            roles[-k_min] = Role.DC
        return cls(tuple(roles))


@dataclass(frozen=True)
class ConstellationSpec:
    """Uniform constellation plus optional per-tone overrides.

    ``per_tone`` maps logical data-subcarrier index to a constellation name
    (DMT bit loading). Tones absent from it use ``kind``.
    """

    kind: str | None = "QPSK"
    per_tone: tuple[tuple[int, str], ...] = ()

    def kind_for(self, k: int) -> str | None:
        for tone, kind in self.per_tone:
            if tone == k:
                return kind
        return self.kind


@dataclass(frozen=True)
class ScramblerSpec:
    """Fibonacci LFSR: feedback is the XOR of cells ``taps`` (1-based).

    ``seed`` is an integer whose bit t-1 initialises cell t. ``width``
    defaults to the highest tap.
    """

    taps: tuple[int, ...]
    seed: int
    width: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "taps", tuple(int(t) for t in self.taps))
        if self.width is None and self.taps:
            object.__setattr__(self, "width", max(self.taps))

    def problems(self) -> list[str]:
        out = []
        if not self.taps:
            out.append("taps must be non-empty")
        elif min(self.taps) < 1 or max(self.taps) > (self.width or 0):
            out.append(f"taps {self.taps} must lie in 1..{self.width}")
        if self.seed == 0:
            out.append("seed must be nonzero")
        elif self.width is not None and not 0 < self.seed < (1 << self.width):
            out.append(f"seed {self.seed} does not fit a {self.width}-bit register")
        return out


@dataclass(frozen=True)
class PilotSpec:
    """Pilot value per logical pilot index and an optional polarity LFSR.

    The polarity LFSR advances once per OFDM symbol; output bit 0 keeps the
    pilots, bit 1 negates all of them for that symbol.
    """

    values: tuple[tuple[int, complex], ...] = ()
    polarity: ScramblerSpec | None = None


@dataclass(frozen=True)
class MotherModelParams:
    name: str
    fft_size: int
    sample_rate_hz: float
    cp_len: int
    subcarrier_map: SubcarrierMap
    constellations: ConstellationSpec = field(default_factory=ConstellationSpec)
    pilot_spec: PilotSpec = field(default_factory=PilotSpec)
    scrambler: ScramblerSpec | None = None
    window_rolloff: int = 0
    symbols_per_frame: int = 1
    reference_symbol: bool = False

    @property
    def symbol_len(self) -> int:
        return self.fft_size + self.cp_len


class ProfileError(ValueError):
    pass


class ProfileParseError(ProfileError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class ProfileValidationError(ProfileError):
    """All violated invariants of a parameter set, as (field path, message)."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = list(errors)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.errors))


@dataclass(frozen=True, eq=False)
class ValidatedParams:
    """A checked parameter set plus read-only DFT-order lookup tables.

    Attributes:
        params: the original parameter set.
        roles: role per DFT bin.
        data_bins: DFT bins of data subcarriers, ascending logical order.
        data_bits: bits carried by each entry of ``data_bins``.
        data_kinds: constellation name of each entry of ``data_bins``.
        pilot_bins / pilot_values: pilot bins (ascending logical order) and
            their base values.
        used_bins: data and pilot bins together (ascending logical order).
        bits_per_symbol: total payload bits of one OFDM symbol.
    """

    params: MotherModelParams
    roles: tuple[Role, ...]
    data_bins: np.ndarray
    data_bits: np.ndarray
    data_kinds: tuple[str, ...]
    pilot_bins: np.ndarray
    pilot_values: np.ndarray
    used_bins: np.ndarray
    bits_per_symbol: int

    def __eq__(self, other):
        if not isinstance(other, ValidatedParams):
            return NotImplemented
        return self.params == other.params

    def __hash__(self):
        return hash(self.params)

    @property
    def name(self) -> str:
        return self.params.name

    @property
    def fft_size(self) -> int:
        return self.params.fft_size

    @property
    def cp_len(self) -> int:
        return self.params.cp_len

    @property
    def symbol_len(self) -> int:
        return self.params.symbol_len

    @property
    def sample_rate_hz(self) -> float:
        return self.params.sample_rate_hz

    @property
    def window_rolloff(self) -> int:
        return self.params.window_rolloff

    @property
    def n_data(self) -> int:
        return len(self.data_bins)

    def logical_index(self, bins) -> np.ndarray:
        """Signed subcarrier index of DFT bin(s)."""
        n = self.fft_size
        b = np.asarray(bins)
        k_min = -((n + 1) // 2)
        return (b - k_min) % n + k_min


def _check(params: MotherModelParams) -> list[tuple[str, str]]:
    errs: list[tuple[str, str]] = []
    n = params.fft_size
    if not isinstance(params.name, str) or not params.name:
        errs.append(("name", "must be a non-empty string"))
    if not isinstance(n, int) or n < 1:
        errs.append(("fft_size", f"must be a positive integer, got {n!r}"))
        return errs
    if not (isinstance(params.sample_rate_hz, (int, float))
            and math.isfinite(params.sample_rate_hz) and params.sample_rate_hz > 0):
        errs.append(("sample_rate_hz", f"must be a positive finite number, got {params.sample_rate_hz!r}"))
    if not isinstance(params.cp_len, int) or params.cp_len < 0:
        errs.append(("cp_len", f"must be a non-negative integer, got {params.cp_len!r}"))
    elif params.cp_len >= n:
        errs.append(("cp_len", f"cp_len must be < fft_size ({params.cp_len} >= {n})"))
    if not isinstance(params.window_rolloff, int) or params.window_rolloff < 0:
        errs.append(("window_rolloff", f"must be a non-negative integer, got {params.window_rolloff!r}"))
    elif isinstance(params.cp_len, int) and 2 * params.window_rolloff > params.cp_len:
        errs.append(("window_rolloff",
                     f"2*window_rolloff must be <= cp_len ({2 * params.window_rolloff} > {params.cp_len})"))
    if not isinstance(params.symbols_per_frame, int) or params.symbols_per_frame < 1:
        errs.append(("symbols_per_frame", f"must be >= 1, got {params.symbols_per_frame!r}"))

    smap = params.subcarrier_map
    if smap.size != n:
        errs.append(("subcarrier_map",
                     f"subcarrier_map length {smap.size} does not match fft_size {n}"))
        return errs
    counts = smap.counts()
    if counts[Role.DATA] == 0:
        errs.append(("subcarrier_map", "at least one data subcarrier is required"))
    if counts[Role.DC] > 1:
        errs.append(("subcarrier_map", "at most one DC subcarrier is allowed"))
    for k in smap.indices(Role.DC):
        if k != 0:
            errs.append(("subcarrier_map", f"DC role only allowed at logical index 0, found at {k}"))

    cons = params.constellations
    data_ks = set(smap.indices(Role.DATA))
    seen_tones = set()
    for tone, kind in cons.per_tone:
        if tone in seen_tones:
            errs.append((f"constellations.per_tone[{tone}]", "tone listed twice"))
        seen_tones.add(tone)
        if tone not in data_ks:
            errs.append((f"constellations.per_tone[{tone}]", "not a data subcarrier"))
        try:
            bits_per_symbol(kind)
        except ValueError as exc:
            errs.append((f"constellations.per_tone[{tone}]", str(exc)))
    if cons.kind is not None:
        try:
            bits_per_symbol(cons.kind)
        except ValueError as exc:
            errs.append(("constellations.kind", str(exc)))
    elif data_ks - seen_tones:
        missing = sorted(data_ks - seen_tones)
        errs.append(("constellations", f"data subcarriers without a constellation: {missing[:8]}"))

    pilot_ks = set(smap.indices(Role.PILOT))
    valued = set()
    for k, v in params.pilot_spec.values:
        path = f"pilot_spec.values[{k}]"
        if k in valued:
            errs.append((path, "pilot listed twice"))
        valued.add(k)
        if k not in pilot_ks:
            errs.append((path, "not a pilot subcarrier"))
        if not abs(abs(complex(v)) - 1.0) <= 1e-12:
            errs.append((path, f"pilot magnitude must be 1, got {abs(complex(v))!r}"))
    for k in sorted(pilot_ks - valued):
        errs.append((f"pilot_spec.values[{k}]", "pilot subcarrier has no value"))
    if params.pilot_spec.polarity is not None:
        errs += [("pilot_spec.polarity", m) for m in params.pilot_spec.polarity.problems()]
    if params.scrambler is not None:
        errs += [("scrambler", m) for m in params.scrambler.problems()]
    return errs


def validate(params) -> ValidatedParams:
    """Check every invariant of ``params`` and build the DFT-order tables.

    Raises:
        ProfileValidationError: listing every violation, not only the first.
    """
    if isinstance(params, ValidatedParams):
        return params
    errs = _check(params)
    if errs:
        raise ProfileValidationError(errs)

    n = params.fft_size
    smap = params.subcarrier_map
    logical = smap.logical_indices()
    roles_dft = [Role.NULL] * n
    for k, r in zip(logical.tolist(), smap.roles):
        roles_dft[k % n] = r
    data_ks = smap.indices(Role.DATA)
    pilot_ks = smap.indices(Role.PILOT)
    pilot_map = dict(params.pilot_spec.values)
    kinds = tuple(params.constellations.kind_for(k) for k in data_ks)
    bits = np.array([bits_per_symbol(kd) for kd in kinds], dtype=np.intp)

    def ro(a):
        a = np.asarray(a)
        a.setflags(write=False)
        return a

    return ValidatedParams(
        params=params,
        roles=tuple(roles_dft),
        data_bins=ro(np.array(data_ks, dtype=np.intp) % n),
        data_bits=ro(bits),
        data_kinds=kinds,
        pilot_bins=ro(np.array(pilot_ks, dtype=np.intp) % n),
        pilot_values=ro(np.array([complex(pilot_map[k]) for k in pilot_ks], dtype=complex)),
        used_bins=ro(np.array(sorted(data_ks + pilot_ks), dtype=np.intp) % n),
        bits_per_symbol=int(bits.sum()),
    )


# --- builtin standards -------------------------------------------------------

class StandardId(str, Enum):
    WLAN_80211A = "802.11a"
    ADSL_DMT_DOWN = "adsl"
    DRM_MODE_B = "drm-b"


# x^7 + x^4 + 1, the 802.11a scrambler / pilot polarity generator.
_LFSR_80211A = (7, 4)

# DRM robustness mode B, spectrum occupancy 3 (10 kHz): carriers -103..103.
DRM_MODE_B_CARRIER_RANGE = (-103, 103)


def _wlan_80211a() -> MotherModelParams:
    pilots = {-21: 1 + 0j, -7: 1 + 0j, 7: 1 + 0j, 21: -1 + 0j}
    data = [k for k in range(-26, 27) if k != 0 and k not in pilots]
    return MotherModelParams(
        name="802.11a",
        fft_size=64,
        sample_rate_hz=20e6,
        cp_len=16,
        subcarrier_map=SubcarrierMap.from_indices(64, data, sorted(pilots), dc=True),
        constellations=ConstellationSpec("QPSK"),
        pilot_spec=PilotSpec(tuple(sorted(pilots.items())),
                             polarity=ScramblerSpec(_LFSR_80211A, seed=0b1111111)),
        scrambler=ScramblerSpec(_LFSR_80211A, seed=0b1011101),
        window_rolloff=0,
        symbols_per_frame=10,
        reference_symbol=False,
    )


def _adsl_dmt_down() -> MotherModelParams:
    return MotherModelParams(
        name="adsl",
        fft_size=512,
        sample_rate_hz=2.208e6,
        cp_len=32,
        subcarrier_map=SubcarrierMap.from_indices(512, range(1, 256), dc=True),
        constellations=ConstellationSpec("QAM16"),
        pilot_spec=PilotSpec(),
        scrambler=ScramblerSpec((23, 18), seed=(1 << 23) - 1),
        window_rolloff=0,
        symbols_per_frame=68,
        reference_symbol=False,
    )


def _drm_mode_b() -> MotherModelParams:
    lo, hi = DRM_MODE_B_CARRIER_RANGE
    # Frequency reference carriers at 750, 2250 and 3000 Hz.
    pilots = {16: 1 + 0j, 48: 1 + 0j, 64: 1 + 0j}
    data = [k for k in range(lo, hi + 1) if k != 0 and k not in pilots]
    return MotherModelParams(
        name="drm-b",
        fft_size=1024,
        sample_rate_hz=48e3,
        cp_len=256,
        subcarrier_map=SubcarrierMap.from_indices(1024, data, sorted(pilots), dc=True),
        constellations=ConstellationSpec("QAM16"),
        pilot_spec=PilotSpec(tuple(sorted(pilots.items()))),
        scrambler=ScramblerSpec((9, 5), seed=(1 << 9) - 1),
        window_rolloff=0,
        symbols_per_frame=15,
        reference_symbol=False,
    )


_BUILTINS = {
    StandardId.WLAN_80211A: _wlan_80211a,
    StandardId.ADSL_DMT_DOWN: _adsl_dmt_down,
    StandardId.DRM_MODE_B: _drm_mode_b,
}


def builtin_profile(standard_id) -> MotherModelParams:
    """Parameter set of a shipped standard (accepts the enum or its value)."""
    return _BUILTINS[StandardId(standard_id)]()


def builtin_profile_path(standard_id):
    sid = StandardId(standard_id)
    return resources.files("ofdm_mother") / "builtin" / f"{sid.value}.profile.json"


# --- profile documents ---------------------------------------------------------

def profile_schema() -> dict:
    text = (resources.files("ofdm_mother") / "profile.schema.json").read_text()
    return json.loads(text)


def _ranges(ks: Sequence[int]) -> list:
    out: list = []
    ks = sorted(ks)
    i = 0
    while i < len(ks):
        j = i
        while j + 1 < len(ks) and ks[j + 1] == ks[j] + 1:
            j += 1
        out.append(ks[i] if i == j else [ks[i], ks[j]])
        i = j + 1
    return out


def _expand(items) -> list[int]:
    out = []
    for it in items:
        if isinstance(it, list):
            out.extend(range(it[0], it[1] + 1))
        else:
            out.append(it)
    return out


def _complex_to_json(v: complex):
    v = complex(v)
    return v.real if v.imag == 0 else [v.real, v.imag]


def _lfsr_to_json(spec: ScramblerSpec | None):
    if spec is None:
        return None
    out = {"poly": list(spec.taps), "seed": spec.seed}
    if spec.width != max(spec.taps):
        out["width"] = spec.width
    return out


def profile_to_dict(params: MotherModelParams) -> dict:
    """Canonical document form of a parameter set."""
    if isinstance(params, ValidatedParams):
        params = params.params
    smap = params.subcarrier_map
    cons = params.constellations
    if cons.per_tone:
        constellation = {"default": cons.kind,
                         "tones": {str(k): kind for k, kind in sorted(cons.per_tone)}}
    else:
        constellation = cons.kind
    return {
        "name": params.name,
        "fft_size": params.fft_size,
        "sample_rate_hz": float(params.sample_rate_hz),
        "cp_len": params.cp_len,
        "window_rolloff": params.window_rolloff,
        "symbols_per_frame": params.symbols_per_frame,
        "reference_symbol": params.reference_symbol,
        "scrambler": _lfsr_to_json(params.scrambler),
        "pilot_polarity": _lfsr_to_json(params.pilot_spec.polarity),
        "map": {
            "data": _ranges(smap.indices(Role.DATA)),
            "pilots": [{"k": k, "value": _complex_to_json(v)}
                       for k, v in sorted(params.pilot_spec.values)],
            "dc": bool(smap.indices(Role.DC)),
        },
        "constellation": constellation,
    }


def dump_profile(params: MotherModelParams) -> str:
    return json.dumps(profile_to_dict(params), indent=2) + "\n"


def _lfsr_from_json(obj) -> ScramblerSpec | None:
    if obj is None:
        return None
    return ScramblerSpec(tuple(obj["poly"]), int(obj["seed"]), obj.get("width"))


def _params_from_dict(doc: Mapping) -> MotherModelParams:
    n = doc["fft_size"]
    m = doc["map"]
    pilots = [(int(p["k"]), complex(*p["value"]) if isinstance(p["value"], list) else complex(p["value"]))
              for p in m.get("pilots", [])]
    pilot_ks = {k for k, _ in pilots}
    data = _expand(m.get("data", []))
    dc = bool(m.get("dc", False))
    if "carrier_range" in m:
        lo, hi = m["carrier_range"]
        taken = pilot_ks | set(data) | ({0} if dc else set())
        data += [k for k in range(lo, hi + 1) if k not in taken]
    try:
        smap = SubcarrierMap.from_indices(n, data, sorted(pilot_ks), dc=dc)
    except ValueError as exc:
        raise ProfileValidationError([("map", str(exc))]) from None
    c = doc["constellation"]
    if isinstance(c, str):
        cons = ConstellationSpec(c)
    else:
        cons = ConstellationSpec(c.get("default"),
                                 tuple(sorted((int(k), v) for k, v in c.get("tones", {}).items())))
    return MotherModelParams(
        name=doc["name"],
        fft_size=n,
        sample_rate_hz=float(doc["sample_rate_hz"]),
        cp_len=doc["cp_len"],
        subcarrier_map=smap,
        constellations=cons,
        pilot_spec=PilotSpec(tuple(sorted(pilots)), _lfsr_from_json(doc.get("pilot_polarity"))),
        scrambler=_lfsr_from_json(doc.get("scrambler")),
        window_rolloff=doc.get("window_rolloff", 0),
        symbols_per_frame=doc.get("symbols_per_frame", 1),
        reference_symbol=doc.get("reference_symbol", False),
    )


def load_profile(text: str) -> MotherModelParams:
    """Parse and validate a profile document (JSON text).

    Raises:
        ProfileParseError: malformed JSON (with line/column) or a document
            that breaks the schema, e.g. an unknown key.
        ProfileValidationError: a well-formed document whose values break
            a parameter invariant.
    """
    if not text.strip():
        raise ProfileParseError("empty profile document", 1, 1)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    validator = jsonschema.Draft202012Validator(profile_schema())
    problems = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if problems:
        msgs = []
        for e in problems:
            path = "/".join(str(p) for p in e.absolute_path) or "<root>"
            msgs.append(f"{path}: {e.message}")
        raise ProfileParseError("schema violation: " + "; ".join(msgs))
    params = _params_from_dict(doc)
    validate(params)
    return params


def load_profile_file(path) -> MotherModelParams:
    with open(path, encoding="utf-8") as fh:
        return load_profile(fh.read())
