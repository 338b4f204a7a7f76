"""Reconfigurable OFDM baseband transmitter driven by declarative profiles."""

__version__ = "0.1.0"

from .profiles import (  # noqa: E402
    MotherModelParams,
    StandardId,
    ValidatedParams,
    builtin_profile,
    load_profile,
    load_profile_file,
    validate,
)
from .txchain import IqBuffer, generate_frame  # noqa: E402
from .rxoracle import demodulate, measure_ber, measure_evm  # noqa: E402

__all__ = [
    "MotherModelParams",
    "StandardId",
    "ValidatedParams",
    "builtin_profile",
    "load_profile",
    "load_profile_file",
    "validate",
    "IqBuffer",
    "generate_frame",
    "demodulate",
    "measure_ber",
    "measure_evm",
]
