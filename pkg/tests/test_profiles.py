import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

from ofdm_mother.profiles import (
    ConstellationSpec,
    MotherModelParams,
    PilotSpec,
    ProfileParseError,
    ProfileValidationError,
    Role,
    ScramblerSpec,
    StandardId,
    SubcarrierMap,
    bits_per_symbol,
    builtin_profile,
    builtin_profile_path,
    dump_profile,
    load_profile,
    load_profile_file,
    profile_to_dict,
    validate,
)

DOCS = Path(__file__).resolve().parents[1] / "docs" / "profiles"


def _paths(exc):
    return [path for path, _ in exc.value.errors]


def test_wlan_layout_matches_80211a_tables(wlan):
    p = wlan.params
    assert (p.fft_size, p.cp_len, p.sample_rate_hz) == (64, 16, 20e6)
    # 4 us symbol = 80 samples at 20 MHz.
    assert p.symbol_len / p.sample_rate_hz == pytest.approx(4e-6)
    smap = p.subcarrier_map
    expected_data = [k for k in range(-26, 27) if k not in (0, -21, -7, 7, 21)]
    assert smap.indices(Role.DATA) == expected_data
    assert len(expected_data) == 48
    assert smap.indices(Role.PILOT) == [-21, -7, 7, 21]
    assert smap.indices(Role.DC) == [0]
    assert smap.counts()[Role.NULL] == 64 - 48 - 4 - 1
    assert dict(p.pilot_spec.values) == {-21: 1, -7: 1, 7: 1, 21: -1}
    assert p.constellations.kind == "QPSK"


def test_adsl_parameters(adsl):
    p = adsl.params
    assert (p.fft_size, p.cp_len) == (512, 32)
    # 4.3125 kHz tone spacing times 512 tones.
    assert p.sample_rate_hz == pytest.approx(4312.5 * 512)
    assert p.subcarrier_map.indices(Role.DATA) == list(range(1, 256))
    assert p.subcarrier_map.indices(Role.DC) == [0]
    assert all(k >= 0 for k in p.subcarrier_map.indices(Role.DATA))
    assert p.constellations.kind == "QAM16"


def test_drm_mode_b_parameters(drm):
    p = drm.params
    # Tu = 64/3 ms at 48 kHz is 1024 samples, Tg = Tu/4.
    assert p.fft_size == pytest.approx(48e3 * 64 / 3 / 1000)
    assert p.cp_len == p.fft_size // 4
    assert p.sample_rate_hz == 48e3
    used = p.subcarrier_map.indices(Role.DATA) + p.subcarrier_map.indices(Role.PILOT)
    assert sorted(used) == [k for k in range(-103, 104) if k != 0]


def test_builtin_counts_sum_to_n(builtin):
    c = builtin.params.subcarrier_map.counts()
    assert sum(c.values()) == builtin.fft_size


def test_validate_builtins_ok_and_idempotent(builtin):
    again = validate(builtin)
    assert again is builtin
    assert validate(builtin.params) == builtin


def test_validate_does_not_mutate():
    p = builtin_profile("802.11a")
    before = dataclasses.replace(p)
    validate(p)
    assert p == before


def test_dft_order_tables(wlan):
    # Logical -26 sits in bin 38, +26 in bin 26; data order is ascending logical.
    assert wlan.data_bins[0] == 38
    assert wlan.data_bins[-1] == 26
    assert wlan.roles[0] is Role.DC
    assert wlan.pilot_bins.tolist() == [43, 57, 7, 21]
    with pytest.raises(ValueError):
        wlan.data_bins[0] = 1


def test_cp_len_equal_fft_size_rejected():
    p = dataclasses.replace(builtin_profile("802.11a"), cp_len=64)
    with pytest.raises(ProfileValidationError) as exc:
        validate(p)
    assert "cp_len must be < fft_size" in str(exc.value)


def test_map_length_mismatch_names_both_lengths():
    p = dataclasses.replace(builtin_profile("802.11a"), fft_size=128)
    with pytest.raises(ProfileValidationError) as exc:
        validate(p)
    msg = str(exc.value)
    assert "64" in msg and "128" in msg


def test_all_violations_reported():
    p = dataclasses.replace(
        builtin_profile("802.11a"),
        cp_len=70,
        sample_rate_hz=-1.0,
        symbols_per_frame=0,
        scrambler=ScramblerSpec((7, 4), seed=0),
    )
    with pytest.raises(ProfileValidationError) as exc:
        validate(p)
    paths = _paths(exc)
    for field in ("cp_len", "sample_rate_hz", "symbols_per_frame", "scrambler"):
        assert field in paths


def test_rolloff_must_fit_in_prefix():
    p = dataclasses.replace(builtin_profile("802.11a"), window_rolloff=9)
    with pytest.raises(ProfileValidationError) as exc:
        validate(p)
    assert _paths(exc) == ["window_rolloff"]
    validate(dataclasses.replace(p, window_rolloff=8))


def test_requires_a_data_bin():
    smap = SubcarrierMap.from_indices(8, [], [1])
    p = MotherModelParams("x", 8, 1.0, 2, smap, pilot_spec=PilotSpec(((1, 1 + 0j),)))
    with pytest.raises(ProfileValidationError, match="data subcarrier"):
        validate(p)


def test_dc_only_at_zero():
    roles = [Role.NULL] * 8
    roles[0] = Role.DC  # logical -4
    roles[5] = Role.DATA
    p = MotherModelParams("x", 8, 1.0, 2, SubcarrierMap(tuple(roles)))
    with pytest.raises(ProfileValidationError, match="DC"):
        validate(p)


def test_pilot_needs_value_and_unit_magnitude():
    smap = SubcarrierMap.from_indices(8, [1, 2], [3, -3])
    p = MotherModelParams("x", 8, 1.0, 2, smap, pilot_spec=PilotSpec(((3, 2 + 0j),)))
    with pytest.raises(ProfileValidationError) as exc:
        validate(p)
    paths = _paths(exc)
    assert "pilot_spec.values[3]" in paths
    assert "pilot_spec.values[-3]" in paths


def test_per_tone_table_must_cover_data_when_no_default():
    smap = SubcarrierMap.from_indices(8, [1, 2, 3])
    cons = ConstellationSpec(None, ((1, "QAM64"), (2, "BPSK")))
    with pytest.raises(ProfileValidationError, match="without a constellation"):
        validate(MotherModelParams("x", 8, 1.0, 2, smap, cons))
    cons = ConstellationSpec(None, ((1, "QAM64"), (2, "BPSK"), (3, "QAM(10)")))
    vp = validate(MotherModelParams("x", 8, 1.0, 2, smap, cons))
    assert vp.data_bits.tolist() == [6, 1, 10]
    assert vp.bits_per_symbol == 17


@pytest.mark.parametrize("kind,bits", [("BPSK", 1), ("QPSK", 2), ("QAM16", 4), ("QAM64", 6),
                                       ("QAM256", 8), ("QAM(14)", 14), ("QAM4", 2)])
def test_bits_per_symbol(kind, bits):
    assert bits_per_symbol(kind) == bits


@pytest.mark.parametrize("kind", ["QAM8", "QAM(3)", "QAM(16)", "PSK8", "QAM12"])
def test_bad_constellation_names(kind):
    with pytest.raises(ValueError):
        bits_per_symbol(kind)


def test_round_trip_builtins(builtin):
    text = dump_profile(builtin.params)
    assert load_profile(text) == builtin.params


@pytest.mark.parametrize("sid", list(StandardId))
def test_shipped_profile_files_equal_builtins(sid):
    assert load_profile_file(builtin_profile_path(sid)) == builtin_profile(sid)


def test_80211a_fixture_is_the_serialized_builtin():
    text = builtin_profile_path("802.11a").read_text()
    assert json.loads(text) == profile_to_dict(builtin_profile("802.11a"))


def test_drm_file_uses_carrier_range():
    doc = json.loads(builtin_profile_path("drm-b").read_text())
    assert doc["map"]["carrier_range"] == [-103, 103]
    assert "description" in doc


def test_empty_document_is_parse_error():
    with pytest.raises(ProfileParseError):
        load_profile("")
    with pytest.raises(ProfileParseError):
        load_profile("   \n")


def test_malformed_json_reports_position():
    text = dump_profile(builtin_profile("802.11a")).replace('"cp_len": 16', '"cp_len": 16,,')
    with pytest.raises(ProfileParseError) as exc:
        load_profile(text)
    assert exc.value.line == 5
    assert exc.value.column is not None


def test_unknown_key_rejected():
    doc = profile_to_dict(builtin_profile("802.11a"))
    doc["guard_interval"] = 16
    with pytest.raises(ProfileParseError, match="guard_interval"):
        load_profile(json.dumps(doc))
    doc = profile_to_dict(builtin_profile("802.11a"))
    doc["map"]["nulls"] = []
    with pytest.raises(ProfileParseError, match="nulls"):
        load_profile(json.dumps(doc))


def test_document_value_violations_surface_as_validation_errors():
    doc = profile_to_dict(builtin_profile("802.11a"))
    doc["cp_len"] = 64
    with pytest.raises(ProfileValidationError, match="cp_len"):
        load_profile(json.dumps(doc))


def test_overlapping_data_and_pilot_rejected():
    doc = profile_to_dict(builtin_profile("802.11a"))
    doc["map"]["data"].append(7)
    with pytest.raises(ProfileValidationError, match="assigned twice"):
        load_profile(json.dumps(doc))


def test_per_tone_table_round_trip():
    base = builtin_profile("adsl")
    cons = ConstellationSpec("QAM16", ((5, "QAM64"), (40, "QAM256"), (200, "QPSK")))
    p = dataclasses.replace(base, constellations=cons)
    back = load_profile(dump_profile(p))
    assert back == p
    assert validate(back).bits_per_symbol == 4 * 252 + 6 + 8 + 2


def test_complex_pilot_value_round_trip():
    base = builtin_profile("802.11a")
    vals = ((-21, 1j), (-7, -1j), (7, (1 + 1j) / np.sqrt(2)), (21, -1 + 0j))
    p = dataclasses.replace(base, pilot_spec=PilotSpec(vals, base.pilot_spec.polarity))
    assert load_profile(dump_profile(p)) == p


def test_schema_is_exposed_and_strict():
    from ofdm_mother.profiles import profile_schema

    schema = profile_schema()
    assert schema["additionalProperties"] is False
    assert schema["properties"]["map"]["additionalProperties"] is False


def test_dab_worked_example_loads():
    p = load_profile_file(DOCS / "dab-mode1.profile.json")
    vp = validate(p)
    assert vp.fft_size == 2048
    assert vp.n_data == 1536
