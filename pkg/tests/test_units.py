import math

import pytest
from hypothesis import given, strategies as st

from mmwhcn import units


def test_dbm_definitions():
    assert units.dbm_to_watt(0.0) == pytest.approx(1e-3, rel=1e-15)
    assert units.dbm_to_watt(53.0) == pytest.approx(199.5262314968879, rel=1e-12)
    assert units.db_to_linear(10.0) == pytest.approx(10.0, rel=1e-15)
    assert units.per_km2_to_per_m2(10.0) == pytest.approx(1e-5, rel=1e-15)


def test_noise_power_from_bandwidth_and_figure():
    # 1 GHz bandwidth with a 10 dB figure lands at -74 dBm.
    got = units.noise_power_watt(1e9, 10.0)
    assert got == pytest.approx(3.981071705534969e-11, rel=1e-12)


@given(st.floats(min_value=-80.0, max_value=80.0))
def test_power_round_trip(dbm):
    assert units.watt_to_dbm(units.dbm_to_watt(dbm)) == pytest.approx(dbm, abs=1e-12)


@given(st.floats(min_value=1e-9, max_value=1e9))
def test_linear_round_trip(x):
    assert units.db_to_linear(units.linear_to_db(x)) == pytest.approx(x, rel=1e-12)


@given(st.floats(min_value=1e-12, max_value=1e12))
def test_density_round_trip(d):
    assert units.per_m2_to_per_km2(units.per_km2_to_per_m2(d)) == pytest.approx(d, rel=1e-12)


@pytest.mark.parametrize(
    "text,kind,expected",
    [
        ("53 dBm", "power", 199.5262314968879),
        ("23dBm", "power", 0.19952623149688797),
        ("2 W", "power", 2.0),
        ("10 dB", "gain", 10.0),
        ("-20 dB", "ratio", 0.01),
        ("2.5 /km^2", "density", 2.5e-6),
        ("200 per km^2", "density", 2e-4),
        ("10 km^-2", "density", 1e-5),
        ("200 m", "length", 200.0),
        ("1.5 km", "length", 1500.0),
        ("60 deg", "angle", math.pi / 3),
        ("1 GHz", "frequency", 1e9),
        (7.0, "length", 7.0),
    ],
)
def test_parse_quantity(text, kind, expected):
    assert units.parse_quantity(text, kind) == pytest.approx(expected, rel=1e-12)


def test_parse_quantity_rejects_garbage():
    with pytest.raises(ValueError):
        units.parse_quantity("12 parsecs", "length")
    with pytest.raises(ValueError):
        units.parse_quantity("not a number", "power")
    with pytest.raises(ValueError):
        units.parse_quantity(True, "gain")


def test_negative_power_has_no_db_representation():
    with pytest.raises(ValueError):
        units.watt_to_dbm(0.0)
    with pytest.raises(ValueError):
        units.linear_to_db(-1.0)
