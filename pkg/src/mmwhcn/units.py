"""Conversions between config-facing units and the canonical SI units.

Everything inside the library works in SI / linear quantities: metres, watts,
linear gains, radians, points per square metre, hertz. Config files may carry
dB, dBm, per-km^2, deg etc.; those are converted exactly once, at config load
time, through the helpers below.
"""

from __future__ import annotations

import math
import re

THERMAL_NOISE_DBM_PER_HZ = -174.0


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0:
        raise ValueError(f"dB undefined for non-positive value {value!r}")
    return 10.0 * math.log10(value)


def dbm_to_watt(value_dbm: float) -> float:
    return 10.0 ** (value_dbm / 10.0) * 1e-3


def watt_to_dbm(value_w: float) -> float:
    if value_w <= 0:
        raise ValueError(f"dBm undefined for non-positive power {value_w!r}")
    return 10.0 * math.log10(value_w * 1e3)


def per_km2_to_per_m2(value: float) -> float:
    return value * 1e-6


def per_m2_to_per_km2(value: float) -> float:
    return value * 1e6


def noise_power_watt(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise power in W over `bandwidth_hz` with the given noise figure."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    dbm = THERMAL_NOISE_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db
    return dbm_to_watt(dbm)


_NUMBER_RE = re.compile(r"^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(.*?)\s*$")

# Multiplicative unit tables per quantity kind; dB-style units are handled
# separately because they are not multiplicative.
_MULTIPLIERS = {
    "density": {"": 1.0, "/m2": 1.0, "m-2": 1.0, "/km2": 1e-6, "km-2": 1e-6},
    "length": {"": 1.0, "m": 1.0, "km": 1e3, "cm": 1e-2},
    "angle": {"": 1.0, "rad": 1.0, "deg": math.pi / 180.0},
    "frequency": {"": 1.0, "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "rate": {"": 1.0, "/m": 1.0, "m-1": 1.0, "/km": 1e-3, "km-1": 1e-3},
}


def _normalize_unit(unit: str) -> str:
    u = unit.strip().lower()
    u = u.replace("per ", "/")
    u = u.replace("^", "").replace("**", "")
    u = u.replace(" ", "")
    u = u.replace("⁻", "-")  # superscript minus
    u = u.replace("²", "2")  # superscript two
    return u


def parse_quantity(value, kind: str) -> float:
    """Parse a config value into SI units.

    Bare numbers pass through unchanged and are taken to already be in SI /
    linear units. Strings carry a unit suffix: "53 dBm", "10 dB", "2.5 /km^2",
    "200 m", "60 deg", "1 GHz".
    """
    if isinstance(value, bool):
        raise ValueError(f"cannot interpret boolean as a {kind}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"cannot interpret {value!r} as a {kind}")
    m = _NUMBER_RE.match(value)
    if m is None:
        raise ValueError(f"malformed quantity {value!r}")
    num = float(m.group(1))
    unit = _normalize_unit(m.group(2))

    if kind == "power":
        table = {"": 1.0, "w": 1.0, "mw": 1e-3, "kw": 1e3}
        if unit in table:
            return num * table[unit]
        if unit == "dbm":
            return dbm_to_watt(num)
        if unit == "dbw":
            return db_to_linear(num)
    elif kind in ("gain", "ratio"):
        if unit == "":
            return num
        if unit == "db":
            return db_to_linear(num)
    else:
        table = _MULTIPLIERS.get(kind)
        if table is None:
            raise ValueError(f"unknown quantity kind {kind!r}")
        if unit in table:
            return num * table[unit]
    raise ValueError(f"unsupported {kind} unit {m.group(2)!r} in {value!r}")
