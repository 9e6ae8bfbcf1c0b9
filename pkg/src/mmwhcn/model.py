"""Domain types and pointwise channel primitives of the two-tier network model.

Canonical units are SI throughout: metres, watts, linear gains, radians and
points per square metre. Config files (TOML) may use dB / dBm / km^-2 / deg;
conversion happens exactly once, in `load_config` / `preset`.

The blockage law is pluggable: any object implementing the `LosModel`
interface (a non-increasing line-of-sight probability versus distance) can be
dropped into a `NetworkConfig`. The exponential law is the default and a
hard-edge ball model ships as a second built-in.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
import os
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import units

TWO_PI = 2.0 * math.pi

ENV_PREFIX = "MMWHCN_"


class ConfigError(ValueError):
    """Invalid or inconsistent network configuration."""


class LinkState(enum.IntEnum):
    LOS = 0
    NLOS = 1


# ---------------------------------------------------------------------------
# Blockage models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialLos:
    """P_los(r) = exp(-rate * r).

    `from_avg_distance` sets rate = sqrt(2) / r_avg so that `r_avg` is the
    mean LOS range of the induced blockage process.
    """

    rate: float  # 1/m

    kind = "exponential"

    def __post_init__(self):
        if self.rate < 0:
            raise ConfigError("blockage rate must be non-negative")

    @classmethod
    def from_avg_distance(cls, r_avg: float) -> "ExponentialLos":
        if r_avg <= 0:
            raise ConfigError("average LOS distance must be positive")
        return cls(math.sqrt(2.0) / r_avg)

    def prob(self, r):
        return np.exp(-self.rate * np.asarray(r, dtype=float))

    def integral_r_prob(self, r):
        """Closed form of int_0^r x * P_los(x) dx."""
        r = np.asarray(r, dtype=float)
        if self.rate == 0.0:
            return 0.5 * r * r
        br = self.rate * r
        out = np.where(np.isinf(r), 1.0, -np.expm1(-br) - br * np.exp(-br))
        return out / self.rate**2

    def total_integral(self) -> float:
        if self.rate == 0.0:
            return math.inf
        return 1.0 / self.rate**2

    def tail_integral(self, r):
        """Closed form of int_r^inf x * P_los(x) dx; no cancellation when the
        cumulative integral saturates."""
        if self.rate == 0.0:
            return np.full_like(np.asarray(r, dtype=float), math.inf)
        br = self.rate * np.asarray(r, dtype=float)
        return np.exp(-br) * (1.0 + br) / self.rate**2

    def support_radius(self, tol: float) -> float:
        """Distance beyond which P_los <= tol."""
        if self.rate == 0.0:
            return math.inf
        return math.log(1.0 / tol) / self.rate

    def describe(self):
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class LosBall:
    """P_los(r) = 1 inside a ball of the given radius, 0 outside."""

    radius: float  # m

    kind = "ball"

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigError("ball radius must be positive")

    def prob(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.radius, 1.0, 0.0)

    def integral_r_prob(self, r):
        r = np.asarray(r, dtype=float)
        return 0.5 * np.minimum(r, self.radius) ** 2

    def total_integral(self) -> float:
        return 0.5 * self.radius**2

    def tail_integral(self, r):
        r = np.asarray(r, dtype=float)
        return 0.5 * np.maximum(self.radius**2 - r * r, 0.0)

    def support_radius(self, tol: float) -> float:
        return self.radius

    def describe(self):
        return {"kind": self.kind, "radius": self.radius}


@dataclass(frozen=True)
class CallableLos:
    """Wraps an arbitrary non-increasing probability function.

    The radial integrals have no closed form here, so they are evaluated with
    the adaptive integrator on demand; fine for experimentation, too slow for
    the hot paths of the coverage engine.
    """

    fn: object  # callable r -> probability, vectorised
    support: float  # radius beyond which fn is negligible
    label: str = "custom"

    kind = "callable"

    def prob(self, r):
        return np.clip(np.asarray(self.fn(np.asarray(r, dtype=float)), dtype=float), 0.0, 1.0)

    def integral_r_prob(self, r):
        from . import quadrature

        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r_arr)
        for i, ri in enumerate(r_arr):
            hi = min(ri, self.support)
            if hi <= 0:
                out[i] = 0.0
                continue
            res = quadrature.integrate(lambda x: x * self.prob(x), 0.0, hi)
            out[i] = res.value
        return out.reshape(np.shape(r)) if np.ndim(r) else float(out[0])

    def total_integral(self) -> float:
        return float(self.integral_r_prob(self.support))

    def tail_integral(self, r):
        # Differencing against the total loses precision once the cumulative
        # integral saturates; acceptable for an experimentation hook.
        return np.maximum(self.total_integral() - self.integral_r_prob(r), 0.0)

    def support_radius(self, tol: float) -> float:
        return self.support

    def describe(self):
        return {"kind": self.kind, "label": self.label, "support": self.support}


def make_los_model(kind: str, **params):
    if kind == "exponential":
        if "rate" in params:
            return ExponentialLos(params["rate"])
        return ExponentialLos.from_avg_distance(params["avg_los_distance"])
    if kind == "ball":
        return LosBall(params["radius"])
    raise ConfigError(f"unknown LOS model {kind!r}")


# ---------------------------------------------------------------------------
# Channel primitives
# ---------------------------------------------------------------------------


def los_probability(r, cfg: "NetworkConfig"):
    """Probability that a link of length r (m) is line-of-sight."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("distance must be non-negative")
    return cfg.los.prob(r)


def nlos_probability(r, cfg: "NetworkConfig"):
    return 1.0 - los_probability(r, cfg)


def path_loss(r, state: LinkState, cfg: "NetworkConfig"):
    """Distance attenuation r^(-alpha_state). Singular at r = 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("path loss requires a strictly positive distance")
    return r ** (-cfg.alpha(state))


@dataclass(frozen=True)
class DirectivityPmf:
    """Four-point distribution of the combined TX/RX beamforming gain.

    With aligned probabilities c = beamwidth / 2pi on each side, a randomly
    oriented interfering link sees main/main, main/side, side/main or
    side/side gain.
    """

    gains: tuple  # linear, descending main*main first
    probs: tuple

    def __post_init__(self):
        if len(self.gains) != 4 or len(self.probs) != 4:
            raise ConfigError("directivity pmf needs exactly four atoms")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ConfigError(f"directivity pmf does not sum to 1: {self.probs}")
        if any(p < 0 for p in self.probs):
            raise ConfigError("directivity pmf has negative mass")
        if max(self.gains) != self.gains[0]:
            raise ConfigError("first pmf atom must carry the maximum gain")

    def mean(self) -> float:
        return float(np.dot(self.gains, self.probs))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, rng.random(size), side="right")
        return np.asarray(self.gains)[np.minimum(idx, 3)]


def directivity_pmf(tier: int, cfg: "NetworkConfig") -> DirectivityPmf:
    """Gain distribution seen from the typical user towards tier-k interferers."""
    mk, sk, bk = cfg.main_gain(tier), cfg.side_gain(tier), cfg.beamwidth(tier)
    mu, su, bu = cfg.main_ue, cfg.side_ue, cfg.beamwidth_ue
    ck = bk / TWO_PI
    cu = bu / TWO_PI
    gains = (mk * mu, mk * su, sk * mu, sk * su)
    probs = (ck * cu, ck * (1.0 - cu), (1.0 - ck) * cu, (1.0 - ck) * (1.0 - cu))
    return DirectivityPmf(gains, probs)


def sample_fading(state: LinkState, cfg: "NetworkConfig", rng: np.random.Generator, size=None):
    """Normalized small-scale power gain: Gamma(shape=nu, scale=1/nu), mean 1."""
    nu = cfg.nu(state)
    return rng.gamma(shape=nu, scale=1.0 / nu, size=size)


# ---------------------------------------------------------------------------
# Network configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NetworkConfig:
    """All physical and deployment parameters, in canonical SI units.

    Tier 1 is the macro layer (hole centers), tier 2 the small-cell layer
    carved by the sector holes. `lambda_ue` is accepted for completeness and
    recorded in the fingerprint, but no computed quantity depends on it: the
    analysis conditions on the typical user at the origin.
    """

    lambda_macro: float  # per m^2
    lambda_small: float  # per m^2, baseline (pre-carving)
    hole_radius: float  # m
    hole_angle: float  # rad in [0, 2pi]
    p_macro: float  # W
    p_small: float  # W
    main_macro: float  # linear
    side_macro: float
    beamwidth_macro: float  # rad
    main_small: float
    side_small: float
    beamwidth_small: float
    main_ue: float
    side_ue: float
    beamwidth_ue: float
    alpha_los: float
    alpha_nlos: float
    nu_los: int
    nu_nlos: int
    los: object  # LosModel
    noise_power: float  # W
    tau_macro: float  # linear SINR threshold
    tau_small: float
    lambda_ue: float = 0.0

    def __post_init__(self):
        def positive(name, v):
            if not v > 0:
                raise ConfigError(f"{name} must be strictly positive, got {v!r}")

        def non_negative(name, v):
            if not v >= 0:
                raise ConfigError(f"{name} must be non-negative, got {v!r}")

        # Densities and the hole radius admit 0 so degenerate limits (no
        # macro layer, no holes) remain expressible for validation runs.
        non_negative("lambda_macro", self.lambda_macro)
        non_negative("lambda_small", self.lambda_small)
        non_negative("hole_radius", self.hole_radius)
        non_negative("lambda_ue", self.lambda_ue)
        if not 0.0 <= self.hole_angle <= TWO_PI + 1e-12:
            raise ConfigError(f"hole central angle must lie in [0, 2pi], got {self.hole_angle!r}")
        for name in ("p_macro", "p_small", "noise_power", "tau_macro", "tau_small"):
            positive(name, getattr(self, name))
        for tier in ("macro", "small", "ue"):
            main = getattr(self, f"main_{tier}")
            side = getattr(self, f"side_{tier}")
            bw = getattr(self, f"beamwidth_{tier}")
            positive(f"main_{tier}", main)
            positive(f"side_{tier}", side)
            if side > main:
                raise ConfigError(f"side gain exceeds main gain for {tier}")
            if not 0.0 < bw <= TWO_PI + 1e-12:
                raise ConfigError(f"beamwidth_{tier} must lie in (0, 2pi], got {bw!r}")
        positive("alpha_los", self.alpha_los)
        if self.alpha_nlos < self.alpha_los:
            warnings.warn(
                "alpha_nlos < alpha_los: blocked links attenuate less than clear ones",
                stacklevel=2,
            )
        for name in ("nu_los", "nu_nlos"):
            nu = getattr(self, name)
            if int(nu) != nu or nu < 1:
                raise ConfigError(f"{name} must be a positive integer, got {nu!r}")
            object.__setattr__(self, name, int(nu))

    # -- indexed accessors -------------------------------------------------

    def density(self, tier: int) -> float:
        return self.lambda_macro if tier == 1 else self.lambda_small

    def tx_power(self, tier: int) -> float:
        return self.p_macro if tier == 1 else self.p_small

    def main_gain(self, tier: int) -> float:
        return self.main_macro if tier == 1 else self.main_small

    def side_gain(self, tier: int) -> float:
        return self.side_macro if tier == 1 else self.side_small

    def beamwidth(self, tier: int) -> float:
        return self.beamwidth_macro if tier == 1 else self.beamwidth_small

    def alpha(self, state: LinkState) -> float:
        return self.alpha_los if state == LinkState.LOS else self.alpha_nlos

    def nu(self, state: LinkState) -> int:
        return self.nu_los if state == LinkState.LOS else self.nu_nlos

    def tau(self, tier: int) -> float:
        return self.tau_macro if tier == 1 else self.tau_small

    def directivity(self, tier: int) -> DirectivityPmf:
        return directivity_pmf(tier, self)

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    def with_tau(self, tau_linear: float) -> "NetworkConfig":
        return self.replace(tau_macro=tau_linear, tau_small=tau_linear)

    def fingerprint(self) -> str:
        """Hash of every physical parameter; stable across processes."""
        payload = dataclasses.asdict(self)
        payload["los"] = self.los.describe()
        blob = json.dumps(payload, sort_keys=True, default=repr).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Config files and presets
# ---------------------------------------------------------------------------

PRESETS = ("setup1", "setup2")


def _get(section: dict, key: str, kind: str, default=None, required=True):
    if key not in section:
        if required and default is None:
            raise ConfigError(f"missing config key {key!r}")
        if default is None:
            return None
        return units.parse_quantity(default, kind) if not isinstance(default, float) else default
    try:
        return units.parse_quantity(section[key], kind)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from exc


def config_from_dict(doc: dict) -> NetworkConfig:
    """Build a validated `NetworkConfig` from a parsed TOML document."""
    try:
        tiers = doc["tiers"]
        macro = tiers["macro"]
        small = tiers["small"]
        ue = doc["ue"]
        channel = doc["channel"]
        holes = doc["holes"]
        noise = doc["noise"]
    except KeyError as exc:
        raise ConfigError(f"missing config section {exc.args[0]!r}") from exc

    def antenna(section, label):
        main = _get(section, "main_gain", "gain")
        if "side_gain" in section:
            side = _get(section, "side_gain", "gain")
        else:
            fbr = _get(section, "fbr", "gain")
            side = main / fbr
        bw = _get(section, "beamwidth", "angle")
        return main, side, bw

    main1, side1, bw1 = antenna(macro, "macro")
    main2, side2, bw2 = antenna(small, "small")
    main_u, side_u, bw_u = antenna(ue, "ue")

    los_kind = channel.get("los_model", "exponential")
    if los_kind == "exponential":
        if "blockage_rate" in channel:
            los = ExponentialLos(_get(channel, "blockage_rate", "rate"))
        else:
            los = ExponentialLos.from_avg_distance(_get(channel, "avg_los_distance", "length"))
    elif los_kind == "ball":
        los = LosBall(_get(channel, "ball_radius", "length"))
    else:
        raise ConfigError(f"unknown los_model {los_kind!r}")

    if "power" in noise:
        noise_w = _get(noise, "power", "power")
    else:
        noise_w = units.noise_power_watt(
            _get(noise, "bandwidth", "frequency"),
            units.linear_to_db(_get(noise, "noise_figure", "gain")),
        )

    tau_default = _get(channel, "sinr_threshold", "ratio", default=10.0)
    tau1 = _get(macro, "sinr_threshold", "ratio", required=False) or tau_default
    tau2 = _get(small, "sinr_threshold", "ratio", required=False) or tau_default

    return NetworkConfig(
        lambda_macro=_get(macro, "density", "density"),
        lambda_small=_get(small, "density", "density"),
        hole_radius=_get(holes, "radius", "length"),
        hole_angle=_get(holes, "central_angle", "angle"),
        p_macro=_get(macro, "tx_power", "power"),
        p_small=_get(small, "tx_power", "power"),
        main_macro=main1,
        side_macro=side1,
        beamwidth_macro=bw1,
        main_small=main2,
        side_small=side2,
        beamwidth_small=bw2,
        main_ue=main_u,
        side_ue=side_u,
        beamwidth_ue=bw_u,
        alpha_los=_get(channel, "alpha_los", "ratio"),
        alpha_nlos=_get(channel, "alpha_nlos", "ratio"),
        nu_los=int(channel.get("nu_los", 1)),
        nu_nlos=int(channel.get("nu_nlos", 1)),
        los=los,
        noise_power=noise_w,
        tau_macro=tau1,
        tau_small=tau2,
        lambda_ue=_get(ue, "density", "density", required=False) or 0.0,
    )


def apply_env_overrides(doc: dict, environ=None) -> dict:
    """Override config keys from the environment.

    ``MMWHCN_<SECTION>__<KEY>=value`` replaces ``doc[section][key]``; nested
    sections chain with further ``__`` (e.g. ``MMWHCN_TIERS__MACRO__DENSITY``).
    Values are parsed as TOML scalars so unit-suffixed strings need quotes:
    ``MMWHCN_HOLES__RADIUS='"300 m"'``.
    """
    environ = os.environ if environ is None else environ
    out = json.loads(json.dumps(doc))  # deep copy of plain data
    for key, raw in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        path = [p.lower() for p in key[len(ENV_PREFIX) :].split("__")]
        try:
            value = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = value
    return out


def load_config(path, environ=None) -> NetworkConfig:
    """Load a TOML config file, applying environment overrides."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return config_from_dict(apply_env_overrides(doc, environ))


def preset(name: str, environ=None) -> NetworkConfig:
    """Load one of the bundled parameter presets."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")
    data = resources.files(__package__).joinpath(f"presets/{name}.toml").read_bytes()
    doc = tomllib.loads(data.decode())
    return config_from_dict(apply_env_overrides(doc, environ))
