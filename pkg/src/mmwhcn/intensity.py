"""Radial intensity measures and the distance/association laws built on them.

Seen from the typical user at the origin, the stations of tier k in blockage
state s form an independently thinned process whose expected count inside
radius r is

    Lambda_k^s([0, r)) = 2 pi lambda_k * int_0^r x P^s(x) dx,

with radial density Lambda'(r) = 2 pi lambda_k r P^s(r). The carved small-cell
layer is approximated by a Poisson process of the equivalent density
lambda_eq = lambda_2 * exp(-lambda_1 * theta_c * D^2 / 2); the `php` flavor of
a tier-2 intensity uses that density, the `baseline` flavor uses lambda_2.
Tier-1 intensities are identical under both flavors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .model import LinkState, NetworkConfig

BASELINE = "baseline"
PHP = "php"

_STATES = (LinkState.LOS, LinkState.NLOS)
_CLASSES = tuple((k, s) for k in (1, 2) for s in _STATES)


class NoStationError(ValueError):
    """The requested (tier, state) class is almost surely empty."""


class AbsentInterfererError(ValueError):
    """No interfering macro of the requested state can exist beyond the
    exclusion radius; the conditional distance law is undefined there."""


def equivalent_small_cell_density(cfg: NetworkConfig) -> float:
    """First-order Poisson density of the carved small-cell layer, per m^2."""
    removed = cfg.lambda_macro * cfg.hole_angle * cfg.hole_radius**2 / 2.0
    return cfg.lambda_small * math.exp(-removed)


@dataclass(frozen=True)
class Intensity:
    """Radial intensity measure of one (tier, state) class."""

    density: float  # per m^2, already flavor-resolved
    state: LinkState
    los: object

    def cum(self, r):
        """Expected station count within distance r of the origin."""
        r = np.asarray(r, dtype=float)
        base = self.los.integral_r_prob(r)
        if self.state == LinkState.LOS:
            integral = base
        else:
            integral = 0.5 * r * r - base
        return 2.0 * math.pi * self.density * integral

    def radial(self, r):
        """d/dr of `cum`: angular-integrated station density at radius r."""
        r = np.asarray(r, dtype=float)
        p = self.los.prob(r)
        if self.state == LinkState.NLOS:
            p = 1.0 - p
        return 2.0 * math.pi * self.density * r * p

    def total(self) -> float:
        """Expected count in the whole plane (infinite for NLOS)."""
        if self.density == 0.0:
            return 0.0
        if self.state == LinkState.LOS:
            return 2.0 * math.pi * self.density * self.los.total_integral()
        return math.inf

    def tail(self, r):
        """Expected count beyond distance r; stable where `cum` saturates."""
        r = np.asarray(r, dtype=float)
        if self.density == 0.0:
            return np.zeros_like(r)
        if self.state == LinkState.LOS:
            return 2.0 * math.pi * self.density * self.los.tail_integral(r)
        return np.full_like(r, math.inf)

    def annulus(self, r_lo, r_hi):
        """Expected count in [r_lo, r_hi): for LOS classes a difference of
        closed-form tails, immune to the saturation cancellation of
        cum(r_hi) - cum(r_lo)."""
        if self.state == LinkState.LOS:
            return np.maximum(self.tail(r_lo) - self.tail(r_hi), 0.0)
        return np.maximum(self.cum(r_hi) - self.cum(r_lo), 0.0)


def intensity(cfg: NetworkConfig, tier: int, state: LinkState, flavor: str = PHP) -> Intensity:
    if flavor not in (BASELINE, PHP):
        raise ValueError(f"unknown intensity flavor {flavor!r}")
    if tier == 1:
        density = cfg.lambda_macro
    elif flavor == PHP:
        density = equivalent_small_cell_density(cfg)
    else:
        density = cfg.lambda_small
    return Intensity(density, state, cfg.los)


def presence_probability(cfg: NetworkConfig, tier: int, state: LinkState, flavor: str = PHP) -> float:
    """Probability that at least one station of the class exists."""
    tot = intensity(cfg, tier, state, flavor).total()
    return -math.expm1(-tot) if math.isfinite(tot) else 1.0


def exclusion_radius(cfg: NetworkConfig, j: int, s_int: LinkState, k: int, s: LinkState, x):
    """Closest possible distance of a state-s_int tier-j interferer when the
    serving station is a state-s tier-k one at distance x.

    Any station nearer would have offered a higher long-term average power
    than the serving one, contradicting the association rule.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("serving distance must be positive")
    a_int = cfg.alpha(s_int)
    kappa = (cfg.tx_power(j) * cfg.main_gain(j)) / (cfg.tx_power(k) * cfg.main_gain(k))
    return kappa ** (1.0 / a_int) * x ** (cfg.alpha(s) / a_int)


def find_decay_radius(fn, lo: float = 1e-2, threshold: float = 1e-12, grid: int = 2048) -> float:
    """Radius beyond which `fn` has decayed below `threshold` times its peak.

    Doubles a log-spaced probe grid until the tail criterion holds; `fn` must
    be vectorised, non-negative and eventually decreasing.
    """
    hi = 1e4
    for _ in range(24):
        r = np.geomspace(lo, hi, grid)
        v = np.asarray(fn(r), dtype=float)
        peak_idx = int(np.argmax(v))
        peak = v[peak_idx]
        if peak == 0.0:
            return hi
        tail = v[peak_idx:]
        below = np.nonzero(tail <= threshold * peak)[0]
        if len(below) and v[-1] <= threshold * peak:
            return float(r[peak_idx + below[0]])
        hi *= 4.0
    raise RuntimeError("integrand tail does not decay; cannot truncate")


def nearest_bs_distance_pdf(cfg: NetworkConfig, tier: int, state: LinkState, r, flavor: str = PHP):
    """Conditional density of the distance to the nearest station of a class,
    given that the class is non-empty."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("distance must be non-negative")
    meas = intensity(cfg, tier, state, flavor)
    b = presence_probability(cfg, tier, state, flavor)
    if b <= 0.0:
        raise NoStationError(f"tier {tier} {state.name} stations are almost surely absent")
    return meas.radial(r) * np.exp(-meas.cum(r)) / b


def _association_exponent(cfg: NetworkConfig, k: int, s: LinkState, x, flavor: str = PHP):
    """Sum over all classes of the mean station count inside the exclusion radius."""
    x = np.asarray(x, dtype=float)
    tot = np.zeros_like(x)
    for j in (1, 2):
        for s_int in _STATES:
            meas = intensity(cfg, j, s_int, flavor)
            tot += meas.cum(exclusion_radius(cfg, j, s_int, k, s, x))
    return tot


def association_probability(
    cfg: NetworkConfig,
    tier: int,
    state: LinkState,
    spec: quadrature.QuadratureSpec | None = None,
) -> float:
    """Probability that the typical user is served by a (tier, state) station."""
    meas = intensity(cfg, tier, state, PHP)
    if meas.total() == 0.0:
        return 0.0

    def integrand(x):
        return meas.radial(x) * np.exp(-_association_exponent(cfg, tier, state, x))

    upper = find_decay_radius(integrand, threshold=1e-14)
    res = quadrature.integrate(integrand, 0.0, upper, spec or quadrature.QuadratureSpec())
    return float(res.value)


def association_probabilities(cfg: NetworkConfig, spec=None) -> dict:
    return {(k, s): association_probability(cfg, k, s, spec) for k, s in _CLASSES}


def interferer_macro_distance_pdf(
    cfg: NetworkConfig,
    s_macro: LinkState,
    y,
    k: int,
    s: LinkState,
    x: float,
):
    """Conditional density of the nearest non-serving state-s_macro macro
    distance, given a (k, s) serving station at distance x and that such an
    interferer exists.

    Zero below the exclusion radius. Raises `AbsentInterfererError` when the
    interferer class is almost surely empty beyond the exclusion radius.
    """
    y = np.asarray(y, dtype=float)
    r_min = float(exclusion_radius(cfg, 1, s_macro, k, s, x))
    meas = intensity(cfg, 1, s_macro, BASELINE)
    tail = float(meas.tail(r_min))
    denom = -math.expm1(-tail) if math.isfinite(tail) else 1.0
    if denom <= 0.0:
        raise AbsentInterfererError(
            f"no {s_macro.name} macro interferer can exist beyond {r_min:.1f} m"
        )
    pdf = meas.radial(y) * np.exp(-meas.annulus(r_min, y)) / denom
    return np.where(y < r_min, 0.0, pdf)
