"""SINR coverage probability under five analytical approximation strategies.

All strategies share one backbone: condition on the serving class (tier k,
blockage state s) and serving distance x, bound the conditional coverage with
an alternating sum over the integer fading order, and integrate the Laplace
functional of the interference against the serving-distance density:

    sum_{k,s} sum_{n=1}^{nu_s} (-1)^(n+1) C(nu_s, n) *
        int_0^inf exp(-mu sigma^2)
                  exp(-sum_{j,s'} [W_j^{s'}(x) + Lambda_j^{s'}(R_j^{s'}(x))])
                  corr(x) Lambda'_k^s(x) dx,

with mu = n tau eta_s x^alpha_s / (P_k M_k M_ue). The strategies differ in
which intensity flavor (baseline vs equivalent-density) feeds the serving,
exclusion and interference terms, and in the correction factor `corr`:

* baseline:            corr = 1, interference from the uncarved layer
* equivalent-density:  corr = 1, interference thinned to the equivalent density
* serving-hole:        corr = exp(sum_s' Q^{s'}(x)) when the macro tier serves
* nearest-holes:       corr = Z(x), the two nearest non-serving macro holes
* all-holes:           corr = T(x), every non-serving macro hole, overlaps ignored

Q^{s'}(y) is the interference mass a hole at distance y removes; Z averages
exp(sum Q) over the conditional nearest-interferer distance law; T applies the
expectation functional over the whole macro process.

Thresholds and fading orders enter only through the scalar mu, so a whole
threshold grid is integrated in one adaptive pass as components of a
vector-valued integrand.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import quadrature
from .curves import CoverageCurve
from .intensity import (
    BASELINE,
    PHP,
    find_decay_radius,
    intensity,
)
from .model import ExponentialLos, LinkState, NetworkConfig, TWO_PI

_STATES = (LinkState.LOS, LinkState.NLOS)
_CLASSES = tuple((j, s) for j in (1, 2) for s in _STATES)


class Approach(str, Enum):
    BASELINE_PPP = "baseline"
    EQUIVALENT_DENSITY = "equivalent-density"
    SERVING_HOLE = "serving-hole"
    NEAREST_HOLES = "nearest-holes"
    ALL_HOLES = "all-holes"


APPROACHES = tuple(Approach)

SWEEP_VARIABLES = ("tau", "theta_c", "lambda1", "lambda2_over_lambda1", "r_los")


@dataclass(frozen=True)
class SweepSpec:
    """Sweep in display units: tau in dB, theta_c in rad, lambda1 per km^2,
    lambda2_over_lambda1 as a ratio, r_los in metres."""

    variable: str
    values: tuple

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(
                f"unknown sweep variable {self.variable!r}; choose from {SWEEP_VARIABLES}"
            )
        vals = tuple(float(v) for v in self.values)
        if len(vals) == 0:
            raise ValueError("sweep grid must be non-empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class CoverageOptions:
    """Numerical knobs of the coverage engine.

    `intensity_flavor` is the A/B lever over the printed defaults: None keeps
    each strategy's own flavor assignment, "baseline"/"php" force every slot.
    `t_weight` selects the radial (default) or cumulative intensity weight in
    the all-holes exponent; `hole_states` restricts which macro blockage
    states contribute holes in the all-holes strategy.
    """

    intensity_flavor: str | None = None
    hole_states: tuple = _STATES
    t_weight: str = "radial"
    outer: quadrature.QuadratureSpec = field(
        default_factory=lambda: quadrature.QuadratureSpec(
            rel_tol=1e-5, abs_tol=1e-9, max_subdivisions=160, initial_panels=8
        )
    )
    # The Z/T corrections ride on fixed inner rules whose ~1e-5 wiggle a tight
    # adaptive pass would chase forever; their outer integral gets this spec.
    outer_corrected: quadrature.QuadratureSpec = field(
        default_factory=lambda: quadrature.QuadratureSpec(
            rel_tol=1e-4, abs_tol=1e-6, max_subdivisions=60, initial_panels=20
        )
    )
    w_panels: int = 12
    w_order: int = 10
    q_order: int = 128
    q_order_inner: int = 32  # hole exponent inside the Z/T averages
    z_panels: int = 6
    z_order: int = 8
    t_panels: int = 5
    t_order: int = 8
    chunk_elems: int = 4_000_000

    def __post_init__(self):
        if self.intensity_flavor not in (None, BASELINE, PHP):
            raise ValueError(f"unknown intensity flavor {self.intensity_flavor!r}")
        if self.t_weight not in ("radial", "cumulative"):
            raise ValueError(f"unknown all-holes weight {self.t_weight!r}")
        states = tuple(self.hole_states)
        if not set(states) <= set(_STATES):
            raise ValueError("hole_states must be a subset of {LOS, NLOS}")
        object.__setattr__(self, "hole_states", states)


def _flavors(approach: Approach, override: str | None):
    """(serving, exclusion, interference) intensity flavors per strategy."""
    if override is not None:
        return override, override, override
    if approach in (Approach.BASELINE_PPP, Approach.SERVING_HOLE):
        return PHP, PHP, BASELINE
    if approach == Approach.EQUIVALENT_DENSITY:
        return PHP, PHP, PHP
    return BASELINE, BASELINE, BASELINE


def fading_tail_rate(nu: int) -> float:
    """Rate constant of the normalized-gamma CDF bound: nu * (nu!)^(-1/nu)."""
    return nu * math.factorial(nu) ** (-1.0 / nu)


def gamma_tail_scale(cfg: NetworkConfig, k: int, s: LinkState, n: int, tau: float, x):
    """Exponent scale mu of the n-th alternating term at serving distance x."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("serving distance must be positive")
    if not 1 <= n <= cfg.nu(s):
        raise ValueError(f"term index {n} outside 1..{cfg.nu(s)}")
    aligned = cfg.tx_power(k) * cfg.main_gain(k) * cfg.main_ue
    return n * tau * fading_tail_rate(cfg.nu(s)) * x ** cfg.alpha(s) / aligned


def _tail_fraction(nu: int, z):
    """F(nu, z) = 1 - (1 + z)^(-nu), stable for huge and infinite z.

    Small integer orders expand to ((1+z)^nu - 1) / (1+z)^nu, pure arithmetic
    that keeps full relative accuracy at tiny z and avoids transcendental
    calls on the hot tensor paths.
    """
    z = np.minimum(z, 1e30)
    w = 1.0 / (1.0 + z)
    if nu == 1:
        return z * w
    if nu == 2:
        return z * (2.0 + z) * (w * w)
    if nu == 3:
        return z * (3.0 + z * (3.0 + z)) * (w * w * w)
    if nu == 4:
        w2 = w * w
        return z * (4.0 + z * (6.0 + z * (4.0 + z))) * (w2 * w2)
    with np.errstate(over="ignore", invalid="ignore"):
        out = -np.expm1(-nu * np.log1p(z))
    return np.where(np.isfinite(out), out, 1.0)


def _tail_fraction_consume(nu: int, z):
    """In-place F(nu, z) that overwrites its argument buffer.

    Computes 1 - (1+z)^(-nu) with the minimum number of tensor passes; the
    subtraction costs ~1e-16 absolute noise at tiny z, irrelevant inside the
    hole-correction averages where it is used.
    """
    np.minimum(z, 1e30, out=z)
    z += 1.0
    np.divide(1.0, z, out=z)  # z now holds (1+z)^-1
    if nu == 2:
        np.multiply(z, z, out=z)
    elif nu == 3:
        w2 = z * z
        np.multiply(w2, z, out=z)
    elif nu == 4:
        np.multiply(z, z, out=z)
        np.multiply(z, z, out=z)
    elif nu != 1:
        with np.errstate(under="ignore"):
            np.power(z, nu, out=z)
    return np.subtract(1.0, z, out=z)


# ---------------------------------------------------------------------------
# Term evaluator
# ---------------------------------------------------------------------------


class _TermEvaluator:
    """Vectorised integrand of one (serving tier, serving state) term.

    Called with a batch of serving distances x of shape (B,), returns the
    integrand for every mu-scale component, shape (B, M). Components bundle
    the alternating-sum index and the threshold grid.
    """

    def __init__(self, cfg, approach, k, s, mu_scales, opts: CoverageOptions):
        self.cfg = cfg
        self.approach = approach
        self.k = k
        self.s = s
        self.opts = opts
        self.alpha_s = cfg.alpha(s)
        self.mu_scales = np.asarray(mu_scales, dtype=float)
        serv_fl, excl_fl, w_fl = _flavors(approach, opts.intensity_flavor)
        self.serv = intensity(cfg, k, s, serv_fl)
        self.excl = {(j, s2): intensity(cfg, j, s2, excl_fl) for j, s2 in _CLASSES}
        self.wmeas = {(j, s2): intensity(cfg, j, s2, w_fl) for j, s2 in _CLASSES}
        aligned = cfg.tx_power(k) * cfg.main_gain(k)
        self.kappa = {
            (j, s2): ((cfg.tx_power(j) * cfg.main_gain(j)) / aligned) ** (1.0 / cfg.alpha(s2))
            for j, s2 in _CLASSES
        }
        self.rexp = {s2: self.alpha_s / cfg.alpha(s2) for s2 in _STATES}
        self.pmf = {
            j: (np.asarray(cfg.directivity(j).gains), np.asarray(cfg.directivity(j).probs))
            for j in (1, 2)
        }
        self.holes_active = cfg.hole_radius > 0 and cfg.hole_angle > 0
        self.diag = {"q_inner_disk_evals": 0, "calls": 0}

    # -- geometry helpers ---------------------------------------------------

    def radius(self, j, s2, x):
        return self.kappa[(j, s2)] * x ** self.rexp[s2]

    def exclusion_sum(self, x):
        tot = np.zeros_like(np.asarray(x, dtype=float))
        for j, s2 in _CLASSES:
            tot += self.excl[(j, s2)].cum(self.radius(j, s2, x))
        return tot

    # -- interference exponent W ---------------------------------------------

    def _w_upper(self, s2, R, mu_peak):
        """Radius beyond which the remaining W-integrand mass is negligible."""
        cfg = self.cfg
        if s2 == LinkState.LOS:
            return R + cfg.los.support_radius(1e-24)
        alpha = cfg.alpha(s2)
        lam = max(m.density for m in (self.wmeas[(1, s2)], self.wmeas[(2, s2)]))
        scale = 2.0 * math.pi * lam * mu_peak * cfg.p_macro * self.pmf[1][0][0]
        # F(nu, z) <= nu z bounds the tail by scale * r^(2-alpha) / (alpha-2)
        r_tail = (np.maximum(scale, 1e-30) / ((alpha - 2.0) * 1e-10)) ** (1.0 / (alpha - 2.0))
        return np.maximum(2.0 * R, r_tail)

    def _w(self, j, s2, x, mu):
        """W_{j}^{s2}(x): tier-j state-s2 interference exponent, shape (M, B)."""
        meas = self.wmeas[(j, s2)]
        if meas.density == 0.0:
            return np.zeros((mu.shape[0], len(x)))
        cfg = self.cfg
        R = self.radius(j, s2, x)
        upper = self._w_upper(s2, R, float(np.max(self.mu_scales)) * np.max(x) ** self.alpha_s)
        t, wt = quadrature.composite_nodes(
            np.log(R), np.log(upper), self.opts.w_panels, self.opts.w_order
        )
        r = np.exp(t)
        geom = meas.radial(r) * r * wt  # extra r from dr = r dt
        gains, probs = self.pmf[j]
        nu2 = cfg.nu(s2)
        zc = np.multiply.outer((cfg.tx_power(j) / nu2) * r ** (-cfg.alpha(s2)), gains)
        f = _tail_fraction(nu2, mu[:, :, None, None] * zc[None, :, :, :])
        return np.einsum("mbrg,g,br->mb", f, probs, geom)

    # -- hole exponent Q ------------------------------------------------------

    def _q(self, s2, y, mu, order=None, fast=False):
        """Q^{s2}(y): interference mass removed by one sector hole whose macro
        sits at distance y; y flat of shape (L,), mu of shape (M, L).

        Exact one-dimensional reduction of the polar two-fold integral: the
        angular fraction of the hole at origin-distance u is
        clamp(arccos((u^2 + y^2 - D^2) / (2 u y))) / pi; when y < D the region
        u < D - y sees the full circle (clamp at -1), and when y > D the region
        u < y - D sees none of it (clamp at +1). Nodes are cosine-clustered so
        the square-root behaviour at the geometric edges stays spectral.
        """
        cfg = self.cfg
        D = cfg.hole_radius
        order = order or self.opts.q_order
        zeros = np.zeros_like(y)
        u_in, w_in = quadrature.cosine_nodes(zeros, np.maximum(0.0, D - y), order)
        u_out, w_out = quadrature.cosine_nodes(np.abs(y - D), y + D, order)
        u = np.concatenate([u_in, u_out], axis=-1)
        w = np.concatenate([w_in, w_out], axis=-1)
        u = np.maximum(u, 1e-12)
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.arccos(np.clip((u * u + y[:, None] ** 2 - D * D) / (2.0 * u * y[:, None]), -1.0, 1.0)) / math.pi
        lam_u = cfg.lambda_small * (cfg.hole_angle / TWO_PI) * frac
        p_state = cfg.los.prob(u)
        if s2 == LinkState.NLOS:
            p_state = 1.0 - p_state
        geom = TWO_PI * lam_u * p_state * u * w
        gains, probs = self.pmf[2]
        nu2 = cfg.nu(s2)
        zc = np.multiply.outer((cfg.p_small / nu2) * u ** (-cfg.alpha(s2)), gains)
        z = mu[:, :, None, None] * zc[None, :, :, :]
        f = _tail_fraction_consume(nu2, z) if fast else _tail_fraction(nu2, z)
        return np.einsum("mlng,g,ln->ml", f, probs, geom)

    def _q_sum(self, y, mu, order=None, fast=False):
        self.diag["q_inner_disk_evals"] += int(np.sum(y < self.cfg.hole_radius))
        return sum(self._q(s2, y, mu, order, fast) for s2 in _STATES)

    # -- nearest-holes factor Z ----------------------------------------------

    def _bisect_cum_delta(self, meas, R, base, target):
        """Vectorised solve of meas.cum(y) - base = target for y >= R."""
        hi = np.maximum(2.0 * R, R + 10.0)
        for _ in range(200):
            need = (meas.cum(hi) - base) < target
            if not np.any(need):
                break
            hi = np.where(need, hi * 2.0, hi)
        lo = R.copy()
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            low = (meas.cum(mid) - base) < target
            lo = np.where(low, mid, lo)
            hi = np.where(low, hi, mid)
        return hi

    def _z(self, x, mu):
        """Z(x): expected exp(sum_s' Q) over the nearest non-serving macro of
        each state, conditional on existence; absent states contribute 1."""
        cfg = self.cfg
        out = np.ones((mu.shape[0], len(x)))
        for s2 in _STATES:
            meas = intensity(cfg, 1, s2, BASELINE)
            if meas.total() == 0.0:
                continue
            R1 = self.radius(1, s2, x)
            tail = meas.tail(R1)
            den = -np.expm1(-tail)  # expm1(-inf) = -1 covers the NLOS case
            absent = tail < 1e-14
            den = np.where(absent, 1.0, den)
            if s2 == LinkState.LOS:
                ymax = R1 + cfg.los.support_radius(math.exp(-60.0))
            else:
                ymax = self._bisect_cum_delta(meas, R1, meas.cum(R1), 45.0)
            # Piecewise rule split where the hole exponent loses smoothness
            # (macro distance crossing the hole radius).
            split = np.minimum(np.maximum(R1, cfg.hole_radius), ymax)
            y_head, w_head = quadrature.composite_nodes(R1, split, 3, self.opts.z_order)
            y_tail, w_tail = quadrature.composite_nodes(
                split, ymax, self.opts.z_panels, self.opts.z_order, spacing="log"
            )
            y = np.concatenate([y_head, y_tail], axis=-1)
            wy = np.concatenate([w_head, w_tail], axis=-1)
            pdf = meas.radial(y) * np.exp(-meas.annulus(R1[:, None], y)) / den[:, None]
            ny = y.shape[-1]
            mu_flat = np.repeat(mu, ny, axis=1)
            qsum = self._q_sum(
                y.reshape(-1), mu_flat, self.opts.q_order_inner, fast=True
            ).reshape(mu.shape[0], len(x), ny)
            factor = np.einsum("mby,by->mb", np.exp(qsum), pdf * wy)
            factor = np.where(absent[None, :], 1.0, factor)
            # the exponent is non-negative, so the average of exp(...) against
            # a density cannot fall below 1; trim pdf-normalization noise
            out *= np.maximum(factor, 1.0)
        return out

    # -- all-holes factor T ----------------------------------------------------

    def _t_log(self, x, mu):
        """log T(x): removal of every non-serving macro hole, overlaps ignored.

        The exponent integrates sum_s' (exp(Q^{s'}(y)) - 1) against the macro
        intensity beyond the exclusion radius; with the substitution
        y = R/v the semi-infinite range becomes (0, 1] with power-law tails
        mapped to polynomials. Returned in log form: T itself can overflow
        where the Laplace exponent has long since killed the integrand.
        """
        cfg = self.cfg
        exponent = np.zeros((mu.shape[0], len(x)))
        v, wv = quadrature.composite_nodes(0.0, 1.0, self.opts.t_panels, self.opts.t_order)
        for s2 in self.opts.hole_states:
            meas = intensity(cfg, 1, s2, BASELINE)
            if meas.density == 0.0:
                continue
            R1 = self.radius(1, s2, x)
            # The hole exponent is non-smooth where the macro distance crosses
            # the hole radius, so integrate [R1, max(R1, D)] separately before
            # mapping the tail through y = R/v.
            split = np.maximum(R1, cfg.hole_radius)
            y_head, w_head = quadrature.composite_nodes(R1, split, 3, self.opts.t_order)
            y_tail = split[:, None] / v[None, :]
            w_tail = split[:, None] * wv[None, :] / v[None, :] ** 2
            y = np.concatenate([y_head, y_tail], axis=-1)
            wy = np.concatenate([w_head, w_tail], axis=-1)
            weight = meas.radial(y) if self.opts.t_weight == "radial" else meas.cum(y)
            ny = y.shape[-1]
            mu_flat = np.repeat(mu, ny, axis=1)
            qsum = self._q_sum(
                y.reshape(-1), mu_flat, self.opts.q_order_inner, fast=True
            ).reshape(mu.shape[0], len(x), ny)
            exponent += np.einsum("mby,by->mb", -np.expm1(qsum), weight * wy)
        return -exponent

    # -- assembled integrand ----------------------------------------------------

    def _log_correction(self, x, mu):
        if not self.holes_active:
            return 0.0
        if self.approach == Approach.SERVING_HOLE:
            if self.k != 1:
                return 0.0
            return self._q_sum(x, mu)
        if self.approach == Approach.NEAREST_HOLES:
            return np.log(self._z(x, mu))
        if self.approach == Approach.ALL_HOLES:
            return self._t_log(x, mu)
        return 0.0

    def _chunk_size(self):
        if self.approach in (Approach.NEAREST_HOLES, Approach.ALL_HOLES) and self.holes_active:
            ny = (3 + max(self.opts.z_panels, self.opts.t_panels)) * max(
                self.opts.z_order, self.opts.t_order
            )
            per_x = len(self.mu_scales) * ny * 2 * self.opts.q_order_inner * 4
            return max(1, self.opts.chunk_elems // per_x)
        return 4096

    def needs_loose_outer(self):
        return self.holes_active and self.approach in (
            Approach.NEAREST_HOLES,
            Approach.ALL_HOLES,
        )

    def __call__(self, x):
        self.diag["calls"] += 1
        x = np.asarray(x, dtype=float)
        out = np.empty((len(x), len(self.mu_scales)))
        step = self._chunk_size()
        # Hole corrections are bounded above (Z, exp(sum Q) by the hole mass;
        # log T stays far below the Laplace decay), so components whose
        # exponent is already this dead cannot be resurrected: skip them.
        dead = -250.0 if self.approach == Approach.ALL_HOLES else -80.0
        for lo in range(0, len(x), step):
            xs = x[lo : lo + step]
            mu = self.mu_scales[:, None] * xs[None, :] ** self.alpha_s
            exponent = -(
                mu * self.cfg.noise_power
                + sum(self._w(j, s2, xs, mu) for j, s2 in _CLASSES)
                + self.exclusion_sum(xs)[None, :]
            )
            if self.holes_active and not (
                self.approach == Approach.SERVING_HOLE and self.k != 1
            ):
                active = np.nonzero(np.max(exponent, axis=1) > dead)[0]
                if len(active):
                    # Corrections combine in log domain: T can exceed exp(700)
                    # exactly where the integrand has been annihilated anyway.
                    exponent[active] += self._log_correction(
                        xs, np.ascontiguousarray(mu[active])
                    )
                # Removing hole interferers cannot push the interference
                # Laplace factor above 1; the overlap-ignoring corrections
                # violate this once holes tile the plane (large
                # lambda_1 theta_c D^2), so cap at the noise-only exponent.
                np.minimum(exponent, -mu * self.cfg.noise_power, out=exponent)
            out[lo : lo + step] = (np.exp(exponent) * self.serv.radial(xs)[None, :]).T
        return out


# ---------------------------------------------------------------------------
# Coverage assembly
# ---------------------------------------------------------------------------


def _term_mu_scales(cfg, k, s, taus):
    """Flattened (n, tau) mu-scale axis for one serving class."""
    nu = cfg.nu(s)
    aligned = cfg.tx_power(k) * cfg.main_gain(k) * cfg.main_ue
    eta = fading_tail_rate(nu)
    n_idx = np.arange(1, nu + 1)
    return (n_idx[:, None] * np.asarray(taus)[None, :] * eta / aligned).reshape(-1)


def _evaluate_term(cfg, approach, k, s, term_taus, opts):
    """Alternating-sum contribution of one serving class, shape (n_tau,)."""
    n_tau = len(term_taus)
    mu_scales = _term_mu_scales(cfg, k, s, term_taus)
    ev = _TermEvaluator(cfg, approach, k, s, mu_scales, opts)
    envelope = lambda r: ev.serv.radial(r) * np.exp(-ev.exclusion_sum(r))
    upper = find_decay_radius(envelope, threshold=1e-12)
    outer_spec = opts.outer_corrected if ev.needs_loose_outer() else opts.outer
    try:
        res = quadrature.integrate(ev, 0.0, upper, outer_spec)
    except quadrature.QuadratureError as exc:
        raise quadrature.QuadratureError(
            f"{approach.value} coverage term (tier {k}, {s.name}): {exc}",
            estimate=exc.estimate,
            error_bound=exc.error_bound,
        ) from exc
    nu = cfg.nu(s)
    terms = np.asarray(res.value).reshape(nu, n_tau)
    signs = (-1.0) ** (np.arange(1, nu + 1) + 1)
    coeff = np.array([math.comb(nu, n) for n in range(1, nu + 1)])
    diag = {
        "upper_radius_m": upper,
        "neval": res.neval,
        "subdivisions": res.subdivisions,
        "q_inner_disk_evals": ev.diag["q_inner_disk_evals"],
        "per_order_terms": terms.tolist(),
    }
    return (signs * coeff) @ terms, diag


def _term_job(args):
    cfg, approach, k, s, term_taus, opts = args
    value, diag = _evaluate_term(cfg, approach, k, s, term_taus, opts)
    return k, s, value, diag


def coverage_probabilities(
    cfg: NetworkConfig,
    approach: Approach,
    tau_grid=None,
    opts: CoverageOptions | None = None,
    workers: int = 1,
):
    """Coverage probability at each linear threshold in `tau_grid`.

    With `tau_grid=None`, evaluates at the config's own per-tier thresholds
    (a single point). The four serving-class terms are independent and can be
    evaluated by parallel workers; results are identical for any worker count.
    Returns (probabilities, diagnostics).
    """
    approach = Approach(approach)
    opts = opts or CoverageOptions()
    shared_grid = tau_grid is not None
    taus = np.atleast_1d(np.asarray(tau_grid, dtype=float)) if shared_grid else None
    n_tau = len(taus) if shared_grid else 1
    raw = np.zeros(n_tau)
    diagnostics = {"approach": approach.value, "terms": {}}
    start = time.perf_counter()
    jobs = []
    for k in (1, 2):
        for s in _STATES:
            term_taus = taus if shared_grid else np.array([cfg.tau(k)])
            if intensity(cfg, k, s, _flavors(approach, opts.intensity_flavor)[0]).total() == 0.0:
                continue
            jobs.append((cfg, approach, k, s, term_taus, opts))
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_term_job, jobs))
    else:
        results = [_term_job(job) for job in jobs]
    for k, s, value, diag in results:
        raw += value
        diagnostics["terms"][f"tier{k}_{s.name.lower()}"] = diag
    overshoot = max(float(np.max(raw - 1.0, initial=0.0)), float(np.max(-raw, initial=0.0)))
    if overshoot > 1e-3:
        warnings.warn(
            f"coverage estimate left [0, 1] by {overshoot:.2e}; "
            "the alternating fading bound is an approximation",
            stacklevel=2,
        )
    diagnostics["clamp_overshoot"] = overshoot
    diagnostics["wall_time_s"] = time.perf_counter() - start
    diagnostics["quadrature"] = {
        "outer_rel_tol": opts.outer.rel_tol,
        "outer_abs_tol": opts.outer.abs_tol,
    }
    return np.clip(raw, 0.0, 1.0), diagnostics


# -- public single-term operations (thin wrappers over the evaluator) --------


def _shape_result(out, x, mu):
    """Collapse the (M, B) evaluator output onto the caller's scalar/vector shapes."""
    if np.ndim(mu) == 0:
        out = out[0]
    if np.ndim(x) == 0:
        out = out[..., 0]
    if out.ndim == 0:
        return float(out)
    return out


def interference_exponent(
    cfg, j, s_int, x, mu, k, s, flavor: str = BASELINE, opts: CoverageOptions | None = None
):
    """W_j^{s_int}(x) for a (k, s) serving link with exponent scale mu."""
    opts = opts or CoverageOptions()
    approach = Approach.BASELINE_PPP if flavor == BASELINE else Approach.EQUIVALENT_DENSITY
    ev = _TermEvaluator(cfg, approach, k, s, np.atleast_1d(mu), opts)
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    mu_grid = np.broadcast_to(np.atleast_1d(mu)[:, None], (len(np.atleast_1d(mu)), len(x_arr)))
    out = ev._w(j, s_int, x_arr, np.ascontiguousarray(mu_grid))
    return _shape_result(out, x, mu)


def serving_hole_exponent(cfg, s_int, x, mu, opts: CoverageOptions | None = None):
    """Q^{s_int}(x): interference exponent removed by a hole at distance x."""
    opts = opts or CoverageOptions()
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr <= 0):
        raise ValueError("hole distance must be positive")
    ev = _TermEvaluator(cfg, Approach.SERVING_HOLE, 1, LinkState.LOS, np.atleast_1d(mu), opts)
    mu_grid = np.broadcast_to(np.atleast_1d(mu)[:, None], (len(np.atleast_1d(mu)), len(x_arr)))
    out = ev._q(s_int, x_arr, np.ascontiguousarray(mu_grid))
    return _shape_result(out, x, mu)


def circular_hole_exponent(cfg, s_int, x: float, mu: float, spec=None):
    """Classical full-circle hole exponent, written without any angular
    fraction and integrated adaptively: an independent implementation that the
    sector form must reproduce at a full central angle.

    The hole-point density seen at origin-distance u is
    lambda_2 * arccos((u^2 + x^2 - D^2) / (2 u x)) / pi.
    """
    if x <= 0:
        raise ValueError("hole distance must be positive")
    D = cfg.hole_radius
    if D == 0:
        return 0.0
    spec = spec or quadrature.QuadratureSpec(rel_tol=1e-10, abs_tol=1e-15, max_subdivisions=600)
    gains = np.asarray(cfg.directivity(2).gains)
    probs = np.asarray(cfg.directivity(2).probs)
    nu2 = cfg.nu(s_int)
    alpha2 = cfg.alpha(s_int)

    def integrand(u):
        u = np.maximum(u, 1e-13)
        arg = np.clip((u * u + x * x - D * D) / (2.0 * u * x), -1.0, 1.0)
        lam = cfg.lambda_small * np.arccos(arg) / math.pi
        p_state = cfg.los.prob(u)
        if s_int == LinkState.NLOS:
            p_state = 1.0 - p_state
        zc = (mu * cfg.p_small / nu2) * u ** (-alpha2)
        f = _tail_fraction(nu2, zc[:, None] * gains[None, :])
        return (f @ probs) * TWO_PI * lam * p_state * u

    total = 0.0
    if x < D:
        total += quadrature.integrate(integrand, 0.0, D - x, spec).value
    total += quadrature.integrate(integrand, abs(x - D), x + D, spec).value
    return total


def polar_hole_exponent(cfg, s_int, x: float, mu: float, spec=None):
    """Two-fold polar form of Q via the cosine law, the cross-validation
    oracle for the one-dimensional reduction: nested adaptive quadrature over
    hole-local radius and angle."""
    if x <= 0:
        raise ValueError("hole distance must be positive")
    D = cfg.hole_radius
    if D == 0 or cfg.hole_angle == 0:
        return 0.0
    spec = spec or quadrature.QuadratureSpec(rel_tol=1e-9, abs_tol=1e-14)
    inner_spec = quadrature.QuadratureSpec(rel_tol=1e-10, abs_tol=1e-15)
    gains = np.asarray(cfg.directivity(2).gains)
    probs = np.asarray(cfg.directivity(2).probs)
    nu2 = cfg.nu(s_int)
    alpha2 = cfg.alpha(s_int)

    def integrand_u(u_arr):
        vals = np.empty_like(u_arr)
        for i, u in enumerate(u_arr):
            def integrand_phi(phi):
                r2 = u * u + x * x - 2.0 * u * x * np.cos(phi)
                r = np.sqrt(np.maximum(r2, 1e-24))
                p_state = cfg.los.prob(r)
                if s_int == LinkState.NLOS:
                    p_state = 1.0 - p_state
                z = (mu * cfg.p_small / nu2) * r ** (-alpha2)
                f = _tail_fraction(nu2, z[:, None] * gains[None, :])
                return (f @ probs) * p_state
            # integrand is even around phi = 0 with period 2 pi
            vals[i] = 2.0 * quadrature.integrate(integrand_phi, 0.0, math.pi, inner_spec).value * u
        return vals

    res = quadrature.integrate(integrand_u, 0.0, D, spec)
    return (cfg.hole_angle / TWO_PI) * cfg.lambda_small * res.value


def nearest_holes_factor(cfg, k, s, x, mu, opts: CoverageOptions | None = None):
    """Z(x) for a (k, s) serving link."""
    opts = opts or CoverageOptions()
    ev = _TermEvaluator(cfg, Approach.NEAREST_HOLES, k, s, np.atleast_1d(mu), opts)
    if not ev.holes_active:
        return 1.0 if np.ndim(x) == 0 else np.ones(np.shape(x))
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    mu_grid = np.broadcast_to(np.atleast_1d(mu)[:, None], (len(np.atleast_1d(mu)), len(x_arr)))
    out = ev._z(x_arr, np.ascontiguousarray(mu_grid))
    return _shape_result(out, x, mu)


def all_holes_factor(
    cfg, k, s, x, mu, opts: CoverageOptions | None = None, hole_states=None, t_weight=None
):
    """T(x) for a (k, s) serving link; >= 1 since holes only remove interference."""
    opts = opts or CoverageOptions()
    if hole_states is not None or t_weight is not None:
        opts = replace(
            opts,
            hole_states=tuple(hole_states) if hole_states is not None else opts.hole_states,
            t_weight=t_weight or opts.t_weight,
        )
    ev = _TermEvaluator(cfg, Approach.ALL_HOLES, k, s, np.atleast_1d(mu), opts)
    if not ev.holes_active:
        return 1.0 if np.ndim(x) == 0 else np.ones(np.shape(x))
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    mu_grid = np.broadcast_to(np.atleast_1d(mu)[:, None], (len(np.atleast_1d(mu)), len(x_arr)))
    out = np.exp(ev._t_log(x_arr, np.ascontiguousarray(mu_grid)))
    return _shape_result(out, x, mu)


# ---------------------------------------------------------------------------
# Sweep dispatcher
# ---------------------------------------------------------------------------


def _apply_sweep_value(cfg: NetworkConfig, variable: str, value: float) -> NetworkConfig:
    if variable == "theta_c":
        return cfg.replace(hole_angle=value)
    if variable == "lambda1":
        return cfg.replace(lambda_macro=value * 1e-6)
    if variable == "lambda2_over_lambda1":
        return cfg.replace(lambda_small=value * cfg.lambda_macro)
    if variable == "r_los":
        return cfg.replace(los=ExponentialLos.from_avg_distance(value))
    raise ValueError(f"unknown sweep variable {variable!r}")


def _sweep_point_job(args):
    cfg, approach, variable, value, opts = args
    cfg_i = _apply_sweep_value(cfg, variable, value)
    p, d = coverage_probabilities(cfg_i, approach, None, opts)
    return p[0], d["clamp_overshoot"]


def coverage(
    cfg: NetworkConfig,
    approach: Approach,
    sweep: SweepSpec,
    opts: CoverageOptions | None = None,
    workers: int = 1,
) -> CoverageCurve:
    """Coverage curve along one sweep variable for one strategy.

    The threshold sweep is evaluated in a single vectorised pass; other sweep
    variables rebuild the config point by point at its fixed per-tier
    thresholds. Results are identical for any worker count.
    """
    approach = Approach(approach)
    opts = opts or CoverageOptions()
    start = time.perf_counter()
    if sweep.variable == "tau":
        tau_lin = 10.0 ** (np.asarray(sweep.values) / 10.0)
        probs, diag = coverage_probabilities(cfg, approach, tau_lin, opts, workers=workers)
    else:
        jobs = [(cfg, approach, sweep.variable, v, opts) for v in sweep.values]
        if workers > 1 and len(jobs) > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_sweep_point_job, jobs))
        else:
            results = [_sweep_point_job(job) for job in jobs]
        probs = np.asarray([r[0] for r in results])
        diag = {
            "approach": approach.value,
            "points": [
                {"value": v, "clamp_overshoot": r[1]}
                for v, r in zip(sweep.values, results)
            ],
        }
    diag["wall_time_s"] = time.perf_counter() - start
    return CoverageCurve(
        sweep_variable=sweep.variable,
        values=np.asarray(sweep.values),
        probabilities=probs,
        approach=approach.value,
        fingerprint=cfg.fingerprint(),
        metadata=diag,
    )
