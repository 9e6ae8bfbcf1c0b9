import math

import numpy as np
import pytest

import mmwhcn
from mmwhcn import intensity as iy
from mmwhcn import quadrature as quad
from mmwhcn.model import LinkState

STATES = (LinkState.LOS, LinkState.NLOS)
CLASSES = tuple((k, s) for k in (1, 2) for s in STATES)


def test_equivalent_density_values(cfg_setup2):
    lam_eq = iy.equivalent_small_cell_density(cfg_setup2)
    assert lam_eq == pytest.approx(131.5567537639691e-6, rel=1e-12)
    assert lam_eq <= cfg_setup2.lambda_small
    no_holes = cfg_setup2.replace(hole_angle=0.0)
    assert iy.equivalent_small_cell_density(no_holes) == cfg_setup2.lambda_small
    # full-angle 100 m holes at lambda_1 = 2.5 per km^2
    cfg = cfg_setup2.replace(lambda_macro=2.5e-6, hole_angle=2 * math.pi, hole_radius=100.0)
    assert iy.equivalent_small_cell_density(cfg) == pytest.approx(
        cfg.lambda_small * math.exp(-0.025 * math.pi), rel=1e-12
    )


def test_intensity_monotone_and_zero_at_origin(cfg_setup2):
    meas = iy.intensity(cfg_setup2, 2, LinkState.LOS)
    r = np.linspace(0.0, 3000.0, 200)
    cum = meas.cum(r)
    assert cum[0] == 0.0
    assert np.all(np.diff(cum) >= 0)
    assert np.all(meas.radial(r) >= 0)


def test_intensity_cum_matches_quadrature(cfg_setup2):
    for flavor in (iy.BASELINE, iy.PHP):
        for k, s in CLASSES:
            meas = iy.intensity(cfg_setup2, k, s, flavor)
            got = float(meas.cum(350.0))
            ref = quad.integrate(lambda r: meas.radial(r), 0.0, 350.0).value
            assert got == pytest.approx(ref, rel=1e-9)


def test_intensity_tail_is_stable_where_cum_saturates(cfg_setup2):
    meas = iy.intensity(cfg_setup2, 1, LinkState.LOS, iy.BASELINE)
    # far beyond the blockage support cum() - total cancels; tail() must not
    r = 1e4
    tail = float(meas.tail(r))
    assert tail > 0
    assert tail == pytest.approx(
        2 * math.pi * cfg_setup2.lambda_macro * cfg_setup2.los.tail_integral(r), rel=1e-12
    )
    assert float(meas.annulus(r, 2 * r)) <= tail


def test_presence_probability(cfg_setup2):
    # tier-1 LOS presence: 1 - exp(-2 pi lambda1 / beta^2)
    assert iy.presence_probability(cfg_setup2, 1, LinkState.LOS) == pytest.approx(
        0.7153904566639707, rel=1e-12
    )
    assert iy.presence_probability(cfg_setup2, 1, LinkState.NLOS) == 1.0
    empty = cfg_setup2.replace(lambda_macro=0.0)
    assert iy.presence_probability(empty, 1, LinkState.LOS) == 0.0


def test_exclusion_radius_identity_and_value(cfg_setup2):
    x = np.array([50.0, 120.0, 400.0])
    for k, s in CLASSES:
        assert np.allclose(iy.exclusion_radius(cfg_setup2, k, s, k, s, x), x)
    # -20 dB power gap, equal gains, serving LOS macro at 100 m, NLOS small target
    got = iy.exclusion_radius(cfg_setup2, 2, LinkState.NLOS, 1, LinkState.LOS, 100.0)
    assert got == pytest.approx(3.1622776601683795, rel=1e-12)
    with pytest.raises(ValueError):
        iy.exclusion_radius(cfg_setup2, 1, LinkState.LOS, 1, LinkState.LOS, 0.0)


def test_los_exclusion_dominates_nlos(cfg_setup2):
    # gamma = 1/alpha_los - 1/alpha_nlos > 0 makes LOS interferers excluded
    # much farther out than NLOS ones for any serving distance above 1 m
    gamma = 1.0 / cfg_setup2.alpha_los - 1.0 / cfg_setup2.alpha_nlos
    assert gamma > 0
    for k, s in CLASSES:
        for x in (1.5, 20.0, 300.0):
            r_los = float(iy.exclusion_radius(cfg_setup2, 1, LinkState.LOS, k, s, x))
            r_nlos = float(iy.exclusion_radius(cfg_setup2, 1, LinkState.NLOS, k, s, x))
            kappa = (cfg_setup2.p_macro * cfg_setup2.main_macro) / (
                cfg_setup2.tx_power(k) * cfg_setup2.main_gain(k)
            )
            assert r_los / r_nlos == pytest.approx(
                kappa**gamma * x ** (cfg_setup2.alpha(s) * gamma), rel=1e-9
            )
            if kappa >= 1.0 and x > 1.0:
                assert r_los > r_nlos


def test_nearest_distance_pdfs_normalize(cfg_setup2):
    for k, s in CLASSES:
        pdf = lambda r: iy.nearest_bs_distance_pdf(cfg_setup2, k, s, r)
        upper = iy.find_decay_radius(pdf, threshold=1e-13)
        mass = quad.integrate(pdf, 0.0, upper).value
        assert mass == pytest.approx(1.0, abs=1e-4)


def test_nearest_distance_pdf_edge_cases(cfg_setup2):
    assert iy.nearest_bs_distance_pdf(cfg_setup2, 2, LinkState.LOS, 0.0) == 0.0
    with pytest.raises(ValueError):
        iy.nearest_bs_distance_pdf(cfg_setup2, 2, LinkState.LOS, -1.0)
    empty = cfg_setup2.replace(lambda_macro=0.0)
    with pytest.raises(iy.NoStationError):
        iy.nearest_bs_distance_pdf(empty, 1, LinkState.LOS, 100.0)


def test_association_probabilities_sum_to_one(cfg_setup1, cfg_setup2):
    for cfg in (cfg_setup1, cfg_setup2):
        probs = iy.association_probabilities(cfg)
        assert sum(probs.values()) == pytest.approx(1.0, abs=1e-3)
        assert all(p >= 0 for p in probs.values())


def test_association_rarely_nlos(cfg_setup2):
    probs = iy.association_probabilities(cfg_setup2)
    nlos_mass = probs[(1, LinkState.NLOS)] + probs[(2, LinkState.NLOS)]
    assert nlos_mass < 0.02


def test_association_zero_power_tier(cfg_setup2):
    cfg = cfg_setup2.replace(p_small=1e-30)
    probs = iy.association_probabilities(cfg)
    assert probs[(2, LinkState.LOS)] + probs[(2, LinkState.NLOS)] < 1e-6


def test_interferer_distance_pdf_normalizes(cfg_setup2):
    x = 100.0
    for s2 in STATES:
        r_min = float(iy.exclusion_radius(cfg_setup2, 1, s2, 1, LinkState.LOS, x))
        pdf = lambda y: iy.interferer_macro_distance_pdf(cfg_setup2, s2, y, 1, LinkState.LOS, x)
        upper = iy.find_decay_radius(pdf, lo=max(r_min, 1.0) * 1.0001, threshold=1e-13)
        mass = quad.integrate(pdf, r_min, upper).value
        assert mass == pytest.approx(1.0, abs=1e-4)
        assert pdf(np.array([0.5 * r_min]))[0] == 0.0


def test_interferer_distance_pdf_absent_state(cfg_setup2):
    # serving NLOS macro at large x pushes the LOS exclusion radius to x^2,
    # beyond any possible LOS interferer
    with pytest.raises(iy.AbsentInterfererError):
        iy.interferer_macro_distance_pdf(cfg_setup2, LinkState.LOS, 1e6, 1, LinkState.NLOS, 5e3)


def test_association_matches_simulation(cfg_setup2, mc_store):
    from mmwhcn import montecarlo as mc

    batch = mc_store(cfg_setup2, 4000, seed=314, window=2500.0)
    est = mc.estimate_association(cfg_setup2, 0, 0, batch=batch)
    probs = iy.association_probabilities(cfg_setup2)
    for cls in CLASSES:
        tol = max(0.03, 4 * est.stderr[cls])
        assert abs(probs[cls] - est.prob[cls]) < tol
