import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import mmwhcn
from mmwhcn import model
from mmwhcn.model import ConfigError, ExponentialLos, LinkState, LosBall


def test_preset_setup2_matches_published_parameters(cfg_setup2):
    cfg = cfg_setup2
    assert cfg.lambda_macro == pytest.approx(10e-6, rel=1e-12)
    assert cfg.lambda_small == pytest.approx(200e-6, rel=1e-12)
    assert cfg.hole_radius == 200.0
    assert cfg.hole_angle == pytest.approx(2 * math.pi / 3, rel=1e-12)
    assert cfg.p_macro == pytest.approx(199.5262314968879, rel=1e-12)
    assert cfg.p_small == pytest.approx(1.99526231496888, rel=1e-10)
    assert cfg.main_macro == pytest.approx(10.0)
    assert cfg.side_macro == pytest.approx(0.1)  # 20 dB front-to-back
    assert cfg.beamwidth_small == pytest.approx(math.pi / 3)
    assert cfg.main_ue == pytest.approx(10.0)
    assert cfg.beamwidth_ue == pytest.approx(math.pi / 2)
    assert cfg.alpha_los == 2.0 and cfg.alpha_nlos == 4.0
    assert cfg.nu_los == 3 and cfg.nu_nlos == 2
    assert cfg.noise_power == pytest.approx(3.981071705534969e-11, rel=1e-12)
    assert cfg.los.rate == pytest.approx(math.sqrt(2) / 200.0, rel=1e-12)


def test_preset_setup1_scalings(cfg_setup1):
    cfg = cfg_setup1
    assert cfg.lambda_small == pytest.approx(5 * cfg.lambda_macro, rel=1e-12)
    assert cfg.p_small == pytest.approx(cfg.p_macro / 1000.0, rel=1e-10)  # -30 dB
    assert cfg.main_small == pytest.approx(cfg.main_macro / 10 ** 0.5, rel=1e-12)
    assert cfg.beamwidth_small == pytest.approx(math.pi / 6)
    assert cfg.hole_radius == 100.0
    assert cfg.hole_angle == pytest.approx(math.pi / 3)


def test_los_probability_values(cfg_setup2):
    assert mmwhcn.los_probability(0.0, cfg_setup2) == 1.0
    assert mmwhcn.los_probability(200.0, cfg_setup2) == pytest.approx(
        0.2431167344342142, rel=1e-12
    )
    assert mmwhcn.los_probability(1e9, cfg_setup2) == 0.0
    with pytest.raises(ValueError):
        mmwhcn.los_probability(-1.0, cfg_setup2)


@given(st.floats(min_value=0.0, max_value=5e3))
def test_los_and_nlos_sum_to_one(r):
    cfg = mmwhcn.preset("setup2")
    total = mmwhcn.los_probability(r, cfg) + model.nlos_probability(r, cfg)
    assert total == pytest.approx(1.0, abs=0.0)


def test_los_ball_model():
    ball = LosBall(150.0)
    assert ball.prob(100.0) == 1.0
    assert ball.prob(151.0) == 0.0
    assert ball.integral_r_prob(300.0) == pytest.approx(150.0**2 / 2)
    cfg = mmwhcn.preset("setup2").replace(los=ball)
    assert mmwhcn.los_probability(149.0, cfg) == 1.0
    assert mmwhcn.los_probability(150.5, cfg) == 0.0


def test_pluggable_los_model_is_accepted():
    # Any non-increasing probability function can stand in for the default.
    custom = model.CallableLos(lambda r: 1.0 / (1.0 + (r / 100.0) ** 2), 1e5, "inverse-square")
    cfg = mmwhcn.preset("setup2").replace(los=custom)
    assert mmwhcn.los_probability(0.0, cfg) == 1.0
    assert mmwhcn.los_probability(100.0, cfg) == pytest.approx(0.5)
    got = custom.integral_r_prob(100.0)
    assert got == pytest.approx(100.0**2 / 2 * math.log(2.0), rel=1e-6)


def test_path_loss():
    cfg = mmwhcn.preset("setup2")
    assert mmwhcn.path_loss(1.0, LinkState.LOS, cfg) == 1.0
    assert mmwhcn.path_loss(100.0, LinkState.LOS, cfg) == pytest.approx(1e-4, rel=1e-12)
    assert mmwhcn.path_loss(10.0, LinkState.NLOS, cfg) == pytest.approx(1e-4, rel=1e-12)
    r = np.linspace(1.0, 500.0, 40)
    pl = mmwhcn.path_loss(r, LinkState.LOS, cfg)
    assert np.all(np.diff(pl) < 0)
    with pytest.raises(ValueError):
        mmwhcn.path_loss(0.0, LinkState.LOS, cfg)


def test_directivity_pmf_values(cfg_setup1):
    pmf = mmwhcn.directivity_pmf(1, cfg_setup1)
    # beamwidths pi/3 (tier 1) and pi/2 (UE): alignment odds 1/6 and 1/4
    assert pmf.probs[0] == pytest.approx(1.0 / 24.0, rel=1e-12)
    assert pmf.gains[0] == pytest.approx(100.0, rel=1e-12)
    assert pmf.gains[3] == pytest.approx(0.01, rel=1e-10)
    assert sum(pmf.probs) == pytest.approx(1.0, abs=1e-12)


def test_directivity_pmf_degenerate_full_beamwidth():
    cfg = mmwhcn.preset("setup2").replace(
        beamwidth_macro=2 * math.pi, beamwidth_ue=2 * math.pi
    )
    pmf = mmwhcn.directivity_pmf(1, cfg)
    assert pmf.probs[0] == pytest.approx(1.0, abs=1e-12)
    assert pmf.gains[0] == pytest.approx(cfg.main_macro * cfg.main_ue)


@settings(max_examples=50, deadline=None)
@given(
    bw_k=st.floats(min_value=1e-3, max_value=2 * math.pi),
    bw_ue=st.floats(min_value=1e-3, max_value=2 * math.pi),
)
def test_directivity_pmf_total_mass(bw_k, bw_ue):
    cfg = mmwhcn.preset("setup2").replace(beamwidth_small=bw_k, beamwidth_ue=bw_ue)
    pmf = mmwhcn.directivity_pmf(2, cfg)
    assert sum(pmf.probs) == pytest.approx(1.0, abs=1e-12)


def test_directivity_mean_matches_sampling(cfg_setup2):
    pmf = mmwhcn.directivity_pmf(2, cfg_setup2)
    ck = cfg_setup2.beamwidth_small / (2 * math.pi)
    cu = cfg_setup2.beamwidth_ue / (2 * math.pi)
    expected = (ck * cfg_setup2.main_small + (1 - ck) * cfg_setup2.side_small) * (
        cu * cfg_setup2.main_ue + (1 - cu) * cfg_setup2.side_ue
    )
    assert pmf.mean() == pytest.approx(expected, rel=1e-12)
    rng = np.random.default_rng(5)
    n = 200_000
    samples = pmf.sample(rng, n)
    stderr = np.std(samples) / math.sqrt(n)
    assert abs(samples.mean() - expected) < 3 * stderr


def test_fading_moments(cfg_setup2):
    rng = np.random.default_rng(11)
    n = 1_000_000
    los = mmwhcn.sample_fading(LinkState.LOS, cfg_setup2, rng, n)
    nlos = mmwhcn.sample_fading(LinkState.NLOS, cfg_setup2, rng, n)
    assert np.all(los >= 0) and np.all(nlos >= 0)
    # mean 1 with stderr 1/sqrt(nu n); variance 1/nu
    assert abs(los.mean() - 1.0) < 3.0 / math.sqrt(3 * n)
    assert abs(nlos.mean() - 1.0) < 3.0 / math.sqrt(2 * n)
    assert los.var() == pytest.approx(1.0 / 3.0, abs=0.01)
    assert nlos.var() == pytest.approx(1.0 / 2.0, abs=0.01)


def test_config_validation_errors(cfg_setup2):
    with pytest.raises(ConfigError):
        cfg_setup2.replace(p_macro=-1.0)
    with pytest.raises(ConfigError):
        cfg_setup2.replace(hole_angle=7.0)
    with pytest.raises(ConfigError):
        cfg_setup2.replace(nu_los=0)
    with pytest.raises(ConfigError):
        cfg_setup2.replace(nu_nlos=2.5)
    with pytest.raises(ConfigError):
        cfg_setup2.replace(side_macro=20.0)  # side above main
    with pytest.raises(ConfigError):
        cfg_setup2.replace(beamwidth_ue=0.0)


def test_inverted_exponents_warn_but_pass(cfg_setup2):
    with pytest.warns(UserWarning):
        cfg = cfg_setup2.replace(alpha_los=4.0, alpha_nlos=2.0)
    assert cfg.alpha_nlos == 2.0


def test_ue_density_is_accepted_and_inert(cfg_setup2):
    cfg = cfg_setup2.replace(lambda_ue=5e-5)
    assert cfg.lambda_ue == 5e-5
    # nothing numerical consumes it: channel primitives agree exactly
    assert mmwhcn.los_probability(123.0, cfg) == mmwhcn.los_probability(123.0, cfg_setup2)
    assert mmwhcn.directivity_pmf(2, cfg) == mmwhcn.directivity_pmf(2, cfg_setup2)


def test_fingerprint_tracks_physics_only(cfg_setup2):
    base = cfg_setup2.fingerprint()
    assert cfg_setup2.fingerprint() == base  # stable
    assert cfg_setup2.replace(lambda_small=150e-6).fingerprint() != base
    assert cfg_setup2.replace(hole_angle=1.0).fingerprint() != base
    assert mmwhcn.preset("setup2").fingerprint() == base  # reload invariant


def test_unknown_preset_lists_valid_names():
    with pytest.raises(ConfigError, match="setup1"):
        mmwhcn.preset("setup3")


def test_env_override(tmp_path, cfg_setup2):
    env = {"MMWHCN_HOLES__RADIUS": '"300 m"', "MMWHCN_CHANNEL__NU_LOS": "2"}
    cfg = mmwhcn.preset("setup2", environ=env)
    assert cfg.hole_radius == 300.0
    assert cfg.nu_los == 2
    assert cfg.lambda_small == cfg_setup2.lambda_small


def test_load_config_from_file(tmp_path):
    path = tmp_path / "net.toml"
    path.write_text(
        """
[tiers.macro]
density = "1 /km^2"
tx_power = "40 dBm"
main_gain = "10 dB"
fbr = "20 dB"
beamwidth = "60 deg"
[tiers.small]
density = "10 /km^2"
tx_power = "20 dBm"
main_gain = "10 dB"
fbr = "20 dB"
beamwidth = "60 deg"
[ue]
main_gain = "0 dB"
fbr = "10 dB"
beamwidth = "90 deg"
[channel]
alpha_los = 2.0
alpha_nlos = 4.0
nu_los = 2
nu_nlos = 1
avg_los_distance = "150 m"
[holes]
radius = "50 m"
central_angle = "90 deg"
[noise]
bandwidth = "100 MHz"
noise_figure = "7 dB"
"""
    )
    cfg = mmwhcn.load_config(path)
    assert cfg.lambda_macro == pytest.approx(1e-6)
    assert cfg.hole_angle == pytest.approx(math.pi / 2)
    assert cfg.nu_nlos == 1


def test_config_missing_section_is_rejected():
    with pytest.raises(ConfigError, match="section"):
        model.config_from_dict({})
