from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lasercom_twin import loop_analysis, pat
from lasercom_twin.errors import ConfigError
from lasercom_twin.pat import Mode

QUIET = pat.PatConfig(coarse_noise_rad=0.0, fine_noise_rad=0.0)
DT = 1e-3


def bias(deg, angle=0.0):
    r = math.radians(deg)
    return pat.DisturbanceModel(bias_rad=(r * math.cos(angle), r * math.sin(angle)))


def steady_rms(series, last=3000):
    return float(np.sqrt(np.mean(series.residual_rad[-last:] ** 2)))


def test_config_rejects_fine_fov_wider_than_coarse():
    with pytest.raises(ConfigError, match="fine detector FOV"):
        pat.PatConfig(fine_fov_rad=0.1)


@pytest.mark.parametrize(
    "kwargs",
    [{"fpm_rate_hz": 1050.0}, {"gimbal_kp": 0.0}, {"spiral_pitch_fraction": 0.9}, {"handover_dwell": 0}],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        pat.PatConfig(**kwargs)


def test_track_step_requires_the_fpm_tick():
    s = pat.PatState(mode=Mode.COARSE_TRACK)
    with pytest.raises(ConfigError):
        pat.track_step(s, QUIET, (0.0, 0.0), (0.0, 0.0), 2e-3)


def test_mode_graph_shape():
    graph = pat.mode_graph()
    assert (Mode.IDLE, Mode.ACQUIRE) in graph
    assert (Mode.FINE_TRACK, Mode.LINKED) in graph
    assert (Mode.LINKED, Mode.FINE_TRACK) in graph
    assert (Mode.LOST, Mode.ACQUIRE) in graph
    assert (Mode.IDLE, Mode.LINKED) not in graph
    for m in Mode:
        if m is not Mode.LOST:
            assert (m, Mode.LOST) in graph


def test_pi_integrator_clamps_and_recovers():
    out, integ = 0.0, 0.0
    for _ in range(1000):
        out, integ = pat.pi_update(1.0, integ, 0.1, 100.0, 1e-3, 0.5)
    assert out == 0.5 and integ == 0.5
    out, integ = pat.pi_update(-1.0, integ, 0.1, 100.0, 1e-3, 0.5)
    assert out < 0.5


def test_zero_noise_static_error_converges_to_linked():
    series = pat.run(QUIET, bias(1.0), 1, 3.0, DT)
    seen = [m for _, _, m in series.transitions()]
    assert seen[:4] == [Mode.ACQUIRE, Mode.COARSE_TRACK, Mode.FINE_TRACK, Mode.LINKED]
    assert series.mode[-1] is Mode.LINKED
    assert series.residual_rad[-1] < 1e-6


def test_handover_needs_the_full_dwell():
    series = pat.run(QUIET, bias(0.5), 1, 1.0, DT)
    t = {to: k for k, _, to in series.transitions()}
    assert t[Mode.FINE_TRACK] - t[Mode.COARSE_TRACK] >= QUIET.handover_dwell


def test_actuator_limits_hold_everywhere():
    cfg = pat.PatConfig(fpm_range_rad=2e-5)
    dist = pat.DisturbanceModel(
        bias_rad=(math.radians(2.0), 0.0),
        sinusoids=(pat.Sinusoid(200e-6, 30.0), pat.Sinusoid(100e-6, 5.0, axis=1)),
    )
    series = pat.run(cfg, dist, 5, 3.0, DT)
    assert np.all(np.abs(series.fpm) <= cfg.fpm_range_rad)
    step = np.abs(np.diff(series.gimbal, axis=0))
    assert np.all(step <= cfg.gimbal_rate_limit_rad_s * cfg.gimbal_period * (1 + 1e-12))


@settings(max_examples=15, deadline=None)
@given(
    seed=st.integers(0, 2**32),
    bias_deg=st.floats(0.0, 4.0),
    angle=st.floats(0.0, 2 * math.pi),
    jitter=st.floats(0.0, 3e-3),
    freq=st.floats(0.5, 40.0),
)
def test_every_transition_is_in_the_mode_graph(seed, bias_deg, angle, jitter, freq):
    r = math.radians(bias_deg)
    dist = pat.DisturbanceModel(
        bias_rad=(r * math.cos(angle), r * math.sin(angle)),
        random_walk_sigma=1e-4,
        sinusoids=(pat.Sinusoid(jitter, freq),),
        seed=seed,
    )
    series = pat.run(pat.PatConfig(coarse_noise_rad=2e-5), dist, seed, 1.5, DT)
    graph = pat.mode_graph()
    for _, a, b in series.transitions():
        assert (a, b) in graph


def test_error_beyond_coarse_fov_is_lost():
    s = pat.PatState(mode=Mode.FINE_TRACK, tick=7)
    out = pat.track_step(s, QUIET, (math.radians(3.0), 0.0), (0.0, 0.0), DT)
    assert out.mode is Mode.LOST


def test_fast_large_jitter_loses_and_reacquires():
    # 3 deg at 5 Hz needs ~1.6 rad/s, far beyond the gimbal rate limit
    dist = pat.DisturbanceModel(sinusoids=(pat.Sinusoid(math.radians(3.0), 5.0),))
    series = pat.run(pat.PatConfig(), dist, 2, 3.0, DT)
    seen = {(a, b) for _, a, b in series.transitions()}
    assert any(b is Mode.LOST for _, b in seen)
    assert (Mode.LOST, Mode.ACQUIRE) in seen


@settings(max_examples=5, deadline=None)
@given(seed=st.integers(0, 2**64 - 1))
def test_seeded_runs_are_byte_identical(seed):
    dist = pat.DisturbanceModel(bias_rad=(1e-3, -2e-3), random_walk_sigma=1e-5, seed=seed)
    a = pat.run(pat.PatConfig(), dist, seed, 0.5, DT)
    b = pat.run(pat.PatConfig(), dist, seed, 0.5, DT)
    assert a.to_bytes() == b.to_bytes()


def test_point_ahead_does_not_touch_receive_path():
    dist = pat.DisturbanceModel(bias_rad=(2e-3, 1e-3), sinusoids=(pat.Sinusoid(50e-6, 7.0),), random_walk_sigma=1e-5)

    def alpha(t):
        return (50e-6 * math.cos(0.3 * t), 20e-6 * math.sin(0.7 * t))

    with_pa = pat.run(pat.PatConfig(), dist, 9, 2.0, DT, alpha=alpha)
    without = pat.run(pat.PatConfig(), dist, 9, 2.0, DT)
    assert np.array_equal(with_pa.residual, without.residual)
    assert with_pa.mode == without.mode
    assert not np.array_equal(with_pa.pam, without.pam)


def test_pam_cancels_commanded_point_ahead_in_transmit_error():
    dist = bias(0.2)
    alpha = (30e-6, -10e-6)
    on = pat.run(QUIET, dist, 1, 3.0, DT, alpha=alpha)
    off = pat.run(pat.PatConfig(coarse_noise_rad=0.0, fine_noise_rad=0.0, point_ahead_enabled=False),
                  dist, 1, 3.0, DT, alpha=alpha)
    assert on.tx_error_rad[-1] < 1e-6
    assert off.tx_error_rad[-1] == pytest.approx(math.hypot(*alpha), rel=1e-3)


def test_fine_loop_rejects_jitter_like_the_linear_model():
    dist = pat.DisturbanceModel(sinusoids=(pat.Sinusoid(100e-6, 10.0),))
    fine = pat.run(QUIET, dist, 1, 6.0, DT)
    coarse_cfg = pat.PatConfig(coarse_noise_rad=0.0, fine_noise_rad=0.0, fine_loop_enabled=False)
    coarse = pat.run(coarse_cfg, dist, 1, 6.0, DT)
    want_coarse, want_fine = loop_analysis.jitter_response(QUIET, 100e-6, 10.0)
    assert steady_rms(fine) == pytest.approx(want_fine, rel=0.02)
    assert steady_rms(coarse) == pytest.approx(want_coarse, rel=0.02)


def test_spiral_covers_the_uncertainty_cone():
    cfg = pat.PatConfig(uncertainty_cone_rad=math.radians(10.0))
    n = pat.acquisition_step_bound(cfg)
    step = cfg.gimbal_rate_limit_rad_s * cfg.gimbal_period
    pts = np.array([pat.spiral_offset(cfg, min(k * step, pat.spiral_length(cfg))) for k in range(n)])
    radius = cfg.uncertainty_cone_rad
    grid = np.linspace(-radius, radius, 81)
    xs, ys = np.meshgrid(grid, grid)
    inside = np.hypot(xs, ys) <= radius
    targets = np.stack([xs[inside], ys[inside]], axis=1)
    d = np.min(np.linalg.norm(targets[:, None, :] - pts[None, :, :], axis=2), axis=1)
    assert d.max() < cfg.coarse_fov_rad


def test_spiral_arc_length_parametrisation():
    cfg = pat.PatConfig()
    step = 1e-3
    pts = np.array([pat.spiral_offset(cfg, k * step) for k in range(2000)])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    assert np.all(seg <= step * (1 + 1e-9))
    assert seg[-1] == pytest.approx(step, rel=1e-4)


@settings(max_examples=8, deadline=None)
@given(r_frac=st.floats(0.0, 0.95), angle=st.floats(0.0, 2 * math.pi))
def test_acquisition_finds_any_target_in_the_cone(r_frac, angle):
    cfg = pat.PatConfig(coarse_noise_rad=0.0, fine_noise_rad=0.0)
    r = r_frac * cfg.uncertainty_cone_rad
    dist = pat.DisturbanceModel(bias_rad=(r * math.cos(angle), r * math.sin(angle)))
    bound = pat.acquisition_step_bound(cfg) * cfg.divider
    series = pat.run(cfg, dist, 0, (bound + 20) * DT, DT)
    assert series.first_time_in(Mode.COARSE_TRACK) is not None
    assert series.spiral_restarts == 0


def test_beacon_below_threshold_never_acquires():
    series = pat.run(QUIET, bias(0.1), 0, 0.5, DT, beacon_dbm=-120.0)
    assert set(series.mode) == {Mode.ACQUIRE}


def test_default_loops_are_stable():
    cfg = pat.PatConfig()
    for kp, ki, rate in ((cfg.gimbal_kp, cfg.gimbal_ki, cfg.gimbal_rate_hz), (cfg.fpm_kp, cfg.fpm_ki, cfg.fpm_rate_hz)):
        assert np.max(np.abs(loop_analysis.closed_loop_poles(kp, ki, rate))) < 1.0
        assert abs(loop_analysis.sensitivity(kp, ki, rate, 1e-9)) < 1e-6


def test_disturbance_sampling_is_seeded():
    d = pat.DisturbanceModel(random_walk_sigma=1e-4, seed=3)
    t = np.arange(100) * DT
    assert np.array_equal(pat.sample_disturbance(d, t), pat.sample_disturbance(d, t))
    assert not np.array_equal(pat.sample_disturbance(d, t), pat.sample_disturbance(pat.DisturbanceModel(random_walk_sigma=1e-4, seed=4), t))
