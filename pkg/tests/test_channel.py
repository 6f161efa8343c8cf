"""Geometry, steering, multipath synthesis and vectorization checks.

Expected values are recomputed with explicit scalar loops over cmath so
they do not share code with the vectorized kernels under test.
"""

import cmath
import math

import numpy as np
import pytest

from chanpred.channel import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    ChannelSnapshot,
    ClusterScenario,
    PathParams,
    SampleTrack,
    SubcarrierGrid,
    UeKinematics,
    add_sample_noise,
    channel_snapshot,
    closed_form_inner_product,
    delay_response,
    doppler_rate,
    generalized_steering,
    sample_track,
    snapshot_from_vec_all,
    spherical_unit,
    steering_3d,
    steering_horizontal,
    steering_vertical,
    synthesize_cluster_paths,
    wrap_azimuth,
)

CARRIER = 3.5e9
LAM = SPEED_OF_LIGHT / CARRIER


def small_geometry(n_v=3, n_h=4):
    return ArrayGeometry(n_v=n_v, n_h=n_h, d_v=0.8 * LAM, d_h=0.5 * LAM, lambda0=LAM)


def small_grid(n_f=5, delta_f=30e3):
    return SubcarrierGrid(n_f=n_f, delta_f=delta_f, f1=CARRIER)


def random_path(rng):
    th_d = rng.uniform(0.2, math.pi - 0.2)
    th_a = rng.uniform(0.2, math.pi - 0.2)
    return PathParams(
        theta_zod=th_d,
        phi_aod=rng.uniform(-math.pi / 2, math.pi / 2),
        theta_zoa=th_a,
        phi_aoa=rng.uniform(-math.pi + 1e-6, math.pi),
        tau=rng.uniform(0.0, 1e-6),
        beta=complex(rng.standard_normal(), rng.standard_normal()),
    )


def test_spherical_unit_axes():
    assert np.allclose(spherical_unit(0.0, 0.0), [0.0, 0.0, 1.0], atol=1e-15)
    assert np.allclose(spherical_unit(math.pi, 0.0), [0.0, 0.0, -1.0], atol=1e-15)
    assert np.allclose(spherical_unit(math.pi / 2, 0.0), [1.0, 0.0, 0.0], atol=1e-15)
    assert np.allclose(spherical_unit(math.pi / 2, math.pi / 2), [0.0, 1.0, 0.0], atol=1e-15)


def test_spherical_unit_has_unit_norm():
    rng = np.random.default_rng(3)
    for _ in range(20):
        u = spherical_unit(rng.uniform(0, math.pi), rng.uniform(-math.pi, math.pi))
        assert abs(np.linalg.norm(u) - 1.0) < 1e-14


def test_wrap_azimuth_hand_values():
    assert wrap_azimuth(0.3) == pytest.approx(0.3, abs=1e-15)
    assert wrap_azimuth(math.pi) == pytest.approx(math.pi)
    # -pi maps to the closed endpoint +pi, keeping the interval (-pi, pi]
    assert wrap_azimuth(-math.pi) == pytest.approx(math.pi)
    assert wrap_azimuth(1.5 * math.pi) == pytest.approx(-0.5 * math.pi)
    assert wrap_azimuth(-1.5 * math.pi) == pytest.approx(0.5 * math.pi)
    assert wrap_azimuth(7.0 * math.pi) == pytest.approx(math.pi)


def test_wrap_azimuth_preserves_direction():
    rng = np.random.default_rng(11)
    for phi in rng.uniform(-50.0, 50.0, size=200):
        w = wrap_azimuth(float(phi))
        assert -math.pi < w <= math.pi
        assert cmath.exp(1j * w) == pytest.approx(cmath.exp(1j * phi), abs=1e-9)


class TestArrayGeometry:
    def test_element_positions_index_fastest_along_z(self):
        geom = small_geometry(n_v=3, n_h=2)
        pos = geom.element_positions()
        assert pos.shape == (6, 3)
        for s in range(6):
            assert pos[s, 0] == 0.0
            assert pos[s, 1] == pytest.approx((s // 3) * geom.d_h)
            assert pos[s, 2] == pytest.approx((s % 3) * geom.d_v)

    def test_n_t(self):
        assert small_geometry(n_v=4, n_h=8).n_t == 32

    def test_rejects_empty_axes(self):
        with pytest.raises(ValueError, match="at least one element"):
            ArrayGeometry(n_v=0, n_h=4, d_v=0.01, d_h=0.01, lambda0=0.1)

    def test_rejects_nonpositive_spacing(self):
        with pytest.raises(ValueError, match="must be positive"):
            ArrayGeometry(n_v=2, n_h=2, d_v=0.0, d_h=0.01, lambda0=0.1)


def test_subcarrier_grid_frequencies():
    grid = SubcarrierGrid(n_f=4, delta_f=30e3, f1=3.5e9)
    assert np.allclose(grid.frequencies(),
                       [3.5e9, 3.5e9 + 30e3, 3.5e9 + 60e3, 3.5e9 + 90e3])


def test_subcarrier_grid_validation():
    with pytest.raises(ValueError, match="at least one frequency"):
        SubcarrierGrid(n_f=0, delta_f=30e3, f1=3.5e9)
    with pytest.raises(ValueError, match="must be positive"):
        SubcarrierGrid(n_f=4, delta_f=-1.0, f1=3.5e9)


class TestPathParams:
    def test_unit_vectors(self):
        p = PathParams(math.pi / 2, 0.25, math.pi / 3, -0.5, 1e-7, 1.0 + 0.0j)
        assert np.allclose(p.departure_unit(), spherical_unit(math.pi / 2, 0.25))
        assert np.allclose(p.arrival_unit(), spherical_unit(math.pi / 3, -0.5))

    def test_rejects_zenith_outside_range(self):
        with pytest.raises(ValueError, match="theta_zod"):
            PathParams(-0.1, 0.0, 1.0, 0.0, 0.0, 1.0 + 0.0j)

    def test_rejects_azimuth_outside_range(self):
        with pytest.raises(ValueError, match="phi_aoa"):
            PathParams(1.0, 0.0, 1.0, -math.pi, 0.0, 1.0 + 0.0j)

    def test_rejects_azimuth_at_pole(self):
        with pytest.raises(ValueError, match="phi_aod must be 0"):
            PathParams(0.0, 0.3, 1.0, 0.0, 0.0, 1.0 + 0.0j)

    def test_rejects_negative_delay(self):
        with pytest.raises(ValueError, match="tau"):
            PathParams(1.0, 0.0, 1.0, 0.0, -1e-9, 1.0 + 0.0j)

    def test_rejects_nonfinite_gain(self):
        with pytest.raises(ValueError, match="beta"):
            PathParams(1.0, 0.0, 1.0, 0.0, 0.0, complex(math.nan, 0.0))


class TestUeKinematics:
    def test_velocity_direction(self):
        kin = UeKinematics(speed=5.0, phi_v=math.pi / 2)
        assert np.allclose(kin.velocity(), [0.0, 5.0, 0.0], atol=1e-14)

    def test_default_single_antenna(self):
        kin = UeKinematics(speed=1.0, phi_v=0.0)
        assert kin.n_r == 1
        assert np.allclose(kin.positions(), [[0.0, 0.0, 0.0]])

    def test_rejects_negative_speed(self):
        with pytest.raises(ValueError, match="speed"):
            UeKinematics(speed=-1.0, phi_v=0.0)

    def test_rejects_bad_positions(self):
        with pytest.raises(ValueError, match="rx_antenna_positions"):
            UeKinematics(speed=1.0, phi_v=0.0, rx_antenna_positions=((0.0, 0.0),))


def test_steering_vertical_entries():
    geom = small_geometry(n_v=5, n_h=1)
    theta = 1.234
    got = steering_vertical(theta, geom)
    for n in range(5):
        want = cmath.exp(2j * math.pi * n * geom.d_v * math.cos(theta) / geom.lambda0)
        assert got[n] == pytest.approx(want, abs=1e-14)


def test_steering_horizontal_entries():
    geom = small_geometry(n_v=1, n_h=6)
    theta, phi = 0.9, -0.4
    got = steering_horizontal(theta, phi, geom)
    for n in range(6):
        want = cmath.exp(
            2j * math.pi * n * geom.d_h * math.sin(theta) * math.sin(phi) / geom.lambda0
        )
        assert got[n] == pytest.approx(want, abs=1e-14)


def test_steering_3d_layout():
    """Entry s of the planar steering vector is row s % n_v, column s // n_v."""
    geom = small_geometry(n_v=3, n_h=4)
    theta, phi = 1.1, 0.7
    v = steering_vertical(theta, geom)
    h = steering_horizontal(theta, phi, geom)
    a = steering_3d(theta, phi, geom)
    assert a.shape == (12,)
    for s in range(12):
        assert a[s] == pytest.approx(h[s // 3] * v[s % 3], abs=1e-14)


def test_delay_response_entries():
    grid = small_grid(n_f=4, delta_f=1e6)
    tau = 2.3e-7
    got = delay_response(tau, grid)
    for i, f in enumerate(grid.frequencies()):
        assert got[i] == pytest.approx(cmath.exp(-2j * math.pi * f * tau), abs=1e-12)


def test_generalized_steering_layout_and_norm():
    geom = small_geometry(n_v=2, n_h=3)
    grid = small_grid(n_f=4)
    rng = np.random.default_rng(0)
    p = random_path(rng)
    vec = generalized_steering(p, geom, grid)
    a = steering_3d(p.theta_zod, p.phi_aod, geom)
    b = delay_response(p.tau, grid)
    assert vec.shape == (geom.n_t * grid.n_f,)
    for i in range(grid.n_f):
        for s in range(geom.n_t):
            assert vec[i * geom.n_t + s] == pytest.approx(b[i] * a[s], abs=1e-12)
    assert np.vdot(vec, vec).real == pytest.approx(geom.n_t * grid.n_f, rel=1e-12)


def test_doppler_rate_worked_value():
    """30 km/h straight into the arrival direction at a 3.5 GHz carrier.

    Hand arithmetic: (30 / 3.6) / (c / 3.5e9) = 97.28952776612769 Hz-like
    rate, times 2 pi = 611.2881314025739 rad/s.
    """
    path = PathParams(math.pi / 2, 0.0, math.pi / 2, 0.0, 0.0, 1.0 + 0.0j)
    kin = UeKinematics(speed=30.0 / 3.6, phi_v=0.0)
    assert doppler_rate(path, kin, LAM) == pytest.approx(611.2881314025739, rel=1e-12)
    assert doppler_rate(path, kin, LAM, two_pi=False) == pytest.approx(
        97.28952776612769, rel=1e-12)


def test_doppler_rate_orthogonal_motion_is_zero():
    path = PathParams(math.pi / 2, 0.0, math.pi / 2, 0.0, 0.0, 1.0 + 0.0j)
    kin = UeKinematics(speed=10.0, phi_v=math.pi / 2)
    assert doppler_rate(path, kin, LAM) == pytest.approx(0.0, abs=1e-9)


def test_doppler_rate_projection():
    rng = np.random.default_rng(5)
    path = random_path(rng)
    kin = UeKinematics(speed=12.0, phi_v=0.8, theta_v=1.2)
    want = 2 * math.pi * float(path.arrival_unit() @ kin.velocity()) / LAM
    assert doppler_rate(path, kin, LAM) == pytest.approx(want, rel=1e-12)


def test_snapshot_vec_is_frequency_major():
    """vec stacks per-bin blocks, transmit antenna index fastest."""
    h = np.zeros((1, 2, 3), dtype=complex)
    for s in range(2):
        for i in range(3):
            h[0, s, i] = s + 10 * i
    snap = ChannelSnapshot(t=0.0, h=h)
    assert np.allclose(snap.vec(0), [0, 1, 10, 11, 20, 21])


def test_vec_all_round_trip():
    rng = np.random.default_rng(19)
    h = rng.standard_normal((2, 3, 4)) + 1j * rng.standard_normal((2, 3, 4))
    snap = ChannelSnapshot(t=0.25, h=h)
    back = snapshot_from_vec_all(snap.vec_all(), t=snap.t, n_r=2, n_t=3, n_f=4)
    assert np.allclose(back.h, h)
    assert back.t == snap.t


def test_snapshot_from_vec_all_rejects_wrong_length():
    with pytest.raises(ValueError, match="wrong length"):
        snapshot_from_vec_all(np.zeros(7), t=0.0, n_r=1, n_t=2, n_f=3)


def test_snapshot_validation():
    with pytest.raises(ValueError, match="n_r, n_t, n_f"):
        ChannelSnapshot(t=0.0, h=np.zeros((2, 3)))
    bad = np.zeros((1, 2, 2), dtype=complex)
    bad[0, 0, 0] = complex(math.inf, 0.0)
    with pytest.raises(ValueError, match="finite"):
        ChannelSnapshot(t=0.0, h=bad)


class TestSampleTrack:
    def _snap(self, t, value):
        return ChannelSnapshot(t=t, h=np.full((1, 2, 2), value, dtype=complex))

    def test_rejects_nonuniform_spacing(self):
        snaps = [self._snap(t, 1.0) for t in (0.0, 1.0, 2.5)]
        with pytest.raises(ValueError, match="uniformly spaced"):
            SampleTrack(snaps)

    def test_rejects_shape_mismatch(self):
        snaps = [self._snap(0.0, 1.0),
                 ChannelSnapshot(t=1.0, h=np.zeros((1, 2, 3), dtype=complex))]
        with pytest.raises(ValueError, match="one shape"):
            SampleTrack(snaps)

    def test_delta_t_and_indexing(self):
        snaps = [self._snap(0.1 * k, k) for k in range(4)]
        track = SampleTrack(snaps)
        assert len(track) == 4
        assert track.delta_t == pytest.approx(0.1)
        assert track[2] is snaps[2]

    def test_vectors_columns(self):
        snaps = [self._snap(0.1 * k, k) for k in range(3)]
        mat = SampleTrack(snaps).vectors()
        assert mat.shape == (4, 3)
        for k in range(3):
            assert np.allclose(mat[:, k], snaps[k].vec_all())


class TestClusterSynthesis:
    def test_path_count_and_normalization(self):
        scen = ClusterScenario(n_clusters=5, rays_per_cluster=3, seed=2)
        paths = synthesize_cluster_paths(scen)
        assert len(paths) == 15
        total = sum(abs(p.beta) ** 2 for p in paths)
        assert total == pytest.approx(1.0, rel=1e-12)

    def test_rays_share_the_cluster_delay(self):
        scen = ClusterScenario(n_clusters=4, rays_per_cluster=5, seed=7)
        paths = synthesize_cluster_paths(scen)
        for c in range(4):
            block = paths[c * 5:(c + 1) * 5]
            assert len({p.tau for p in block}) == 1
        delays = sorted({p.tau for p in paths})
        assert delays[0] == 0.0
        assert all(d >= 0.0 for d in delays)

    def test_cluster_power_decay(self):
        scen = ClusterScenario(n_clusters=6, rays_per_cluster=2,
                               cluster_decay_db=3.0, seed=1)
        paths = synthesize_cluster_paths(scen)
        powers = [sum(abs(p.beta) ** 2 for p in paths[c * 2:(c + 1) * 2])
                  for c in range(6)]
        for c in range(5):
            assert powers[c + 1] / powers[c] == pytest.approx(10 ** -0.3, rel=1e-10)

    def test_deterministic_in_seed(self):
        scen = ClusterScenario(n_clusters=3, rays_per_cluster=4, seed=9)
        first = synthesize_cluster_paths(scen)
        second = synthesize_cluster_paths(scen)
        assert first == second
        other = synthesize_cluster_paths(ClusterScenario(n_clusters=3,
                                                         rays_per_cluster=4, seed=10))
        assert first != other

    def test_angles_stay_in_their_domains(self):
        scen = ClusterScenario(n_clusters=8, rays_per_cluster=6, seed=4)
        for p in synthesize_cluster_paths(scen):
            assert 0.0 <= p.theta_zod <= math.pi
            assert 0.0 <= p.theta_zoa <= math.pi
            assert -math.pi < p.phi_aod <= math.pi
            assert -math.pi < p.phi_aoa <= math.pi

    def test_rejects_empty_scenario(self):
        with pytest.raises(ValueError, match="at least one cluster"):
            ClusterScenario(n_clusters=0)


def test_channel_snapshot_single_path_oracle():
    """One path, one rx antenna at the origin, entry-by-entry recomputation."""
    geom = small_geometry(n_v=2, n_h=3)
    grid = small_grid(n_f=4, delta_f=1e6)
    rng = np.random.default_rng(23)
    p = random_path(rng)
    kin = UeKinematics(speed=60.0 / 3.6, phi_v=0.45)
    t = 3.7e-4
    snap = channel_snapshot([p], geom, grid, kin, t)
    assert snap.h.shape == (1, 6, 4)

    a = steering_3d(p.theta_zod, p.phi_aod, geom)
    omega = doppler_rate(p, kin, geom.lambda0)
    for s in range(6):
        for i, f in enumerate(grid.frequencies()):
            want = (p.beta * a[s] * cmath.exp(-2j * math.pi * f * p.tau)
                    * cmath.exp(1j * omega * t))
            assert snap.h[0, s, i] == pytest.approx(want, rel=1e-10)


def test_channel_snapshot_rx_antenna_phase():
    """A displaced rx antenna sees the same channel times a plane-wave phase."""
    geom = small_geometry(n_v=2, n_h=2)
    grid = small_grid(n_f=3)
    rng = np.random.default_rng(29)
    p = random_path(rng)
    offset = (0.0, LAM / 2, 0.0)
    kin = UeKinematics(speed=5.0, phi_v=0.0,
                       rx_antenna_positions=((0.0, 0.0, 0.0), offset))
    snap = channel_snapshot([p], geom, grid, kin, t=1e-4)
    phase = cmath.exp(2j * math.pi * float(p.arrival_unit() @ np.array(offset)) / LAM)
    assert np.allclose(snap.h[1], snap.h[0] * phase, rtol=1e-10)


def test_channel_snapshot_superposition():
    geom = small_geometry(n_v=2, n_h=2)
    grid = small_grid(n_f=3)
    rng = np.random.default_rng(31)
    paths = [random_path(rng) for _ in range(3)]
    kin = UeKinematics(speed=8.0, phi_v=1.0)
    whole = channel_snapshot(paths, geom, grid, kin, t=2e-4)
    parts = sum(channel_snapshot([p], geom, grid, kin, t=2e-4).h for p in paths)
    assert np.allclose(whole.h, parts, rtol=1e-10)


def test_channel_snapshot_rejects_empty_path_list():
    with pytest.raises(ValueError, match="at least one path"):
        channel_snapshot([], small_geometry(), small_grid(),
                         UeKinematics(speed=1.0, phi_v=0.0), t=0.0)


def test_sample_track_times():
    geom = small_geometry(n_v=1, n_h=2)
    grid = small_grid(n_f=2)
    rng = np.random.default_rng(37)
    paths = [random_path(rng)]
    kin = UeKinematics(speed=3.0, phi_v=0.2)
    times = np.arange(4) * 5e-4
    track = sample_track(paths, geom, grid, kin, times)
    assert len(track) == 4
    assert track.delta_t == pytest.approx(5e-4)
    direct = channel_snapshot(paths, geom, grid, kin, float(times[2]))
    assert np.allclose(track[2].h, direct.h)


class TestSampleNoise:
    def _snap(self):
        rng = np.random.default_rng(41)
        h = rng.standard_normal((2, 8, 64)) + 1j * rng.standard_normal((2, 8, 64))
        return ChannelSnapshot(t=0.0, h=h)

    def test_infinite_snr_is_a_no_op(self):
        snap = self._snap()
        assert add_sample_noise(snap, math.inf, seed=0) is snap

    def test_noise_power_matches_snr(self):
        snap = self._snap()
        noisy = add_sample_noise(snap, 10.0, seed=123)
        sig = float(np.mean(np.abs(snap.h) ** 2))
        noise = float(np.mean(np.abs(noisy.h - snap.h) ** 2))
        assert noise == pytest.approx(sig / 10.0, rel=0.1)
        assert noisy.t == snap.t

    def test_deterministic_in_seed(self):
        snap = self._snap()
        a = add_sample_noise(snap, 5.0, seed=7)
        b = add_sample_noise(snap, 5.0, seed=7)
        c = add_sample_noise(snap, 5.0, seed=8)
        assert np.array_equal(a.h, b.h)
        assert not np.array_equal(a.h, c.h)


class TestClosedFormInnerProduct:
    def test_matches_brute_force(self):
        geom = small_geometry(n_v=3, n_h=4)
        grid = small_grid(n_f=8, delta_f=120e3)
        rng = np.random.default_rng(47)
        for _ in range(100):
            p, q = random_path(rng), random_path(rng)
            direct = complex(np.vdot(generalized_steering(p, geom, grid),
                                     generalized_steering(q, geom, grid)))
            closed = closed_form_inner_product(p, q, geom, grid)
            assert abs(direct - closed) <= 1e-10 * max(abs(direct), 1.0)

    def test_self_inner_product_is_the_dimension(self):
        geom = small_geometry(n_v=2, n_h=5)
        grid = small_grid(n_f=7)
        rng = np.random.default_rng(53)
        p = random_path(rng)
        got = closed_form_inner_product(p, p, geom, grid)
        assert got.real == pytest.approx(geom.n_t * grid.n_f, rel=1e-12)
        assert got.imag == pytest.approx(0.0, abs=1e-9)

    def test_same_angles_same_delay_degenerate_series(self):
        geom = small_geometry(n_v=4, n_h=2)
        grid = small_grid(n_f=3)
        p = PathParams(1.1, 0.4, 1.2, -0.3, 2e-7, 1.0 + 0.0j)
        q = PathParams(1.1, 0.4, 0.9, 0.8, 2e-7, 0.5 - 0.5j)
        got = closed_form_inner_product(p, q, geom, grid)
        assert got == pytest.approx(complex(geom.n_t * grid.n_f), abs=1e-9)
