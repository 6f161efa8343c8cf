"""Structured multipath channel synthesis for wideband multi-antenna links.

The model: a uniform planar array (UPA) at the transmitter, a small antenna
set at the moving receiver, and P plane-wave paths, each described by
departure/arrival angles, a propagation delay, a complex gain and a Doppler
rate induced by receiver motion.  A channel snapshot is the complex gain on
every (rx antenna, tx antenna, frequency bin) triple; it evolves in time
only through per-path phase rotations, which is the structure the
predictors in this package exploit.

Conventions (fixed throughout the package):

* the UPA lies in the YZ plane, first element at the origin, and the
  transmit antenna index runs fastest along the vertical (Z) axis, column
  by column;
* zenith angles theta are measured from the +Z axis in [0, pi], azimuth
  angles phi from the +X axis in (-pi, pi], with phi = 0 whenever
  theta is 0 or pi;
* the vectorized per-rx-antenna channel stacks frequency-major over
  transmit antennas, so reshaping with Fortran order recovers the
  (n_t, n_f) matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def spherical_unit(theta: float, phi: float) -> np.ndarray:
    """Unit vector [sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)]."""
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def wrap_azimuth(phi: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = (phi + math.pi) % (2.0 * math.pi) - math.pi
    if w == -math.pi:
        w = math.pi
    return w


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array: n_v rows times n_h columns in the YZ plane.

    Element s sits in row s % n_v (along Z, spacing d_v) and column
    s // n_v (along Y, spacing d_h); distances in meters, lambda0 is the
    carrier wavelength.
    """

    n_v: int
    n_h: int
    d_v: float
    d_h: float
    lambda0: float

    def __post_init__(self):
        if self.n_v < 1 or self.n_h < 1:
            raise ValueError("array needs at least one element per axis")
        if self.d_v <= 0 or self.d_h <= 0 or self.lambda0 <= 0:
            raise ValueError("spacings and wavelength must be positive")

    @property
    def n_t(self) -> int:
        return self.n_v * self.n_h

    def element_positions(self) -> np.ndarray:
        """(n_t, 3) element coordinates, antenna index fastest along Z."""
        idx = np.arange(self.n_t)
        pos = np.zeros((self.n_t, 3))
        pos[:, 1] = (idx // self.n_v) * self.d_h
        pos[:, 2] = (idx % self.n_v) * self.d_v
        return pos


@dataclass(frozen=True)
class SubcarrierGrid:
    """Uniform frequency grid f_i = f1 + i * delta_f, i = 0..n_f-1."""

    n_f: int
    delta_f: float
    f1: float

    def __post_init__(self):
        if self.n_f < 1:
            raise ValueError("need at least one frequency bin")
        if self.delta_f <= 0 or self.f1 <= 0:
            raise ValueError("delta_f and f1 must be positive")

    def frequencies(self) -> np.ndarray:
        return self.f1 + self.delta_f * np.arange(self.n_f)


@dataclass(frozen=True)
class PathParams:
    """One plane-wave propagation path.

    Angles in radians: theta_* are zenith angles in [0, pi], phi_* are
    azimuths in (-pi, pi].  tau is the propagation delay in seconds and
    beta the complex path gain.
    """

    theta_zod: float
    phi_aod: float
    theta_zoa: float
    phi_aoa: float
    tau: float
    beta: complex

    def __post_init__(self):
        for name in ("theta_zod", "theta_zoa"):
            th = getattr(self, name)
            if not 0.0 <= th <= math.pi:
                raise ValueError(f"{name} must lie in [0, pi]")
        for tname, pname in (("theta_zod", "phi_aod"), ("theta_zoa", "phi_aoa")):
            th, ph = getattr(self, tname), getattr(self, pname)
            if not -math.pi < ph <= math.pi:
                raise ValueError(f"{pname} must lie in (-pi, pi]")
            if th in (0.0, math.pi) and ph != 0.0:
                raise ValueError(f"{pname} must be 0 when {tname} is 0 or pi")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if not np.isfinite(self.beta):
            raise ValueError("beta must be finite")

    def departure_unit(self) -> np.ndarray:
        return spherical_unit(self.theta_zod, self.phi_aod)

    def arrival_unit(self) -> np.ndarray:
        return spherical_unit(self.theta_zoa, self.phi_aoa)


@dataclass(frozen=True)
class UeKinematics:
    """Receiver motion and antenna placement.

    speed in m/s; the travel direction is the unit vector at zenith
    theta_v / azimuth phi_v.  rx_antenna_positions is an (n_r, 3) array of
    antenna coordinates in the receiver's local frame (meters).
    """

    speed: float
    phi_v: float
    theta_v: float = math.pi / 2
    rx_antenna_positions: tuple = ((0.0, 0.0, 0.0),)

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be non-negative")
        pos = np.asarray(self.rx_antenna_positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ValueError("rx_antenna_positions must be (n_r, 3)")

    @property
    def n_r(self) -> int:
        return len(self.rx_antenna_positions)

    def positions(self) -> np.ndarray:
        return np.asarray(self.rx_antenna_positions, dtype=float)

    def velocity(self) -> np.ndarray:
        return self.speed * spherical_unit(self.theta_v, self.phi_v)


def steering_vertical(theta: float, geom: ArrayGeometry) -> np.ndarray:
    """Vertical steering vector, entries exp(j 2 pi n d_v cos(theta) / lambda0)."""
    n = np.arange(geom.n_v)
    return np.exp(2j * np.pi * n * geom.d_v * math.cos(theta) / geom.lambda0)


def steering_horizontal(theta: float, phi: float, geom: ArrayGeometry) -> np.ndarray:
    """Horizontal steering vector, entries exp(j 2 pi n d_h sin(theta) sin(phi) / lambda0)."""
    n = np.arange(geom.n_h)
    return np.exp(
        2j * np.pi * n * geom.d_h * math.sin(theta) * math.sin(phi) / geom.lambda0
    )


def steering_3d(theta: float, phi: float, geom: ArrayGeometry) -> np.ndarray:
    """Full UPA steering vector: kron(horizontal, vertical), vertical index fastest."""
    return np.kron(steering_horizontal(theta, phi, geom), steering_vertical(theta, geom))


def delay_response(tau: float, grid: SubcarrierGrid) -> np.ndarray:
    """Frequency response of a pure delay, entries exp(-j 2 pi f_i tau)."""
    return np.exp(-2j * np.pi * grid.frequencies() * tau)


def generalized_steering(path: PathParams, geom: ArrayGeometry, grid: SubcarrierGrid) -> np.ndarray:
    """Joint space-frequency signature kron(delay_response, steering_3d).

    Length n_t * n_f with the transmit-antenna index fastest; squared norm
    is exactly n_t * n_f since every entry has unit modulus.
    """
    return np.kron(delay_response(path.tau, grid), steering_3d(path.theta_zod, path.phi_aod, geom))


def doppler_rate(path: PathParams, kin: UeKinematics, lambda0: float, two_pi: bool = True) -> float:
    """Phase rotation rate of a path under receiver motion.

    Projection of the arrival direction onto the velocity, divided by the
    wavelength; with two_pi=True (default) the result is in rad/s so the
    time factor is exp(j * rate * t).
    """
    rate = float(path.arrival_unit() @ kin.velocity()) / lambda0
    return (2.0 * math.pi * rate) if two_pi else rate


@dataclass(eq=False)
class ChannelSnapshot:
    """Channel at one time instant: h[u, s, i] over (rx antenna, tx antenna, bin)."""

    t: float
    h: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=complex)
        if self.h.ndim != 3:
            raise ValueError("h must have shape (n_r, n_t, n_f)")
        if not np.isfinite(self.h).all():
            raise ValueError("channel entries must be finite")

    @property
    def n_r(self) -> int:
        return self.h.shape[0]

    @property
    def n_t(self) -> int:
        return self.h.shape[1]

    @property
    def n_f(self) -> int:
        return self.h.shape[2]

    def vec(self, u: int) -> np.ndarray:
        """Vectorized channel of rx antenna u, frequency-major (length n_t * n_f)."""
        return self.h[u].reshape(-1, order="F")

    def vec_all(self) -> np.ndarray:
        """All rx antennas stacked: [vec(0); vec(1); ...], length n_r * n_t * n_f."""
        return np.concatenate([self.vec(u) for u in range(self.n_r)])


def snapshot_from_vec_all(vec: np.ndarray, t: float, n_r: int, n_t: int, n_f: int) -> ChannelSnapshot:
    """Inverse of ChannelSnapshot.vec_all for a stacked vector."""
    vec = np.asarray(vec)
    if vec.shape != (n_r * n_t * n_f,):
        raise ValueError("stacked vector has wrong length")
    h = np.stack([
        vec[u * n_t * n_f:(u + 1) * n_t * n_f].reshape((n_t, n_f), order="F")
        for u in range(n_r)
    ])
    return ChannelSnapshot(t=t, h=h)


@dataclass(eq=False)
class SampleTrack:
    """A uniformly spaced sequence of channel snapshots."""

    snapshots: list

    def __post_init__(self):
        if len(self.snapshots) < 1:
            raise ValueError("track must contain at least one snapshot")
        shape = self.snapshots[0].h.shape
        for s in self.snapshots[1:]:
            if s.h.shape != shape:
                raise ValueError("all snapshots must share one shape")
        times = np.array([s.t for s in self.snapshots])
        if len(times) > 2:
            steps = np.diff(times)
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
                raise ValueError("snapshots must be uniformly spaced in time")

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, i):
        return self.snapshots[i]

    @property
    def delta_t(self) -> float:
        if len(self.snapshots) < 2:
            return 0.0
        return self.snapshots[1].t - self.snapshots[0].t

    def vectors(self) -> np.ndarray:
        """Stacked sample matrix: column l is snapshot l's vec_all()."""
        return np.column_stack([s.vec_all() for s in self.snapshots])


@dataclass(frozen=True)
class ClusterScenario:
    """Clustered multipath generator settings.

    Angle ranges are (low, high) in radians for the cluster centers;
    ray_angle_spread is the half-width of the per-ray uniform offset.
    Cluster delays are exponentially spaced over delay_spread and cluster
    powers decay by cluster_decay_db per cluster before normalization.
    """

    n_clusters: int = 23
    rays_per_cluster: int = 20
    zod_range: tuple = (math.radians(60.0), math.radians(120.0))
    aod_range: tuple = (math.radians(-60.0), math.radians(60.0))
    zoa_range: tuple = (math.radians(60.0), math.radians(120.0))
    aoa_range: tuple = (math.radians(-180.0) + 1e-9, math.radians(180.0))
    ray_angle_spread: float = math.radians(5.0)
    delay_spread: float = 300e-9
    cluster_decay_db: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.n_clusters < 1 or self.rays_per_cluster < 1:
            raise ValueError("need at least one cluster and one ray")
        if self.delay_spread < 0 or self.ray_angle_spread < 0:
            raise ValueError("spreads must be non-negative")

    @property
    def n_paths(self) -> int:
        return self.n_clusters * self.rays_per_cluster


def _clip_zenith(theta: np.ndarray) -> np.ndarray:
    return np.clip(theta, 0.0, math.pi)


def synthesize_cluster_paths(scenario: ClusterScenario) -> list:
    """Draw a deterministic multipath set from a clustered scenario.

    Per cluster: center angles uniform in the configured ranges, a shared
    delay, exponentially decaying power split equally over its rays.  Per
    ray: angle offsets uniform within +/- ray_angle_spread and an i.i.d.
    uniform phase.  Gains are normalized so sum |beta|^2 = 1.
    """
    rng = np.random.default_rng(scenario.seed)
    n_c, n_ray = scenario.n_clusters, scenario.rays_per_cluster
    cluster_delays = -scenario.delay_spread * np.log1p(-np.arange(n_c) / n_c)
    cluster_powers = 10.0 ** (-scenario.cluster_decay_db * np.arange(n_c) / 10.0)

    records = []
    for c in range(n_c):
        zod = rng.uniform(*scenario.zod_range)
        aod = rng.uniform(*scenario.aod_range)
        zoa = rng.uniform(*scenario.zoa_range)
        aoa = rng.uniform(*scenario.aoa_range)
        spread = scenario.ray_angle_spread
        offsets = rng.uniform(-spread, spread, size=(n_ray, 4))
        phases = rng.uniform(0.0, 2.0 * math.pi, size=n_ray)
        amp = math.sqrt(cluster_powers[c] / n_ray)
        for r in range(n_ray):
            records.append((
                _clip_zenith(zod + offsets[r, 0]),
                wrap_azimuth(aod + offsets[r, 1]),
                _clip_zenith(zoa + offsets[r, 2]),
                wrap_azimuth(aoa + offsets[r, 3]),
                cluster_delays[c],
                amp * np.exp(1j * phases[r]),
            ))

    total = math.sqrt(sum(abs(b) ** 2 for *_, b in records))
    paths = []
    for th_d, ph_d, th_a, ph_a, tau, beta in records:
        if th_d in (0.0, math.pi):
            ph_d = 0.0
        if th_a in (0.0, math.pi):
            ph_a = 0.0
        paths.append(PathParams(float(th_d), float(ph_d), float(th_a), float(ph_a),
                                float(tau), complex(beta / total)))
    return paths


def path_matrices(paths: list, geom: ArrayGeometry, grid: SubcarrierGrid) -> tuple:
    """Steering and delay factor matrices: A is (n_t, P), B is (P, n_f)."""
    a_cols = np.column_stack([steering_3d(p.theta_zod, p.phi_aod, geom) for p in paths])
    b_rows = np.vstack([delay_response(p.tau, grid) for p in paths])
    return a_cols, b_rows


def channel_snapshot(paths: list, geom: ArrayGeometry, grid: SubcarrierGrid,
                     kin: UeKinematics, t: float, doppler_two_pi: bool = True) -> ChannelSnapshot:
    """Synthesize the channel at time t.

    h[u, s, i] = sum_p beta_p * exp(j 2 pi rhat_rx . d_u / lambda0)
                 * [steering_3d]_s * exp(-j 2 pi f_i tau_p) * exp(j omega_p t).
    """
    if not paths:
        raise ValueError("at least one path required")
    a_cols, b_rows = path_matrices(paths, geom, grid)
    arrivals = np.vstack([p.arrival_unit() for p in paths])
    rx_phase = np.exp(2j * np.pi * (kin.positions() @ arrivals.T) / geom.lambda0)
    omega = np.array([doppler_rate(p, kin, geom.lambda0, doppler_two_pi) for p in paths])
    betas = np.array([p.beta for p in paths])
    coef = betas[None, :] * rx_phase * np.exp(1j * omega * t)[None, :]
    h = np.einsum("tp,up,pf->utf", a_cols, coef, b_rows)
    return ChannelSnapshot(t=float(t), h=h)


def sample_track(paths: list, geom: ArrayGeometry, grid: SubcarrierGrid,
                 kin: UeKinematics, times: np.ndarray, doppler_two_pi: bool = True) -> SampleTrack:
    """Channel snapshots at the given (uniformly spaced) times."""
    snaps = [channel_snapshot(paths, geom, grid, kin, float(t), doppler_two_pi)
             for t in np.asarray(times, dtype=float)]
    return SampleTrack(snaps)


def add_sample_noise(snap: ChannelSnapshot, snr_db: float, seed) -> ChannelSnapshot:
    """Add circular complex Gaussian noise at the given per-entry sample SNR.

    snr_db = inf returns the snapshot unchanged.  seed may be an int,
    SeedSequence or Generator; identical seeds give identical noise.
    """
    if math.isinf(snr_db):
        return snap
    rng = np.random.default_rng(seed)
    sig_pow = float(np.mean(np.abs(snap.h) ** 2))
    var = sig_pow * 10.0 ** (-snr_db / 10.0)
    noise = math.sqrt(var / 2.0) * (rng.standard_normal(snap.h.shape)
                                    + 1j * rng.standard_normal(snap.h.shape))
    return ChannelSnapshot(t=snap.t, h=snap.h + noise)


def _geometric_sum(phase_step: float, n: int) -> complex:
    # sum_{k=0}^{n-1} exp(j k phase_step), with the limit value n when the
    # per-term rotation degenerates to 1.
    r = complex(math.cos(phase_step), math.sin(phase_step))
    if abs(r - 1.0) < 1e-15:
        return complex(n)
    return (1.0 - r ** n) / (1.0 - r)


def closed_form_inner_product(p: PathParams, q: PathParams, geom: ArrayGeometry,
                              grid: SubcarrierGrid) -> complex:
    """<v_p, v_q> for generalized steering vectors without forming them.

    The inner product factors into three finite geometric series, one per
    axis (delay, horizontal, vertical).
    """
    x_v = 2.0 * math.pi * geom.d_v * (math.cos(q.theta_zod) - math.cos(p.theta_zod)) / geom.lambda0
    x_h = 2.0 * math.pi * geom.d_h * (
        math.sin(q.theta_zod) * math.sin(q.phi_aod)
        - math.sin(p.theta_zod) * math.sin(p.phi_aod)
    ) / geom.lambda0
    dtau = q.tau - p.tau
    x_f = -2.0 * math.pi * grid.delta_f * dtau
    phase_f1 = complex(math.cos(-2.0 * math.pi * grid.f1 * dtau),
                       math.sin(-2.0 * math.pi * grid.f1 * dtau))
    return (phase_f1 * _geometric_sum(x_f, grid.n_f)
            * _geometric_sum(x_h, geom.n_h)
            * _geometric_sum(x_v, geom.n_v))
