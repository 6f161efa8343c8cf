"""End-to-end evaluation: precoding, link metrics and Monte Carlo runs.

A drop synthesizes one multipath channel per user, observes a short
uniformly sampled track (optionally noisy, optionally denoised), predicts
the channel one CSI delay ahead with the configured predictor, precodes on
the prediction and scores it against the true future channel: normalized
error in dB, and per-user spectral efficiency under an eigen-zero-forcing
transmitter with an interference-aware MMSE receiver.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (ArrayGeometry, ChannelSnapshot, ClusterScenario, SampleTrack,
                      SubcarrierGrid, UeKinematics, add_sample_noise, channel_snapshot,
                      snapshot_from_vec_all, synthesize_cluster_paths)
from .denoise import (TruncationPolicy, apply_filter, build_lmmse_filter,
                      estimate_covariance, estimate_noise_power, tk_solver)
from .pad import AngularDelayDims, pad_predict
from .prony import pinv_solve, vector_prony_predict

NMSE_FLOOR_DB = -300.0
TOTAL_TX_POWER = 1.0

PREDICTORS = ("none", "vector_prony", "pad", "fir_wiener", "oracle")
DENOISE_MODES = ("off", "lmmse", "tk_solver", "both")


def _as_array(x) -> np.ndarray:
    return np.asarray(x.h if isinstance(x, ChannelSnapshot) else x)


def error_ratio(predicted, truth) -> float:
    """Squared-Frobenius error of a prediction relative to the truth."""
    p = _as_array(predicted)
    t = _as_array(truth)
    if p.shape != t.shape:
        raise ValueError("prediction and truth must have the same shape")
    denom = float(np.sum(np.abs(t) ** 2))
    if denom == 0.0:
        raise ValueError("truth has zero energy; NMSE is undefined")
    return float(np.sum(np.abs(p - t) ** 2)) / denom


def nmse_db(predicted, truth) -> float:
    """10 log10 of the normalized squared error, floored at -300 dB."""
    return 10.0 * math.log10(max(error_ratio(predicted, truth), 1e-30))


def ezf_precoder(channels, power: float = TOTAL_TX_POWER) -> np.ndarray:
    """Eigen-zero-forcing precoder for one frequency bin.

    channels: one (n_r, n_t) matrix per user.  Each user's effective row
    is its dominant left singular vector applied to its channel; the
    precoder is the pseudoinverse of the stacked effective matrix with
    every column scaled to power / n_users (total transmit power is
    exactly `power`).  A rank-deficient stack is flagged with a warning
    and solved in the minimum-norm sense, leaving dead columns at zero.
    """
    rows = []
    for h in channels:
        h = np.asarray(h)
        u, _, _ = np.linalg.svd(h, full_matrices=False)
        rows.append(u[:, 0].conj() @ h)
    h_eff = np.vstack(rows)
    sv = np.linalg.svd(h_eff, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= 1e-12 * sv[0]:
        warnings.warn("rank-deficient effective channel; minimum-norm precoder used")
    w = np.linalg.pinv(h_eff, rcond=1e-12)
    n_users = h_eff.shape[0]
    col_pow = np.sum(np.abs(w) ** 2, axis=0)
    dead = col_pow <= 1e-24 * max(col_pow.max(), 1.0)
    scale = np.zeros(n_users)
    scale[~dead] = np.sqrt(power / n_users / col_pow[~dead])
    return w * scale


def mmse_irc_sinr(true_channels, precoders, noise_power: float) -> np.ndarray:
    """Post-combining SINR per (user, frequency bin).

    true_channels: one (n_r, n_t, n_f) array per user (the channel the
    signal actually passes through).  precoders: (n_f, n_t, n_users), or a
    single (n_t, n_users) matrix reused on every bin.  Each user applies
    the interference-aware MMSE combiner w = R_i^{-1} g_k built from its
    own received streams, where R_i collects interference plus noise; the
    reported value is |w^H g_k|^2 / (w^H R_i w).  A vanishing relative
    ridge (1e-12 of the received power) keeps R_i invertible, which caps
    the SINR near 120 dB when noise_power = 0.
    """
    if noise_power < 0:
        raise ValueError("noise_power must be non-negative")
    chans = [np.asarray(h) for h in true_channels]
    n_users = len(chans)
    n_f = chans[0].shape[2]
    prec = np.asarray(precoders)
    if prec.ndim == 2:
        prec = np.broadcast_to(prec, (n_f,) + prec.shape)
    sinr = np.zeros((n_users, n_f))
    for i in range(n_f):
        w_mat = prec[i]
        for k in range(n_users):
            g = chans[k][:, :, i] @ w_mat
            gk = g[:, k]
            others = np.delete(g, k, axis=1)
            r_int = others @ others.conj().T
            ridge = 1e-12 * (np.sum(np.abs(g) ** 2) / max(n_users, 1) + noise_power)
            r_int += (noise_power + ridge) * np.eye(g.shape[0])
            comb = np.linalg.solve(r_int, gk)
            num = abs(np.vdot(comb, gk)) ** 2
            den = float(np.real(comb.conj() @ r_int @ comb))
            sinr[k, i] = num / den if den > 0 else 0.0
    return sinr


@dataclass(frozen=True)
class SpectralEfficiency:
    """Per-user rates (bit/s/Hz, averaged over frequency) and their sum."""

    per_ue: np.ndarray
    total: float


def spectral_efficiency(sinr: np.ndarray) -> SpectralEfficiency:
    """Mean log2(1 + SINR) over frequency per user; sum over users."""
    sinr = np.asarray(sinr)
    if sinr.ndim != 2:
        raise ValueError("sinr must be (n_users, n_f)")
    per_ue = np.log2(1.0 + sinr).mean(axis=1)
    return SpectralEfficiency(per_ue=per_ue, total=float(per_ue.sum()))


def fir_wiener_predict(samples, order: int, n_steps: int) -> np.ndarray:
    """Linear MMSE extrapolation from empirical autocorrelation.

    samples: matrix with one column per time step (or a SampleTrack).
    Autocorrelation lags are averaged over every vector entry, the
    Wiener-Hopf normal equations are solved (minimum-norm, so degenerate
    covariances such as a constant signal still work) and the predictor
    taps are applied to the most recent `order` columns to estimate the
    sample n_steps ahead.
    """
    if hasattr(samples, "vectors"):
        samples = samples.vectors()
    mat = np.atleast_2d(np.asarray(samples, dtype=complex))
    n_cols = mat.shape[1]
    if order < 1 or n_steps < 1:
        raise ValueError("order and n_steps must be at least 1")
    if n_cols < order + n_steps:
        raise ValueError(
            f"need at least order + n_steps = {order + n_steps} samples, got {n_cols}")
    max_lag = order - 1 + n_steps
    r = np.empty(max_lag + 1, dtype=complex)
    for m in range(max_lag + 1):
        r[m] = np.mean(mat[:, m:] * mat[:, :n_cols - m].conj())
    r_mat = np.empty((order, order), dtype=complex)
    for j in range(order):
        for i in range(order):
            d = j - i
            r_mat[j, i] = r[d] if d >= 0 else r[-d].conj()
    rhs = r[n_steps:n_steps + order]
    taps = pinv_solve(r_mat, rhs)
    recent = mat[:, n_cols - 1 - np.arange(order)]
    return recent @ taps


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one Monte Carlo cell.

    Times are seconds; csi_delay must be an integer multiple of delta_t
    (their ratio is the prediction horizon in sample steps).  Speeds are
    km/h and are cycled over users when fewer values than users are given.
    sample_snr_db = inf means ideal (noise-free) channel samples; snr_db
    is the downlink SNR used when scoring spectral efficiency.
    """

    geometry: ArrayGeometry
    grid: SubcarrierGrid
    scenario: ClusterScenario = field(default_factory=ClusterScenario)
    n_ues: int = 8
    n_rx_antennas: int = 2
    ue_speeds_kmh: tuple = (30.0,)
    delta_t: float = 0.5e-3
    csi_delay: float = 4.0e-3
    history_len: int = 7
    predictor: str = "pad"
    pad_order: int = 0
    sample_snr_db: float = math.inf
    denoise: str = "off"
    gamma: float = 0.99
    gamma_tk: float = 0.99
    noise_tail_fraction: float = 0.25
    covariance_window: int = 64
    snr_db: float = 20.0
    drops: int = 10
    seed: int = 0
    doppler_two_pi: bool = True

    def __post_init__(self):
        if self.n_ues < 1 or self.n_rx_antennas < 1:
            raise ValueError("n_ues and n_rx_antennas must be positive")
        if not self.ue_speeds_kmh or any(s < 0 for s in self.ue_speeds_kmh):
            raise ValueError("ue_speeds_kmh must be non-empty and non-negative")
        if self.delta_t <= 0 or self.csi_delay <= 0:
            raise ValueError("delta_t and csi_delay must be positive")
        ratio = self.csi_delay / self.delta_t
        if abs(ratio - round(ratio)) > 1e-6 * max(1.0, ratio):
            raise ValueError(
                f"csi_delay ({self.csi_delay}) must be an integer multiple of "
                f"delta_t ({self.delta_t})")
        if self.history_len < 1:
            raise ValueError("history_len must be at least 1")
        if self.predictor not in PREDICTORS:
            raise ValueError(f"predictor must be one of {PREDICTORS}")
        if self.pad_order < 0:
            raise ValueError("pad_order must be non-negative (0 picks the default)")
        if self.denoise not in DENOISE_MODES:
            raise ValueError(f"denoise must be one of {DENOISE_MODES}")
        for name in ("gamma", "gamma_tk"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        if not 0.0 < self.noise_tail_fraction <= 1.0:
            raise ValueError("noise_tail_fraction must lie in (0, 1]")
        if self.covariance_window < 0:
            raise ValueError("covariance_window must be non-negative")
        if self.drops < 1:
            raise ValueError("drops must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    @property
    def n_d(self) -> int:
        return int(round(self.csi_delay / self.delta_t))

    @property
    def dims(self) -> AngularDelayDims:
        return AngularDelayDims(self.geometry.n_v, self.geometry.n_h, self.grid.n_f)

    def ue_speed_ms(self, k: int) -> float:
        return self.ue_speeds_kmh[k % len(self.ue_speeds_kmh)] / 3.6


@dataclass(frozen=True)
class PredictionErrorReport:
    """Normalized prediction error per (drop, user).

    nmse_db holds floored per-cell values; mean_db aggregates as
    10 log10 of the mean error ratio (the ensemble average), std_db is the
    spread of the per-cell dB values.
    """

    nmse_db: np.ndarray
    mean_db: float
    std_db: float


@dataclass(frozen=True)
class SpectralEfficiencyReport:
    """Spectral efficiency per (drop, user) plus summary statistics."""

    per_ue_se: np.ndarray
    sum_se: np.ndarray
    mean_sum: float
    std_sum: float
    mean_per_ue: np.ndarray


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    prediction: PredictionErrorReport
    spectral: SpectralEfficiencyReport


def dl_noise_power(config: ExperimentConfig) -> float:
    """UE-side noise power for the configured downlink SNR.

    Normalized against the nominal per-user array-gain share
    n_t * P_total / n_ues, so snr_db = 0 puts the noise at that level.
    """
    ref = config.geometry.n_t * TOTAL_TX_POWER / config.n_ues
    return ref * 10.0 ** (-config.snr_db / 10.0)


def _drop_seed_roots(config: ExperimentConfig, drop: int):
    root = np.random.SeedSequence([int(config.seed), int(drop)])
    return root.spawn(config.n_ues)


def _seed_int(seq) -> int:
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(eq=False)
class _UeDrop:
    """Everything one user contributes to a drop."""

    paths: list
    kin: UeKinematics
    track: SampleTrack
    truth: ChannelSnapshot


def _synthesize_ue(config: ExperimentConfig, ue_seq, k: int, extra_past: int = 0,
                   extra_future: int = 0) -> tuple:
    """Clean snapshots for user k: (past+track+future snapshots, noise seeds).

    Timeline index i corresponds to time (i - extra_past) * delta_t; the
    nominal track occupies indices extra_past .. extra_past + history_len.
    """
    seq_path, seq_kin, seq_noise = ue_seq.spawn(3)
    scen = replace(config.scenario, seed=_seed_int(seq_path))
    paths = synthesize_cluster_paths(scen)
    rng_kin = np.random.default_rng(seq_kin)
    phi_v = float(rng_kin.uniform(-math.pi, math.pi))
    lam = config.geometry.lambda0
    rx_pos = tuple((0.0, u * lam / 2.0, 0.0) for u in range(config.n_rx_antennas))
    kin = UeKinematics(speed=config.ue_speed_ms(k), phi_v=phi_v, theta_v=math.pi / 2,
                       rx_antenna_positions=rx_pos)
    n_steps = extra_past + config.history_len + 1 + extra_future
    times = (np.arange(n_steps) - extra_past) * config.delta_t
    snaps = [channel_snapshot(paths, config.geometry, config.grid, kin, float(t),
                              config.doppler_two_pi) for t in times]
    return paths, kin, snaps, seq_noise


def _observe(config: ExperimentConfig, clean_snaps: list, seq_noise) -> list:
    """Noisy copies of the clean snapshots (identity when samples are ideal)."""
    if math.isinf(config.sample_snr_db):
        return list(clean_snaps)
    children = seq_noise.spawn(len(clean_snaps))
    return [add_sample_noise(s, config.sample_snr_db, c)
            for s, c in zip(clean_snaps, children)]


def _prepare_track(config: ExperimentConfig, observed: list) -> list:
    """Apply the configured spatial denoising to the trailing track samples.

    observed covers the covariance window plus the track; the last
    history_len + 1 snapshots are returned, filtered when LMMSE denoising
    is on.
    """
    track = observed[-(config.history_len + 1):]
    if config.denoise in ("lmmse", "both"):
        cov = estimate_covariance(observed)
        sigma = estimate_noise_power(cov, config.n_rx_antennas,
                                     config.noise_tail_fraction)
        filt = build_lmmse_filter(cov, sigma, config.n_rx_antennas)
        track = [apply_filter(s, filt) for s in track]
    return track


def _coefficient_solver(config: ExperimentConfig):
    if config.denoise in ("tk_solver", "both"):
        return tk_solver(TruncationPolicy(config.gamma_tk))
    return None


def predict_from_track(config: ExperimentConfig, track: SampleTrack,
                       truth: ChannelSnapshot) -> ChannelSnapshot:
    """Dispatch the configured predictor over a prepared track."""
    n_d = config.n_d
    t_pred = track[-1].t + n_d * config.delta_t
    solver = _coefficient_solver(config)
    ref = track[-1]
    if config.predictor == "none":
        return ChannelSnapshot(t=t_pred, h=ref.h.copy())
    if config.predictor == "oracle":
        return truth
    if config.predictor == "pad":
        order = config.pad_order if config.pad_order > 0 else None
        return pad_predict(track, config.dims, gamma=config.gamma, n_steps=n_d,
                           order=order, solver=solver)
    if config.predictor == "vector_prony":
        vec = vector_prony_predict(track, n_d, order=None, solver=solver)
        return snapshot_from_vec_all(vec, t_pred, ref.n_r, ref.n_t, ref.n_f)
    if config.predictor == "fir_wiener":
        order = max(1, len(track) - n_d)
        vec = fir_wiener_predict(track, order, n_d)
        return snapshot_from_vec_all(vec, t_pred, ref.n_r, ref.n_t, ref.n_f)
    raise ValueError(f"unknown predictor {config.predictor!r}")


def _run_drop(config: ExperimentConfig, drop: int) -> tuple:
    """One drop: per-user (prediction, truth) snapshot pairs."""
    needs_cov = config.denoise in ("lmmse", "both")
    extra_past = config.covariance_window if needs_cov else 0
    preds, truths = [], []
    for k, ue_seq in enumerate(_drop_seed_roots(config, drop)):
        paths, kin, snaps, seq_noise = _synthesize_ue(
            config, ue_seq, k, extra_past=extra_past, extra_future=0)
        truth = channel_snapshot(paths, config.geometry, config.grid, kin,
                                 (config.history_len + config.n_d) * config.delta_t,
                                 config.doppler_two_pi)
        observed = _observe(config, snaps, seq_noise)
        track = SampleTrack(_prepare_track(config, observed))
        preds.append(predict_from_track(config, track, truth))
        truths.append(truth)
    return preds, truths


def _score_se(config: ExperimentConfig, preds: list, truths: list) -> np.ndarray:
    noise = dl_noise_power(config)
    n_f = config.grid.n_f
    precoders = np.empty((n_f, config.geometry.n_t, config.n_ues), dtype=complex)
    for i in range(n_f):
        precoders[i] = ezf_precoder([p.h[:, :, i] for p in preds], TOTAL_TX_POWER)
    sinr = mmse_irc_sinr([t.h for t in truths], precoders, noise)
    return spectral_efficiency(sinr).per_ue


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Monte Carlo over drops: prediction error and spectral efficiency.

    Per-drop randomness derives from (seed, drop index) only, so runs with
    the same seed are reproducible bit for bit and sweeps that share the
    seed are paired across their axis values.
    """
    drops, n_ues = config.drops, config.n_ues
    ratios = np.empty((drops, n_ues))
    per_ue_se = np.empty((drops, n_ues))
    for d in range(drops):
        preds, truths = _run_drop(config, d)
        for k in range(n_ues):
            ratios[d, k] = error_ratio(preds[k], truths[k])
        per_ue_se[d] = _score_se(config, preds, truths)

    cell_db = 10.0 * np.log10(np.maximum(ratios, 1e-30))
    prediction = PredictionErrorReport(
        nmse_db=cell_db,
        mean_db=10.0 * math.log10(max(float(ratios.mean()), 1e-30)),
        std_db=float(cell_db.std()),
    )
    sums = per_ue_se.sum(axis=1)
    spectral = SpectralEfficiencyReport(
        per_ue_se=per_ue_se,
        sum_se=sums,
        mean_sum=float(sums.mean()),
        std_sum=float(sums.std()),
        mean_per_ue=per_ue_se.mean(axis=0),
    )
    return ExperimentResult(config=config, prediction=prediction, spectral=spectral)


def run_prediction_trace(config: ExperimentConfig, n_epochs: int = 8) -> tuple:
    """Sliding-window prediction error over one drop.

    Epoch e observes samples e .. e+L, predicts e+L+N_d and scores it
    against the true channel there; returns (epoch indices, NMSE in dB per
    epoch, mean error ratio over users).
    """
    if n_epochs < 1:
        raise ValueError("n_epochs must be at least 1")
    needs_cov = config.denoise in ("lmmse", "both")
    extra_past = config.covariance_window if needs_cov else 0
    horizon = config.n_d + n_epochs - 1
    per_ue = np.empty((config.n_ues, n_epochs))
    for k, ue_seq in enumerate(_drop_seed_roots(config, 0)):
        paths, kin, snaps, seq_noise = _synthesize_ue(
            config, ue_seq, k, extra_past=extra_past, extra_future=horizon)
        observed = _observe(config, snaps, seq_noise)
        span = config.history_len + 1
        for e in range(n_epochs):
            start = e
            stop = extra_past + e + span
            window = observed[start:stop]
            track = SampleTrack(_prepare_track(config, window))
            truth = snaps[extra_past + e + config.history_len + config.n_d]
            pred = predict_from_track(config, track, truth)
            per_ue[k, e] = error_ratio(pred, truth)
    mean_ratio = per_ue.mean(axis=0)
    nmse = 10.0 * np.log10(np.maximum(mean_ratio, 1e-30))
    return np.arange(n_epochs), nmse, mean_ratio
