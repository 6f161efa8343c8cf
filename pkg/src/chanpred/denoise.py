"""Noise suppression for channel estimates.

Two complementary tools: a truncated-SVD least-squares solver that drops
the noise-dominated tail of the spectrum when fitting recursion
coefficients, and a spatial LMMSE filter built from the estimated
transmit-side covariance that shrinks the noisy eigendirections of each
snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSnapshot


@dataclass(frozen=True)
class TruncationPolicy:
    """Keep the smallest singular-value prefix holding a gamma_tk fraction
    of the nuclear norm."""

    gamma_tk: float = 0.99

    def __post_init__(self):
        if not 0.0 < self.gamma_tk <= 1.0:
            raise ValueError("gamma_tk must lie in (0, 1]")


def tk_solve(a: np.ndarray, b: np.ndarray, policy: TruncationPolicy | None = None) -> np.ndarray:
    """Truncated-SVD solve returning -pinv_truncated(a) @ b.

    The minus sign is included so the result plugs in directly wherever a
    recursion-coefficient solver is expected.  An all-zero matrix returns
    the zero vector.
    """
    policy = policy or TruncationPolicy()
    a = np.asarray(a)
    b = np.asarray(b)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    total = float(s.sum())
    if total <= 0.0:
        return np.zeros(a.shape[1], dtype=complex)
    csum = np.cumsum(s)
    k = int(np.searchsorted(csum, policy.gamma_tk * total, side="left")) + 1
    k = min(k, len(s))
    return -(vh[:k].conj().T @ ((u[:, :k].conj().T @ b) / s[:k]))


def tk_solver(policy: TruncationPolicy | None = None):
    """Bind a truncation policy into a two-argument coefficient solver."""
    policy = policy or TruncationPolicy()

    def solve(a, b):
        return tk_solve(a, b, policy)

    return solve


@dataclass(eq=False)
class SpatialCovariance:
    """Transmit-side covariance with its eigendecomposition.

    eigenvalues are sorted descending and clamped to be non-negative;
    eigenvectors holds the matching eigenvectors as columns.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "SpatialCovariance":
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("covariance must be square")
        matrix = 0.5 * (matrix + matrix.conj().T)
        vals, vecs = np.linalg.eigh(matrix)
        order = np.argsort(vals)[::-1]
        return cls(matrix=matrix,
                   eigenvalues=np.clip(vals[order], 0.0, None),
                   eigenvectors=vecs[:, order])

    @property
    def n_t(self) -> int:
        return self.matrix.shape[0]


def estimate_covariance(snapshots) -> SpatialCovariance:
    """Average H(f, t)^H H(f, t) over every snapshot and frequency bin."""
    snaps = list(snapshots)
    if not snaps:
        raise ValueError("need at least one snapshot")
    n_t = snaps[0].n_t
    acc = np.zeros((n_t, n_t), dtype=complex)
    count = 0
    for snap in snaps:
        acc += np.einsum("uti,usi->ts", snap.h.conj(), snap.h)
        count += snap.n_f
    return SpatialCovariance.from_matrix(acc / count)


def estimate_noise_power(cov: SpatialCovariance, n_r: int, tail_fraction: float = 0.25) -> float:
    """Per-entry noise variance from the covariance eigenvalue tail.

    Averages the smallest ceil(tail_fraction * n_t) eigenvalues and divides
    by n_r (the covariance accumulates n_r antenna contributions per bin).
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    if n_r < 1:
        raise ValueError("n_r must be positive")
    k = math.ceil(tail_fraction * cov.n_t)
    tail = cov.eigenvalues[cov.n_t - k:]
    return float(tail.mean() / n_r)


@dataclass(eq=False)
class DenoiseFilter:
    """Right-multiplied spatial filter W = U diag(gains) U^H."""

    matrix: np.ndarray
    gains: np.ndarray


def build_lmmse_filter(cov: SpatialCovariance, noise_power: float, n_r: int) -> DenoiseFilter:
    """LMMSE shrinkage filter from a noisy covariance estimate.

    Per eigendirection the gain is (sigma_i - n_r * noise_power) / sigma_i,
    clamped to [0, 1]; directions at or below the noise floor are zeroed.
    With noise_power = 0 the filter is the identity on the covariance's
    column space (and exactly the identity when all eigenvalues are
    positive).
    """
    if noise_power < 0:
        raise ValueError("noise_power must be non-negative")
    vals = cov.eigenvalues
    gains = np.zeros_like(vals)
    pos = vals > 0
    gains[pos] = np.clip((vals[pos] - n_r * noise_power) / vals[pos], 0.0, 1.0)
    u = cov.eigenvectors
    w = (u * gains) @ u.conj().T
    return DenoiseFilter(matrix=w, gains=gains)


def apply_filter(snap: ChannelSnapshot, filt: DenoiseFilter) -> ChannelSnapshot:
    """Apply the spatial filter to every frequency slice: H(f) -> H(f) @ W."""
    w = filt.matrix
    if w.shape != (snap.n_t, snap.n_t):
        raise ValueError("filter size does not match the snapshot")
    h = np.einsum("uti,ts->usi", snap.h, w)
    return ChannelSnapshot(t=snap.t, h=h)
