"""Angular-delay domain channel prediction.

Vectorized channels are rotated into the angular-delay domain with a
unitary 3-D DFT (vertical angle, horizontal angle, delay).  Multipath
channels concentrate there: a small support set captures almost all the
energy, and each retained coordinate evolves in time as a low-order
exponential mixture.  Prediction fits a scalar recursion per retained
coordinate, runs it forward, and rotates back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSnapshot, SampleTrack
from .prony import scalar_prony_fit, scalar_prony_predict


@dataclass(frozen=True)
class AngularDelayDims:
    """Axis sizes (n_v, n_h, n_f) of the angular-delay transform."""

    n_v: int
    n_h: int
    n_f: int

    def __post_init__(self):
        if self.n_v < 1 or self.n_h < 1 or self.n_f < 1:
            raise ValueError("all axis sizes must be positive")

    @property
    def total(self) -> int:
        return self.n_v * self.n_h * self.n_f


def _as_cube(vec: np.ndarray, dims: AngularDelayDims) -> np.ndarray:
    vec = np.asarray(vec)
    if vec.shape != (dims.total,):
        raise ValueError(f"expected a vector of length {dims.total}, got {vec.shape}")
    return vec.reshape((dims.n_v, dims.n_h, dims.n_f), order="F")


def project_to_angular_delay(vec: np.ndarray, dims: AngularDelayDims) -> np.ndarray:
    """Rotate a vectorized channel into the angular-delay domain.

    Applies the conjugate transpose of the unitary DFT along each of the
    three axes (never materializing the Kronecker-product matrix); energy
    is preserved exactly up to rounding.
    """
    cube = _as_cube(vec, dims)
    for axis in range(3):
        cube = np.fft.ifft(cube, axis=axis, norm="ortho")
    return cube.reshape(-1, order="F")


def inverse_project(coeffs: np.ndarray, dims: AngularDelayDims) -> np.ndarray:
    """Rotate angular-delay coefficients back to the vectorized channel."""
    cube = _as_cube(coeffs, dims)
    for axis in range(3):
        cube = np.fft.fft(cube, axis=axis, norm="ortho")
    return cube.reshape(-1, order="F")


@dataclass(frozen=True)
class SupportSet:
    """Retained angular-delay coordinates, strongest first."""

    indices: tuple
    gamma: float
    captured_fraction: float

    @property
    def n_s(self) -> int:
        return len(self.indices)


def select_support(tracks: np.ndarray, gamma: float) -> SupportSet:
    """Smallest coordinate set capturing a gamma fraction of track energy.

    tracks is any array whose last axis indexes angular-delay coordinates;
    energy is aggregated over all leading axes (rx antennas and time), so
    the whole track shares one support.  Ties in energy break toward the
    lower index; the returned indices are sorted by descending energy.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    arr = np.asarray(tracks)
    energy = np.abs(arr.reshape(-1, arr.shape[-1])) ** 2
    energy = energy.sum(axis=0)
    total = float(energy.sum())
    if total <= 0.0:
        raise ValueError("track has no energy; support is undefined")
    order = np.argsort(-energy, kind="stable")
    csum = np.cumsum(energy[order])
    count = int(np.searchsorted(csum, gamma * total, side="left")) + 1
    count = min(count, len(order))
    if gamma >= 1.0:
        count = max(count, int(np.count_nonzero(energy)))
    return SupportSet(indices=tuple(int(i) for i in order[:count]),
                      gamma=gamma,
                      captured_fraction=float(csum[count - 1] / total))


def fit_tap(series: np.ndarray, order: int, solver=None) -> np.ndarray:
    """Recursion coefficients for one angular-delay coordinate over time."""
    return scalar_prony_fit(series, order, solver=solver)


def pad_predict(track: SampleTrack, dims: AngularDelayDims, gamma: float = 0.99,
                n_steps: int = 1, solver=None, order: int | None = None) -> ChannelSnapshot:
    """Predict the channel n_steps sample intervals past the track's end.

    Projects every snapshot of every rx antenna into the angular-delay
    domain, selects one shared support at the energy fraction gamma, fits
    a per-coordinate recursion of the given order (default (L+1)//2 for a
    track of L+1 samples) and extrapolates each retained coordinate,
    feeding predictions back into its window.  Coordinates off the
    support are zeroed in the prediction.
    """
    n_samp = len(track)
    if n_samp < 2:
        raise ValueError("need at least two snapshots to predict")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    ref = track[0]
    if ref.n_t * ref.n_f != dims.total:
        raise ValueError("dims do not match the snapshot shape")
    n_r = ref.n_r
    if order is None:
        order = n_samp // 2
    if order < 1 or 2 * order > n_samp:
        raise ValueError("order too large for the track length")

    coeffs = np.empty((n_r, n_samp, dims.total), dtype=complex)
    for l, snap in enumerate(track):
        for u in range(n_r):
            coeffs[u, l] = project_to_angular_delay(snap.vec(u), dims)

    support = select_support(coeffs, gamma)

    predicted = np.zeros((n_r, dims.total), dtype=complex)
    for u in range(n_r):
        for idx in support.indices:
            series = coeffs[u, :, idx]
            taps = fit_tap(series, order, solver=solver)
            window = series[n_samp - order:]
            predicted[u, idx] = scalar_prony_predict(taps, window, n_steps)

    t_pred = track[-1].t + n_steps * track.delta_t
    h = np.stack([
        inverse_project(predicted[u], dims).reshape((ref.n_t, ref.n_f), order="F")
        for u in range(n_r)
    ])
    return ChannelSnapshot(t=t_pred, h=h)
