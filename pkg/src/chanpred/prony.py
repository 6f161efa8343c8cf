"""Prony fitting and multi-step prediction for uniformly sampled signals.

A length-K sequence that is a mixture of at most N complex exponentials
satisfies a linear recursion of order N.  The fit recovers the recursion
coefficients from a Hankel least-squares system; prediction applies the
recursion forward, feeding predictions back into the window.  The vector
variants treat each sample as a vector and share one recursion across all
coordinates.
"""

from __future__ import annotations

import numpy as np


def pinv_solve(a: np.ndarray, b: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """Minimum-norm least-squares solution of a @ x = b.

    SVD-based; singular values below rel_tol times the largest are treated
    as zero, so an all-zero matrix maps any b to the zero vector.
    """
    x, *_ = np.linalg.lstsq(np.asarray(a), np.asarray(b), rcond=rel_tol)
    return x


def negated_pinv_solver(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Default coefficient solver: -pinv(a) @ b."""
    return -pinv_solve(a, b)


def hankel_system(samples: np.ndarray, order: int) -> tuple:
    """Hankel recursion system (Y, rhs) for a scalar sample sequence.

    Y[m, n] = y(n + m) with shape (K - N, N) and rhs[m] = y(N + m); with
    K = 2N this is the square layout, longer sequences add least-squares
    rows.  Requires K >= 2 * order.
    """
    y = np.asarray(samples).ravel()
    k = len(y)
    if order < 1:
        raise ValueError("order must be at least 1")
    if k < 2 * order:
        raise ValueError(f"need at least {2 * order} samples for order {order}, got {k}")
    rows = k - order
    windows = np.lib.stride_tricks.sliding_window_view(y, order)
    return windows[:rows].copy(), y[order:].copy()


def scalar_prony_fit(samples: np.ndarray, order: int, solver=None) -> np.ndarray:
    """Recursion coefficients p (length order) of a scalar sequence.

    The implied characteristic polynomial is z^N + p_{N-1} z^{N-1} + ...
    + p_0; for a noise-free mixture of at most N exponentials with
    distinct poles the fit is exact.
    """
    solver = solver or negated_pinv_solver
    y_mat, rhs = hankel_system(samples, order)
    return solver(y_mat, rhs)


def scalar_prony_predict(coeffs: np.ndarray, window: np.ndarray, n_steps: int):
    """Run the fitted recursion n_steps ahead of the window.

    window holds the N most recent samples, oldest first.  Each step
    computes next = -sum_n coeffs[n] * window[n] and slides the window;
    returns the final value.
    """
    coeffs = np.asarray(coeffs)
    window = np.asarray(window, dtype=complex).copy()
    if window.shape != coeffs.shape:
        raise ValueError("window length must match the coefficient count")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    for _ in range(n_steps):
        nxt = -np.dot(coeffs, window)
        window[:-1] = window[1:]
        window[-1] = nxt
    return nxt


def vector_hankel_system(samples: np.ndarray, order: int) -> tuple:
    """Stacked recursion system for vector samples (columns of `samples`).

    Block m contributes rows [y(m) ... y(m + N - 1)] and rhs y(N + m);
    with exactly N + 1 columns this is the single-block system Y p = y(N).
    """
    mat = np.asarray(samples)
    if mat.ndim != 2:
        raise ValueError("samples must be a matrix with one column per time step")
    k = mat.shape[1]
    if order < 1:
        raise ValueError("order must be at least 1")
    if k < order + 1:
        raise ValueError(f"need at least {order + 1} sample vectors, got {k}")
    blocks = [mat[:, m:m + order] for m in range(k - order)]
    rhs = [mat[:, order + m] for m in range(k - order)]
    return np.vstack(blocks), np.concatenate(rhs)


def vector_prony_fit(samples: np.ndarray, order: int | None = None, solver=None) -> np.ndarray:
    """Shared recursion coefficients for a matrix of sample vectors.

    samples has one column per time step; order defaults to one less than
    the column count, reproducing the plain p = -pinv(Y) @ y(N) fit.
    """
    mat = np.asarray(samples)
    if order is None:
        order = mat.shape[1] - 1
    solver = solver or negated_pinv_solver
    y_mat, rhs = vector_hankel_system(mat, order)
    return solver(y_mat, rhs)


def vector_prony_predict(samples, n_steps: int, order: int | None = None,
                         solver=None, return_all: bool = False):
    """Predict a vector sequence n_steps past its last sample.

    samples: matrix with columns y(t_0)..y(t_L) (a SampleTrack is also
    accepted and stacked via .vectors()).  One recursion of the given
    order (default L) is fitted across all coordinates, then applied
    n_steps times with the window sliding over its own predictions.
    Returns the final predicted vector, or all n_steps predictions when
    return_all is set.
    """
    if hasattr(samples, "vectors"):
        samples = samples.vectors()
    mat = np.asarray(samples, dtype=complex)
    if mat.ndim != 2 or mat.shape[1] < 2:
        raise ValueError("need a matrix with at least two sample columns")
    horizon = mat.shape[1] - 1
    if order is None:
        order = horizon
    if not 1 <= order <= horizon:
        raise ValueError("order must lie in [1, number of samples - 1]")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    coeffs = vector_prony_fit(mat, order=order, solver=solver)
    window = mat[:, mat.shape[1] - order:].copy()
    preds = []
    for _ in range(n_steps):
        nxt = -(window @ coeffs)
        window[:, :-1] = window[:, 1:]
        window[:, -1] = nxt
        preds.append(nxt)
    return preds if return_all else preds[-1]
