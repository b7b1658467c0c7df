"""Closed-form reference solutions used to check the optimizers from the outside."""

from dataclasses import dataclass

import numpy as np

from .spectra import as_matrix, svd


@dataclass(frozen=True)
class EquilibriumSpectrum:
    input_singular_values: np.ndarray
    lam: float
    output_singular_values: np.ndarray


def two_layer_equilibrium(s, lam):
    """Stable equilibrium spectrum ``(s_i - lam)_+`` of the whitened two-layer linear net.

    Requires distinct positive ``s`` and ``lam > 0``.
    """
    s = np.asarray(s, dtype=np.float64).ravel()
    if s.size == 0 or np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise ValueError("assumption violated: singular values must be positive")
    if np.unique(s).size != s.size:
        raise ValueError("assumption violated: singular values must be distinct")
    if not lam > 0:
        raise ValueError("assumption violated: lambda must be positive")
    return EquilibriumSpectrum(
        input_singular_values=s,
        lam=float(lam),
        output_singular_values=np.maximum(s - lam, 0.0),
    )


def single_matrix_equilibrium(s, lam):
    """Equilibrium ``s / (1 + lam)`` of the same problem with an unfactorized W."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    return np.asarray(s, dtype=np.float64) / (1.0 + lam)


def svt_minimizer(d, lam, scale=0.5):
    """Global minimizer of ``scale * ||W - D||^2 + lam * ||W||_*``.

    Soft-thresholds the singular values of D at ``lam / (2 * scale)``.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if not scale > 0:
        raise ValueError("scale must be positive")
    d = as_matrix(d, "d")
    res = svd(d)
    shrunk = np.maximum(res.s - lam / (2.0 * scale), 0.0)
    return (res.u * shrunk) @ res.v.T


def adamw_l2_equivalent(lambda_wd, epsilon):
    """L2 strength (under the ``lam/2 ||W||^2`` convention) matching AdamW's equilibria.

    For small weights the AdamW fixed point solves ``eps * lambda_wd * W = -grad``,
    the stationarity condition of ``L(W) + (eps * lambda_wd / 2) ||W||^2``.
    Written with a ``lam ||W||^2`` penalty instead, the same strength reads
    ``eps * lambda_wd / 2``.
    """
    if lambda_wd < 0 or epsilon < 0:
        raise ValueError("lambda_wd and epsilon must be non-negative")
    return float(epsilon) * float(lambda_wd)


def fit_exponential_rate(series, window=None):
    """Least-squares slope of ``-log(series)`` against the index.

    ``window`` is a ``(start, stop)`` index pair (stop exclusive) or ``None``
    for the whole series. ``series`` may also be a pair ``(x, y)`` of sample
    positions and values, in which case the slope is taken w.r.t. ``x`` and the
    window selects positions ``start <= x < stop``.
    """
    if isinstance(series, tuple) and len(series) == 2:
        x = np.asarray(series[0], dtype=np.float64)
        y = np.asarray(series[1], dtype=np.float64)
        if window is not None:
            sel = (x >= window[0]) & (x < window[1])
            x, y = x[sel], y[sel]
    else:
        y = np.asarray(series, dtype=np.float64)
        x = np.arange(y.size, dtype=np.float64)
        if window is not None:
            x = x[window[0] : window[1]]
            y = y[window[0] : window[1]]
    if y.size < 3:
        raise ValueError(f"need at least 3 points to fit a rate, got {y.size}")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise ValueError("cannot fit log")
    slope = np.polyfit(x, np.log(y), 1)[0]
    return float(-slope)
