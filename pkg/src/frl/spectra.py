"""SVD, Schatten powers and the pseudo-rank of a spectrum."""

from dataclasses import dataclass

import numpy as np

from .kernels import MAX_SWEEPS, jacobi_svd

CLAMP_RTOL = 1e-12
DEFAULT_THRESHOLD = 0.95


class SVDConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SVDResult:
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class SpectrumReport:
    singular_values: np.ndarray
    nuclear: float
    frobenius: float
    pseudo_rank: float
    threshold: float

    def to_dict(self):
        return {
            "singular_values": [float(x) for x in self.singular_values],
            "nuclear": self.nuclear,
            "frobenius": self.frobenius,
            "pseudo_rank": self.pseudo_rank,
            "threshold": self.threshold,
        }


def as_matrix(m, name="matrix"):
    """Validate and return ``m`` as a finite, non-empty 2-D float64 array."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite matrix")
    return arr


def svd(m):
    """Thin SVD ``m = u @ diag(s) @ v.T`` with ``s`` sorted non-increasing."""
    a = as_matrix(m)
    transposed = a.shape[0] < a.shape[1]
    work = np.ascontiguousarray(a.T if transposed else a)
    u, s, v, sweeps = jacobi_svd(work)
    if sweeps < 0:
        raise SVDConvergenceError(f"svd did not converge after {MAX_SWEEPS} sweeps")
    if transposed:
        u, v = v, u
    return SVDResult(u=u, s=s, v=v)


def clamp_spectrum(s, rtol=CLAMP_RTOL, atol=0.0):
    """Zero out singular values at or below ``max(rtol * s[0], atol)``.

    Floating-point residue in directions that have converged to zero must not
    count towards rank.
    """
    s = np.array(s, dtype=np.float64)
    if s.size == 0:
        return s
    cut = max(rtol * s[0], atol)
    s[s <= cut] = 0.0
    return s


def singular_values(m, clamp=True, atol=0.0):
    s = svd(m).s
    return clamp_spectrum(s, atol=atol) if clamp else s


def schatten_power(m, p):
    """Sum of ``s_i ** p`` over the singular values (``p=1`` is the nuclear norm)."""
    if not p > 0:
        raise ValueError(f"Schatten exponent must be positive, got {p}")
    s = singular_values(m)
    return float(np.sum(s[s > 0] ** p))


def nuclear_norm(m):
    return schatten_power(m, 1.0)


def pseudo_rank(s, threshold=DEFAULT_THRESHOLD):
    """Fraction k/n of leading singular values holding ``threshold`` of their sum.

    The all-zero spectrum has pseudo-rank 0.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("invalid spectrum")
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    if not np.all(np.isfinite(s)) or np.any(s < 0) or np.any(np.diff(s) > 0):
        raise ValueError("invalid spectrum")
    total = s.sum()
    if total == 0.0:
        return 0.0
    frac = np.cumsum(s) / total
    # roundoff in the cumulative sum must not push the last entry below 1
    frac[-1] = 1.0
    k = int(np.searchsorted(frac, threshold, side="left")) + 1
    return k / s.size


def spectrum_report(m, threshold=DEFAULT_THRESHOLD, atol=0.0):
    s = singular_values(m, atol=atol)
    return SpectrumReport(
        singular_values=s,
        nuclear=float(s.sum()),
        frobenius=float(np.sqrt(np.sum(s * s))),
        pseudo_rank=pseudo_rank(s, threshold),
        threshold=float(threshold),
    )
