"""Differentiable losses on W, factor gradients, and the L2 / nuclear objective pair."""

from dataclasses import dataclass

import numpy as np

from .factorized import (
    DeepChain,
    Direct,
    ElementwiseProduct,
    Factorization,
    frobenius_half_sum,
    product,
)
from .spectra import as_matrix, nuclear_norm, schatten_power


class Loss:
    """A loss ``L(W)`` with its closed-form gradient ``dL/dW``."""

    def value(self, w):
        raise NotImplementedError

    def gradient(self, w):
        raise NotImplementedError

    def describe(self):
        return {"kind": type(self).__name__}


def _check_shape(w, expected, what):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != expected:
        raise ValueError(f"{what}: W has shape {w.shape}, expected {expected}")
    return w


class MatrixRegression(Loss):
    """``scale * ||W - D||_F^2``."""

    def __init__(self, d, scale=0.5):
        if not scale > 0:
            raise ValueError(f"scale must be positive, got {scale}")
        self.d = as_matrix(d, "d")
        self.scale = float(scale)

    def value(self, w):
        r = _check_shape(w, self.d.shape, "regression") - self.d
        return self.scale * float(np.sum(r * r))

    def gradient(self, w):
        return 2.0 * self.scale * (_check_shape(w, self.d.shape, "regression") - self.d)

    def is_diagonal_target(self):
        d = self.d
        return d.shape[0] == d.shape[1] and np.array_equal(d, np.diag(np.diag(d)))

    def describe(self):
        return {"kind": "regression", "target": self.d.tolist(), "scale": self.scale}


class WhitenedRegression(Loss):
    """Linear regression written through its second moments.

    The value is ``0.5 Tr(W Sxx W^T) - Tr(W Syx^T)``; the data constant
    ``0.5 Tr(Y Y^T)`` is dropped, so only gradients are meaningful in absolute
    terms.
    """

    def __init__(self, sigma_yx, sigma_xx):
        self.sigma_yx = as_matrix(sigma_yx, "sigma_yx")
        self.sigma_xx = as_matrix(sigma_xx, "sigma_xx")
        sxx = self.sigma_xx
        if sxx.shape[0] != sxx.shape[1]:
            raise ValueError(f"sigma_xx must be square, got {sxx.shape}")
        if np.max(np.abs(sxx - sxx.T)) > 1e-9:
            raise ValueError("sigma_xx is not symmetric")
        if self.sigma_yx.shape[1] != sxx.shape[0]:
            raise ValueError(f"sigma_yx {self.sigma_yx.shape} does not match sigma_xx {sxx.shape}")

    def value(self, w):
        w = _check_shape(w, self.sigma_yx.shape, "whitened regression")
        return 0.5 * float(np.sum((w @ self.sigma_xx) * w)) - float(np.sum(w * self.sigma_yx))

    def gradient(self, w):
        w = _check_shape(w, self.sigma_yx.shape, "whitened regression")
        return w @ self.sigma_xx - self.sigma_yx

    def describe(self):
        return {"kind": "whitened", "sigma_yx": self.sigma_yx.tolist(), "sigma_xx": self.sigma_xx.tolist()}


class MaskedCompletion(Loss):
    """``0.5 * ||mask * (W - D)||_F^2`` over the observed entries."""

    def __init__(self, d, mask):
        self.d = as_matrix(d, "d")
        mask = as_matrix(mask, "mask")
        if mask.shape != self.d.shape:
            raise ValueError(f"mask shape {mask.shape} differs from target shape {self.d.shape}")
        if not np.all((mask == 0) | (mask == 1)):
            raise ValueError("mask entries must be 0 or 1")
        self.mask = mask

    def value(self, w):
        r = self.mask * (_check_shape(w, self.d.shape, "masked completion") - self.d)
        return 0.5 * float(np.sum(r * r))

    def gradient(self, w):
        return self.mask * (_check_shape(w, self.d.shape, "masked completion") - self.d)

    def describe(self):
        return {"kind": "masked_completion", "target": self.d.tolist(), "mask": self.mask.tolist()}


class AffineDistance(Loss):
    """Squared distance from the flattened W to the hyperplane ``u.w = c``."""

    def __init__(self, u, c):
        u = np.asarray(u, dtype=np.float64).ravel()
        uu = float(u @ u)
        if uu == 0.0 or not np.all(np.isfinite(u)):
            raise ValueError("hyperplane normal u must be finite and non-zero")
        self.u = u
        self.c = float(c)
        self._uu = uu

    def _flat(self, w):
        w = np.asarray(w, dtype=np.float64)
        if w.size != self.u.size:
            raise ValueError(f"affine distance: W has {w.size} entries, expected {self.u.size}")
        return w.ravel()

    def value(self, w):
        r = float(self.u @ self._flat(w)) - self.c
        return r * r / (2.0 * self._uu)

    def gradient(self, w):
        w = np.asarray(w, dtype=np.float64)
        r = float(self.u @ self._flat(w)) - self.c
        return (r / self._uu * self.u).reshape(w.shape)

    def l2_closest_point(self):
        return self.c / self._uu * self.u

    def l1_closest_point(self):
        """Minimizer of ``||w||_1`` on the hyperplane (ties broken by lowest index)."""
        i = int(np.argmax(np.abs(self.u)))
        w = np.zeros_like(self.u)
        w[i] = self.c / self.u[i]
        return w

    def describe(self):
        return {"kind": "affine_distance", "u": self.u.tolist(), "c": self.c}


def make_matrix_regression(d, scale=0.5):
    return MatrixRegression(d, scale)


def make_whitened_regression(sigma_yx, sigma_xx):
    return WhitenedRegression(sigma_yx, sigma_xx)


def make_masked_completion(d, mask):
    return MaskedCompletion(d, mask)


def make_affine_distance(u=(1.0, 2.0), c=1.0):
    return AffineDistance(u, c)


@dataclass(frozen=True)
class FactorGradients:
    grad_a: np.ndarray
    grad_b: np.ndarray


def param_gradients(model, loss, lam):
    """Gradients of ``L(W) + lam/2 * sum ||P||^2`` w.r.t. every parameter of ``model``."""
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    w = product(model)
    g = loss.gradient(w)
    if isinstance(model, Factorization):
        a, b = model.a, model.b
        return [g @ b + lam * a, g.T @ a + lam * b]
    if isinstance(model, DeepChain):
        layers = model.layers
        n = len(layers)
        # prefix[l] = A_1..A_l, suffix[l] = A_l..A_L (1-based semantics, 0-based lists)
        prefix = [None] * n
        suffix = [None] * n
        prefix[0] = layers[0]
        for i in range(1, n):
            prefix[i] = prefix[i - 1] @ layers[i]
        suffix[n - 1] = layers[n - 1]
        for i in range(n - 2, -1, -1):
            suffix[i] = layers[i] @ suffix[i + 1]
        grads = []
        for i in range(n):
            left = g if i == 0 else prefix[i - 1].T @ g
            grads.append((left if i == n - 1 else left @ suffix[i + 1].T) + lam * layers[i])
        return grads
    if isinstance(model, ElementwiseProduct):
        return [g * model.b + lam * model.a, g * model.a + lam * model.b]
    if isinstance(model, Direct):
        return [g + lam * model.w]
    raise TypeError(f"unsupported model {type(model).__name__}")


def factor_gradients(f, loss, lam):
    grad_a, grad_b = param_gradients(f, loss, lam)
    return FactorGradients(grad_a=grad_a, grad_b=grad_b)


@dataclass(frozen=True)
class RegularizedPair:
    l2_value: float
    nuclear_value: float
    gap: float


def regularizer_values(model, w=None):
    """``(factor penalty, matching low-rank penalty)`` before multiplying by lambda.

    Pair: ``(||A||^2+||B||^2)/2`` and ``||W||_*``. Chain of depth L:
    ``sum ||A_l||^2 / 2`` and ``L/2 * ||W||_{2/L}^{2/L}``. Elementwise product:
    ``(||a||^2+||b||^2)/2`` and ``||w||_1``. A direct W has no factorization,
    so both entries are ``||W||^2/2``.
    """
    if w is None:
        w = product(model)
    if isinstance(model, Factorization):
        return frobenius_half_sum(model), nuclear_norm(w)
    if isinstance(model, DeepChain):
        depth = model.depth
        half = 0.5 * sum(float(np.sum(x * x)) for x in model.layers)
        return half, 0.5 * depth * schatten_power(w, 2.0 / depth)
    if isinstance(model, ElementwiseProduct):
        half = 0.5 * (float(np.sum(model.a**2)) + float(np.sum(model.b**2)))
        return half, float(np.sum(np.abs(w)))
    if isinstance(model, Direct):
        half = 0.5 * float(np.sum(w * w))
        return half, half
    raise TypeError(f"unsupported model {type(model).__name__}")


def evaluate_both_losses(f, loss, lam):
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    w = product(f)
    base = loss.value(w)
    fro, low_rank = regularizer_values(f, w)
    l2 = base + lam * fro
    nuc = base + lam * low_rank
    return RegularizedPair(l2_value=l2, nuclear_value=nuc, gap=l2 - nuc)


__all__ = [
    "AffineDistance",
    "FactorGradients",
    "Loss",
    "MaskedCompletion",
    "MatrixRegression",
    "RegularizedPair",
    "WhitenedRegression",
    "evaluate_both_losses",
    "factor_gradients",
    "make_affine_distance",
    "make_masked_completion",
    "make_matrix_regression",
    "make_whitened_regression",
    "param_gradients",
    "regularizer_values",
]
