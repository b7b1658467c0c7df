"""Factor pairs ``W = A B^T`` and deep chains ``W = A_1 ... A_L``."""

from dataclasses import dataclass

import numpy as np

from .spectra import CLAMP_RTOL, as_matrix, nuclear_norm, schatten_power, svd


def _unchecked(cls, **values):
    """Rebuild a model from arrays already known to be valid (the optimizer hot path)."""
    obj = object.__new__(cls)
    for k, v in values.items():
        object.__setattr__(obj, k, v)
    return obj


@dataclass(frozen=True)
class Factorization:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.a, "a")
        b = as_matrix(self.b, "b")
        if a.shape[1] != b.shape[1]:
            raise ValueError(f"factor widths differ: a is {a.shape}, b is {b.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def shape(self):
        return (self.a.shape[0], self.b.shape[0])

    @property
    def rank_bound(self):
        return self.a.shape[1]

    @property
    def has_bottleneck(self):
        r = self.a.shape[1]
        return r <= self.a.shape[0] and r <= self.b.shape[0]

    @property
    def params(self):
        return (self.a, self.b)

    def with_params(self, params, check=True):
        a, b = params
        if not check and a.shape == self.a.shape and b.shape == self.b.shape:
            return _unchecked(Factorization, a=a, b=b)
        return Factorization(a, b)


@dataclass(frozen=True)
class DeepChain:
    layers: tuple

    def __post_init__(self):
        layers = tuple(as_matrix(x, f"layer {i}") for i, x in enumerate(self.layers))
        if len(layers) < 2:
            raise ValueError(f"a chain needs at least 2 layers, got {len(layers)}")
        for i in range(len(layers) - 1):
            if layers[i].shape[1] != layers[i + 1].shape[0]:
                raise ValueError(
                    f"layers {i} and {i + 1} are not conformable: "
                    f"{layers[i].shape} then {layers[i + 1].shape}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self):
        return len(self.layers)

    @property
    def shape(self):
        return (self.layers[0].shape[0], self.layers[-1].shape[1])

    @property
    def params(self):
        return self.layers

    def with_params(self, params, check=True):
        params = tuple(params)
        if not check and len(params) == len(self.layers) and all(p.shape == x.shape for p, x in zip(params, self.layers)):
            return _unchecked(DeepChain, layers=params)
        return DeepChain(params)


@dataclass(frozen=True)
class ElementwiseProduct:
    """Entry-wise product ``W = A * B``: every weight is a product of two scalars."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.a, "a")
        b = as_matrix(self.b, "b")
        if a.shape != b.shape:
            raise ValueError(f"factor shapes differ: {a.shape} vs {b.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def shape(self):
        return self.a.shape

    @property
    def params(self):
        return (self.a, self.b)

    def with_params(self, params, check=True):
        a, b = params
        if not check and a.shape == self.a.shape and b.shape == self.b.shape:
            return _unchecked(ElementwiseProduct, a=a, b=b)
        return ElementwiseProduct(a, b)


@dataclass(frozen=True)
class Direct:
    """An unfactorized weight matrix, for comparison runs."""

    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", as_matrix(self.w, "w"))

    @property
    def shape(self):
        return self.w.shape

    @property
    def params(self):
        return (self.w,)

    def with_params(self, params, check=True):
        (w,) = params
        if not check and w.shape == self.w.shape:
            return _unchecked(Direct, w=w)
        return Direct(w)


def product(f):
    """The matrix a model parametrizes: ``A B^T``, ``A_1 ... A_L``, ``A * B`` or ``W``."""
    if isinstance(f, Factorization):
        return f.a @ f.b.T
    if isinstance(f, DeepChain):
        return chain_product(f.layers)
    if isinstance(f, ElementwiseProduct):
        return f.a * f.b
    if isinstance(f, Direct):
        return f.w
    raise TypeError(f"unsupported model {type(f).__name__}")


def chain_product(layers):
    out = layers[0]
    for layer in layers[1:]:
        out = out @ layer
    return out


def balance_gap(f):
    """``A^T A - B^T B``; zero exactly when the pair is balanced."""
    return f.a.T @ f.a - f.b.T @ f.b


def frobenius_half_sum(f):
    return 0.5 * (float(np.sum(f.a * f.a)) + float(np.sum(f.b * f.b)))


def balanced_factors_from(w, r, rotation=None):
    """Balanced pair ``A = U sqrt(S) O^T``, ``B = V sqrt(S) O^T`` with ``A B^T = w``.

    ``rotation`` is the r-by-r orthogonal ``O`` (identity when omitted). Raises
    if ``w`` has more than ``r`` singular values above the clamp threshold.
    """
    w = as_matrix(w, "w")
    m, n = w.shape
    r = int(r)
    if r < 1 or r > min(m, n):
        raise ValueError(f"bottleneck r={r} must lie in [1, {min(m, n)}] for a {m}x{n} target")
    if rotation is None:
        rotation = np.eye(r)
    else:
        rotation = as_matrix(rotation, "rotation")
        if rotation.shape != (r, r):
            raise ValueError(f"rotation must be {r}x{r}, got {rotation.shape}")
        if np.linalg.norm(rotation.T @ rotation - np.eye(r)) > 1e-9:
            raise ValueError("rotation is not orthogonal")
    res = svd(w)
    s = res.s
    cut = CLAMP_RTOL * s[0]
    if np.count_nonzero(s > cut) > r:
        raise ValueError("rank exceeds bottleneck")
    root = np.sqrt(np.where(s > cut, s, 0.0)[:r])
    a = (res.u[:, :r] * root) @ rotation.T
    b = (res.v[:, :r] * root) @ rotation.T
    return Factorization(a, b)


@dataclass(frozen=True)
class GapBound:
    gap: float
    bound: float


def regularizer_gap_with_bound(f):
    """Distance between ``||A B^T||_*`` and ``(||A||^2 + ||B||^2)/2`` and its upper bound.

    The bound is ``sqrt(||A^T A - B^T B||_*) * (||A||_* + ||B||_*) / 2``.
    """
    gap = abs(nuclear_norm(product(f)) - frobenius_half_sum(f))
    q_nuc = nuclear_norm(balance_gap(f))
    bound = np.sqrt(q_nuc) * 0.5 * (nuclear_norm(f.a) + nuclear_norm(f.b))
    return GapBound(gap=float(gap), bound=float(bound))


@dataclass(frozen=True)
class ChainBalance:
    epsilon: float
    per_factor_gaps: np.ndarray
    bounds: np.ndarray
    side_condition: bool
    # None when the side condition fails and the bound does not apply
    bound_ok: object


def chain_imbalances(layers):
    """``A_l^T A_l - A_{l+1} A_{l+1}^T`` for each consecutive pair."""
    return [layers[i].T @ layers[i] - layers[i + 1] @ layers[i + 1].T for i in range(len(layers) - 1)]


def chain_epsilon(layers):
    return max(nuclear_norm(q) for q in chain_imbalances(layers))


def chain_balance_and_bound(c):
    if not isinstance(c, DeepChain):
        c = DeepChain(tuple(c))
    layers = c.layers
    depth = len(layers)
    eps = chain_epsilon(layers)
    schatten = schatten_power(chain_product(layers), 2.0 / depth)
    nucs = np.array([nuclear_norm(x) for x in layers])
    fro2 = np.array([float(np.sum(x * x)) for x in layers])
    gaps = np.abs(schatten - fro2)
    r = min(min(x.shape) for x in layers)
    bounds = r * nucs ** (depth - 1) * np.exp(2.0 / depth) * depth ** (4.0 / depth) * eps ** (1.0 / depth)
    side = bool(eps <= nucs.min() ** depth / depth**4)
    bound_ok = bool(np.all(gaps <= bounds)) if side else None
    return ChainBalance(
        epsilon=float(eps),
        per_factor_gaps=gaps,
        bounds=bounds,
        side_condition=side,
        bound_ok=bound_ok,
    )


def balanced_chain_from(w, depth, r=None):
    """Balanced chain ``U S^(1/L), S^(1/L), ..., S^(1/L) V^T`` whose product is ``w``.

    Inner layers are r-by-r (``r`` defaults to ``min(w.shape)``).
    """
    w = as_matrix(w, "w")
    if depth < 2:
        raise ValueError(f"depth must be at least 2, got {depth}")
    r = min(w.shape) if r is None else int(r)
    res = svd(w)
    s = res.s
    if np.count_nonzero(s > CLAMP_RTOL * s[0]) > r:
        raise ValueError("rank exceeds bottleneck")
    root = s[:r] ** (1.0 / depth)
    layers = [res.u[:, :r] * root]
    layers += [np.diag(root) for _ in range(depth - 2)]
    layers.append(root[:, None] * res.v[:, :r].T)
    return DeepChain(tuple(layers))
