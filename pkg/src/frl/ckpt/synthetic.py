"""Build small archives with known balance properties, for tests and demos."""

import numpy as np

from ..factorized import balanced_factors_from
from .layout import AttentionLayout

KINDS = ("balanced", "random", "scaled_k")


def synthetic_head(d_model, d_head, rng, kind="balanced"):
    """Return ``(w_q, w_k, w_v, p)`` for one head.

    ``balanced``: both products are balanced factorizations of random
    rank-``d_head`` targets. ``random``: i.i.d. Gaussian entries.
    ``scaled_k``: random ``W_Q`` with ``W_K = 2 W_Q``.
    """
    if kind == "balanced":
        def pair():
            t = rng.standard_normal((d_model, d_head)) @ rng.standard_normal((d_head, d_model))
            f = balanced_factors_from(t, d_head)
            return f.a, f.b

        x, y = pair()  # W_K^T W_Q = x y^T
        w_k, w_q = x.T, y.T
        p, y2 = pair()  # P W_V = p y2^T
        w_v = y2.T
        return w_q, w_k, w_v, p
    if kind == "random":
        s = 1.0 / np.sqrt(d_model)
        return tuple(rng.normal(0.0, s, shape) for shape in [(d_head, d_model)] * 3 + [(d_model, d_head)])
    if kind == "scaled_k":
        w_q = rng.standard_normal((d_head, d_model))
        w_v = rng.standard_normal((d_head, d_model))
        p = rng.standard_normal((d_model, d_head))
        return w_q, 2.0 * w_q, w_v, p
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


def synthetic_archive(n_layers=2, n_heads=2, d_model=8, d_head=4, kind="balanced", seed=0, dtype="F64"):
    """Tensors (name -> (array, dtype)) in the per-layer stacked layout, plus that layout."""
    rng = np.random.default_rng(seed)
    layout = AttentionLayout(
        d_model=d_model,
        d_head=d_head,
        n_heads=n_heads,
        n_layers=n_layers,
        q="layers.{layer}.attn.q_proj.weight",
        k="layers.{layer}.attn.k_proj.weight",
        v="layers.{layer}.attn.v_proj.weight",
        o="layers.{layer}.attn.o_proj.weight",
    )
    tensors = {}
    for layer in range(n_layers):
        heads = [synthetic_head(d_model, d_head, rng, kind) for _ in range(n_heads)]
        for key, idx in (("q", 0), ("k", 1), ("v", 2)):
            tensors[getattr(layout, key).format(layer=layer)] = (np.vstack([h[idx] for h in heads]), dtype)
        tensors[layout.o.format(layer=layer)] = (np.hstack([h[3] for h in heads]), dtype)
    return tensors, layout
