"""Where each head's W_Q, W_K, W_V and P live inside an archive."""

import json
from dataclasses import asdict, dataclass, fields

import numpy as np


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class AttentionLayout:
    """Name templates plus dimensions.

    ``q``/``k``/``v``/``o`` may contain ``{layer}`` and optionally ``{head}``.
    Without ``{head}`` a tensor holds every head: q/k/v stack heads as row
    blocks of ``d_head`` (shape ``n_heads*d_head x d_model``) and o stacks
    them as column blocks (``d_model x n_heads*d_head``). With ``fused_qkv``
    the ``qkv`` template names one tensor whose row blocks are all q heads,
    then all k heads, then all v heads. ``transposed`` means every stored
    matrix is the transpose of that convention.
    """

    d_model: int
    d_head: int
    n_heads: int
    n_layers: int
    q: str = ""
    k: str = ""
    v: str = ""
    o: str = ""
    qkv: str = ""
    fused_qkv: bool = False
    transposed: bool = False

    def __post_init__(self):
        for name in ("d_model", "d_head", "n_heads", "n_layers"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise LayoutError(f"{name} must be a positive integer, got {value!r}")
        if self.d_head > self.d_model:
            raise LayoutError(f"d_head={self.d_head} exceeds d_model={self.d_model}")
        needed = ("qkv", "o") if self.fused_qkv else ("q", "k", "v", "o")
        for name in needed:
            template = getattr(self, name)
            if not isinstance(template, str) or not template:
                raise LayoutError(f"template {name!r} is required")
        if self.fused_qkv and "{head}" in self.qkv:
            raise LayoutError("a fused qkv template cannot contain {head}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise LayoutError(f"unknown layout field {unknown[0]!r}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise LayoutError(str(exc)) from exc


def load_layout(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise LayoutError(f"cannot read layout {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise LayoutError("layout must be a JSON object")
    return AttentionLayout.from_dict(data)


@dataclass(frozen=True)
class HeadWeights:
    w_q: np.ndarray  # d_head x d_model
    w_k: np.ndarray
    w_v: np.ndarray
    p: np.ndarray  # d_model x d_head


def _fetch(archive, template, layer, head):
    name = template.format(layer=layer, head=head)
    if name not in archive:
        raise KeyError(f"missing tensor {name!r}")
    m = archive.get(name)
    if m.ndim != 2:
        raise ValueError(f"tensor {name!r} has shape {m.shape}, expected a matrix")
    return name, m


def _rows(layout, archive, template, layer, head, block_offset=0, blocks=None):
    """Row block of a q/k/v-style tensor for this head, as d_head x d_model."""
    name, m = _fetch(archive, template, layer, head)
    if layout.transposed:
        m = m.T
    dh, dm = layout.d_head, layout.d_model
    if "{head}" in template:
        if m.shape != (dh, dm):
            raise ValueError(f"tensor {name!r} has shape {m.shape}, expected {(dh, dm)}")
        return m
    blocks = layout.n_heads if blocks is None else blocks
    if m.shape != (blocks * dh, dm):
        raise ValueError(f"tensor {name!r} has shape {m.shape}, expected {(blocks * dh, dm)}")
    start = (block_offset + head) * dh
    return m[start : start + dh]


def _cols(layout, archive, template, layer, head):
    name, m = _fetch(archive, template, layer, head)
    if layout.transposed:
        m = m.T
    dh, dm = layout.d_head, layout.d_model
    if "{head}" in template:
        if m.shape != (dm, dh):
            raise ValueError(f"tensor {name!r} has shape {m.shape}, expected {(dm, dh)}")
        return m
    if m.shape != (dm, layout.n_heads * dh):
        raise ValueError(f"tensor {name!r} has shape {m.shape}, expected {(dm, layout.n_heads * dh)}")
    return m[:, head * dh : (head + 1) * dh]


def head_weights(archive, layout, layer, head):
    if not 0 <= layer < layout.n_layers:
        raise ValueError(f"layer {layer} out of range [0, {layout.n_layers})")
    if not 0 <= head < layout.n_heads:
        raise ValueError(f"head {head} out of range [0, {layout.n_heads})")
    if layout.fused_qkv:
        h = layout.n_heads
        w_q = _rows(layout, archive, layout.qkv, layer, head, 0, 3 * h)
        w_k = _rows(layout, archive, layout.qkv, layer, head, h, 3 * h)
        w_v = _rows(layout, archive, layout.qkv, layer, head, 2 * h, 3 * h)
    else:
        w_q = _rows(layout, archive, layout.q, layer, head)
        w_k = _rows(layout, archive, layout.k, layer, head)
        w_v = _rows(layout, archive, layout.v, layer, head)
    p = _cols(layout, archive, layout.o, layer, head)
    return HeadWeights(w_q=w_q, w_k=w_k, w_v=w_v, p=p)
