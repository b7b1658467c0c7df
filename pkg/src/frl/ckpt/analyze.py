"""Per-head spectral and balance diagnostics for attention weights."""

import csv
import io
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from ..spectra import DEFAULT_THRESHOLD, nuclear_norm, spectrum_report
from .layout import head_weights

HEADS_COLUMNS = (
    "layer",
    "head",
    "pseudo_rank_qk",
    "pseudo_rank_vp",
    "nuclear_qk",
    "frobenius_half_sum_qk",
    "nuclear_vp",
    "frobenius_half_sum_vp",
    "row_norm_deviation_qk",
    "row_norm_deviation_vp",
)
SCATTER_COLUMNS = ("layer", "head", "index", "x", "y")
NORMS_COLUMNS = ("layer", "head", "pair", "nuclear", "frobenius_half_sum")


@dataclass(frozen=True)
class HeadReport:
    """Diagnostics of one head.

    ``rows_qk[i] = (||row_i(W_Q)||^2, ||row_i(W_K)||^2)`` and
    ``rows_vp[i] = (||row_i(W_V)||^2, ||col_i(P)||^2)``.
    """

    layer: int
    head: int
    spectrum_qk: object
    spectrum_vp: object
    rows_qk: np.ndarray
    rows_vp: np.ndarray
    frobenius_half_sum_qk: float
    nuclear_qk: float
    frobenius_half_sum_vp: float
    nuclear_vp: float

    @property
    def pseudo_rank_qk(self):
        return self.spectrum_qk.pseudo_rank

    @property
    def pseudo_rank_vp(self):
        return self.spectrum_vp.pseudo_rank

    @property
    def row_norm_deviation_qk(self):
        return row_norm_deviation(self.rows_qk)

    @property
    def row_norm_deviation_vp(self):
        return row_norm_deviation(self.rows_vp)


def row_norm_deviation(pairs):
    """Mean of ``|x - y| / ((x + y) / 2)`` over pairs; pairs with ``x = y = 0`` count as 0."""
    pairs = np.asarray(pairs, dtype=np.float64)
    x, y = pairs[:, 0], pairs[:, 1]
    mean = 0.5 * (x + y)
    dev = np.divide(np.abs(x - y), mean, out=np.zeros_like(mean), where=mean > 0)
    return float(dev.mean())


def head_report(w_q, w_k, w_v, p, layer=0, head=0, threshold=DEFAULT_THRESHOLD):
    qk = w_k.T @ w_q
    vp = p @ w_v
    rows_qk = np.column_stack([np.sum(w_q * w_q, axis=1), np.sum(w_k * w_k, axis=1)])
    rows_vp = np.column_stack([np.sum(w_v * w_v, axis=1), np.sum(p * p, axis=0)])
    return HeadReport(
        layer=layer,
        head=head,
        spectrum_qk=spectrum_report(qk, threshold),
        spectrum_vp=spectrum_report(vp, threshold),
        rows_qk=rows_qk,
        rows_vp=rows_vp,
        frobenius_half_sum_qk=0.5 * float(np.sum(w_q * w_q) + np.sum(w_k * w_k)),
        nuclear_qk=nuclear_norm(qk),
        frobenius_half_sum_vp=0.5 * float(np.sum(w_v * w_v) + np.sum(p * p)),
        nuclear_vp=nuclear_norm(vp),
    )


def attention_products(archive, layout, layer, head, threshold=DEFAULT_THRESHOLD):
    """Report for one head: spectra of ``W_K^T W_Q`` and ``P W_V`` plus the balance pairs."""
    w = head_weights(archive, layout, layer, head)
    return head_report(w.w_q, w.w_k, w.w_v, w.p, layer, head, threshold)


def _num(x):
    return format(float(x), ".17g")


def _table(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def render_reports(reports):
    """File name -> CSV text for a list of HeadReports."""
    heads, sqk, svp, norms = [], [], [], []
    for r in reports:
        heads.append(
            [
                r.layer,
                r.head,
                _num(r.pseudo_rank_qk),
                _num(r.pseudo_rank_vp),
                _num(r.nuclear_qk),
                _num(r.frobenius_half_sum_qk),
                _num(r.nuclear_vp),
                _num(r.frobenius_half_sum_vp),
                _num(r.row_norm_deviation_qk),
                _num(r.row_norm_deviation_vp),
            ]
        )
        for i, (x, y) in enumerate(r.rows_qk):
            sqk.append([r.layer, r.head, i, _num(x), _num(y)])
        for i, (x, y) in enumerate(r.rows_vp):
            svp.append([r.layer, r.head, i, _num(x), _num(y)])
        norms.append([r.layer, r.head, "qk", _num(r.nuclear_qk), _num(r.frobenius_half_sum_qk)])
        norms.append([r.layer, r.head, "vp", _num(r.nuclear_vp), _num(r.frobenius_half_sum_vp)])
    return {
        "heads.csv": _table(HEADS_COLUMNS, heads),
        "scatter_qk.csv": _table(SCATTER_COLUMNS, sqk),
        "scatter_vp.csv": _table(SCATTER_COLUMNS, svp),
        "norms.csv": _table(NORMS_COLUMNS, norms),
    }


@dataclass(frozen=True)
class CheckpointAnalysis:
    reports: list
    paths: dict


def analyze_checkpoint(archive, layout, threshold=DEFAULT_THRESHOLD, out_dir=None):
    """Analyze every (layer, head); write the four CSVs only if all heads succeed."""
    reports = [
        attention_products(archive, layout, layer, head, threshold)
        for layer in range(layout.n_layers)
        for head in range(layout.n_heads)
    ]
    paths = {}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        staged = []
        try:
            for name, text in render_reports(reports).items():
                fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
                staged.append((tmp, os.path.join(out_dir, name)))
        except BaseException:
            for tmp, _ in staged:
                os.unlink(tmp)
            raise
        for tmp, final in staged:
            os.replace(tmp, final)
            paths[os.path.basename(final)] = final
    return CheckpointAnalysis(reports=reports, paths=paths)


def read_csv_table(path):
    """Parse one of the emitted CSVs into (header, rows of strings)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    width = len(rows[0])
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
    return rows[0], rows[1:]
