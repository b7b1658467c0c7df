"""Sweep execution: one training run per lambda, traces on disk, one summary per sweep."""

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..factorized import Factorization, product
from ..objectives import MatrixRegression
from ..optim import DivergenceError, run_training
from ..oracles import fit_exponential_rate, svt_minimizer, two_layer_equilibrium
from ..spectra import singular_values
from .config import ExperimentConfig
from .traceio import emit_trace

SUMMARY_CSV_COLUMNS = (
    "cell",
    "lambda",
    "seed",
    "status",
    "steps_run",
    "final_loss",
    "final_reg_gap",
    "final_balance",
    "final_pseudo_rank",
    "fitted_rate",
    "expected_rate",
    "oracle_max_abs_dev",
    "singular_values",
)


@dataclass
class ExperimentResult:
    rows: list
    trace_paths: list
    summary_json: str
    summary_csv: str

    @property
    def diverged(self):
        return any(r["status"] != "ok" for r in self.rows)

    @property
    def exit_code(self):
        return 2 if self.diverged else 0


def trace_filename(index, lam):
    return f"trace_{index:03d}_lambda_{lam:.6g}.csv"


def _fitted_rate(trace, window):
    steps = trace.column("step")
    gaps = trace.column("balance_gap_fro")
    try:
        return fit_exponential_rate((steps, gaps), window), None
    except ValueError as exc:
        return None, str(exc)


def _expected_rate(config, opt, lam_l2):
    if opt.kind != "gd" or lam_l2 <= 0:
        return None
    x = 1.0 - 2.0 * opt.step_size * lam_l2
    return -math.log(x) if x > 0 else None


def _oracle(loss, model, lam_l2, final_s):
    if not (isinstance(loss, MatrixRegression) and loss.is_diagonal_target() and isinstance(model, Factorization)):
        return None
    svt = singular_values(svt_minimizer(loss.d, lam_l2, loss.scale))
    out = {
        "svt_singular_values": svt.tolist(),
        "svt_max_abs_dev": float(np.max(np.abs(svt - final_s))),
    }
    if loss.scale == 0.5:
        try:
            eq = two_layer_equilibrium(np.abs(np.diag(loss.d)), lam_l2)
            expected = np.sort(eq.output_singular_values)[::-1]
            out["two_layer_singular_values"] = expected.tolist()
            out["two_layer_max_abs_dev"] = float(np.max(np.abs(expected - final_s[: expected.size])))
        except ValueError as exc:
            out["two_layer_skipped"] = str(exc)
    return out


def run_cell(config_dict, index):
    """Train one cell and write its trace file; returns the summary row."""
    config = ExperimentConfig.from_dict(config_dict)
    lam = float(config.lambdas[index])
    seed = config.base_seed() + index
    rng = np.random.default_rng(seed)
    model = config.build_model(rng)
    loss = config.build_loss()
    lam_l2 = config.l2_strength(lam)
    opt = config.optimizer_config(index, lam)
    status, error = "ok", None
    try:
        trace = run_training(
            model,
            loss,
            lam_l2,
            opt,
            config.steps,
            record_every=config.record_every,
            threshold=config.threshold,
            stop_tol=config.stop_tol,
        )
    except DivergenceError as exc:
        trace = exc.trace
        status, error = "diverged", str(exc)
    path = os.path.join(config.output_dir, trace_filename(index, lam))
    emit_trace(trace, path)
    last = trace.records[-1]
    final_s = np.asarray(last.singular_values)
    rate, rate_note = _fitted_rate(trace, tuple(config.rate_window))
    with np.errstate(over="ignore", invalid="ignore"):
        final_w = product(trace.final_model)
    row = {
        "cell": index,
        "lambda": lam,
        "lambda_role": config.lambda_role,
        "l2_strength": lam_l2,
        "weight_decay": opt.weight_decay,
        "seed": seed,
        "status": status,
        "error": error,
        "steps_run": int(last.step),
        "trace_file": os.path.basename(path),
        "final_loss": last.loss_value,
        "final_l2_loss": last.l2_value,
        "final_nuclear_loss": last.nuclear_value,
        "final_reg_gap": last.reg_gap,
        "final_balance": last.balance_gap_fro,
        "final_pseudo_rank": last.pseudo_rank,
        "final_singular_values": list(last.singular_values),
        "final_w": final_w.tolist(),
        "fitted_rate": rate,
        "fitted_rate_note": rate_note,
        "expected_rate": _expected_rate(config, opt, lam_l2),
        "rate_window": list(config.rate_window),
        "init": dict(config.init),
        "optimizer": opt.to_dict(),
        "loss_scale": getattr(loss, "scale", None),
        "oracle": _oracle(loss, model, lam_l2, final_s) if status == "ok" else None,
    }
    return row


def _summary_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_CSV_COLUMNS)
    for r in rows:
        oracle = r["oracle"] or {}
        vals = []
        for col in SUMMARY_CSV_COLUMNS:
            if col == "oracle_max_abs_dev":
                v = oracle.get("svt_max_abs_dev")
            elif col == "singular_values":
                v = " ".join(format(s, ".17g") for s in r["final_singular_values"])
            else:
                v = r[col]
            if isinstance(v, float):
                v = format(v, ".17g")
            vals.append("" if v is None else str(v))
        writer.writerow(vals)
    return buf.getvalue()


def run_experiment(config):
    """Run every lambda cell of ``config``; traces and summaries land in ``config.output_dir``."""
    if not isinstance(config, ExperimentConfig):
        config = ExperimentConfig.from_dict(config)
    try:
        os.makedirs(config.output_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {config.output_dir}: {exc}") from exc
    data = config.to_dict()
    indices = range(len(config.lambdas))
    if config.workers > 1 and len(config.lambdas) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(run_cell, [data] * len(indices), indices))
    else:
        rows = [run_cell(data, i) for i in indices]
    rows.sort(key=lambda r: r["cell"])
    json_path = os.path.join(config.output_dir, "summary.json")
    csv_path = os.path.join(config.output_dir, "summary.csv")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump({"config": data, "cells": rows}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_summary_csv(rows))
    return ExperimentResult(
        rows=rows,
        trace_paths=[os.path.join(config.output_dir, r["trace_file"]) for r in rows],
        summary_json=json_path,
        summary_csv=csv_path,
    )
