"""CSV serialization of training traces."""

import csv
import io

from ..optim import Trace, TraceRecord

BASE_COLUMNS = ("step", "loss", "l2_loss", "nuclear_loss", "balance_gap_fro", "reg_gap", "pseudo_rank")
_ATTRS = ("loss_value", "l2_value", "nuclear_value", "balance_gap_fro", "reg_gap", "pseudo_rank")


def _num(x):
    return format(float(x), ".17g")


def header(k):
    return list(BASE_COLUMNS) + [f"s{i + 1}" for i in range(k)]


def trace_to_csv(trace, k=None):
    records = trace.records if isinstance(trace, Trace) else list(trace)
    if k is None:
        k = len(records[0].singular_values) if records else 0
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header(k))
    for r in sorted(records, key=lambda rec: rec.step):
        if len(r.singular_values) != k:
            raise ValueError(f"record at step {r.step} has {len(r.singular_values)} singular values, expected {k}")
        writer.writerow([str(int(r.step))] + [_num(getattr(r, a)) for a in _ATTRS] + [_num(s) for s in r.singular_values])
    return buf.getvalue()


def emit_trace(trace, path, k=None):
    """Write ``trace`` (a Trace or a list of records) as CSV; returns ``path``."""
    text = trace_to_csv(trace, k)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc
    return path


def parse_trace(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty trace file: missing header")
    head = rows[0]
    if tuple(head[: len(BASE_COLUMNS)]) != BASE_COLUMNS:
        raise ValueError(f"unexpected trace header {head[: len(BASE_COLUMNS)]}")
    k = len(head) - len(BASE_COLUMNS)
    if head[len(BASE_COLUMNS) :] != [f"s{i + 1}" for i in range(k)]:
        raise ValueError("singular value columns must be s1..sK")
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(head):
            raise ValueError(f"line {lineno}: expected {len(head)} fields, got {len(row)}")
        vals = [float(x) for x in row[1:]]
        records.append(
            TraceRecord(
                int(row[0]),
                *vals[: len(_ATTRS)],
                singular_values=tuple(vals[len(_ATTRS) :]),
            )
        )
    return records


def read_trace(path):
    """Parse a trace CSV back into a list of TraceRecord."""
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_trace(fh.read())


def read_columns(path):
    """Column name -> list of floats, for plotting."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    head = rows[0]
    cols = {name: [] for name in head}
    for row in rows[1:]:
        for name, value in zip(head, row):
            cols[name].append(float(value))
    return cols
