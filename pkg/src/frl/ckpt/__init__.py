from .analyze import (
    CheckpointAnalysis,
    HeadReport,
    analyze_checkpoint,
    attention_products,
    head_report,
    read_csv_table,
    render_reports,
    row_norm_deviation,
)
from .archive import (
    ArchiveError,
    TensorArchive,
    TensorEntry,
    load_tensor_archive,
    parse_tensor_archive,
    save_tensor_archive,
    serialize_tensor_archive,
)
from .layout import AttentionLayout, LayoutError, head_weights, load_layout
from .synthetic import synthetic_archive, synthetic_head

__all__ = [
    "ArchiveError",
    "AttentionLayout",
    "CheckpointAnalysis",
    "HeadReport",
    "LayoutError",
    "TensorArchive",
    "TensorEntry",
    "analyze_checkpoint",
    "attention_products",
    "head_report",
    "head_weights",
    "load_layout",
    "load_tensor_archive",
    "parse_tensor_archive",
    "read_csv_table",
    "render_reports",
    "row_norm_deviation",
    "save_tensor_archive",
    "serialize_tensor_archive",
    "synthetic_archive",
    "synthetic_head",
]
