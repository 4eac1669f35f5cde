"""Margin-history filtering and reweighting for training under label noise."""

from ._core import (
    ConfigError,
    DomainError,
    InvariantError,
    MarvelError,
    ShapeError,
    StateError,
    adaptive_weights,
    apply_removal,
    batches,
    binary_margin,
    corrupt,
    detect_warmup,
    gen_ring_vs_blob,
    gen_two_gaussians,
    kfold,
    label_precision_recall,
    load_dataset,
    margin_summary,
    margins,
    memorization_ratio,
    multiclass_margin,
    reset_nonzero,
    run,
    tune_wait,
)

__version__ = "0.1.0"
