"""Community recommendation with community-aware social encoders."""

from ._core import (
    Dataset,
    Measure,
    Model,
    TrainingConfig,
    cross_validate,
    evaluate_embeddings,
    load_checkpoint,
    load_dataset,
    make_dataset,
    ndcg_at_k,
    planted_partition,
    rank_candidates,
    recall_at_k,
    save_checkpoint,
    split,
    structure_report,
    train,
)

__all__ = [
    "Dataset",
    "Measure",
    "Model",
    "TrainingConfig",
    "cross_validate",
    "evaluate_embeddings",
    "load_checkpoint",
    "load_dataset",
    "make_dataset",
    "ndcg_at_k",
    "planted_partition",
    "rank_candidates",
    "recall_at_k",
    "save_checkpoint",
    "split",
    "structure_report",
    "train",
]
