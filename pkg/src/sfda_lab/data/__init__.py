from .benchmark import class_means, generate_benchmark, generate_universal
from .dataset import (
    Dataset,
    LabelOracle,
    TargetView,
    load_dataset,
    save_dataset,
)
from .pretrain import linear_probe_accuracy, minibatch_indices, pretrain

__all__ = [
    "Dataset",
    "LabelOracle",
    "TargetView",
    "class_means",
    "generate_benchmark",
    "generate_universal",
    "linear_probe_accuracy",
    "load_dataset",
    "minibatch_indices",
    "pretrain",
    "save_dataset",
]
