from .prototypes import (
    PrototypeSet,
    PseudoLabelSet,
    compute_prototypes,
    curriculum_labels,
    pseudo_label,
    refine_labels,
)
from .split import SubsetSplit, save_split_dump, split_trustworthy, unfiltered_split

__all__ = [
    "PrototypeSet",
    "PseudoLabelSet",
    "SubsetSplit",
    "compute_prototypes",
    "curriculum_labels",
    "pseudo_label",
    "refine_labels",
    "save_split_dump",
    "split_trustworthy",
    "unfiltered_split",
]
