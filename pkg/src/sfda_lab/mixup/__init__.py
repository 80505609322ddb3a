from .dual import (
    MixedBatch,
    RestrictedAlpha,
    inter_mix,
    intra_mix,
    mix_loss,
    restricted_alpha,
)

__all__ = [
    "MixedBatch",
    "RestrictedAlpha",
    "inter_mix",
    "intra_mix",
    "mix_loss",
    "restricted_alpha",
]
