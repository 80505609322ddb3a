from .functions import (
    FloatArray,
    IntArray,
    cosine_distance,
    cosine_distance_matrix,
    cross_entropy,
    entropy,
    one_hot,
    softmax,
)
from .random import GENERATOR_ID, RandomSource, sample_beta, sample_betas

__all__ = [
    "GENERATOR_ID",
    "FloatArray",
    "IntArray",
    "RandomSource",
    "cosine_distance",
    "cosine_distance_matrix",
    "cross_entropy",
    "entropy",
    "one_hot",
    "sample_beta",
    "sample_betas",
    "softmax",
]
