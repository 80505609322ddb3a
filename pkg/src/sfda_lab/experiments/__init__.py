from .manifest import RunManifest, file_digest, load_manifest
from .runner import (
    VARIANTS,
    Benchmark,
    PretrainedPair,
    ablated,
    build_benchmark,
    pretrain_pair,
    run_seed,
    run_seeds,
    sweep,
    sweep_checks,
)

__all__ = [
    "VARIANTS",
    "Benchmark",
    "PretrainedPair",
    "RunManifest",
    "ablated",
    "build_benchmark",
    "file_digest",
    "load_manifest",
    "pretrain_pair",
    "run_seed",
    "run_seeds",
    "sweep",
    "sweep_checks",
]
