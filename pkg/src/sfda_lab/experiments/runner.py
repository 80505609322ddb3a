"""End-to-end pipelines: generate, pretrain, adapt, and ablation sweeps."""

import asyncio
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, TypeVar, get_args

import numpy as np
import pandas as pd

from ..adaptation import Evaluation, MetricsLog, adapt, adapt_baseline
from ..config.models import AdaptationConfig, LabConfig, ShiftConfig
from ..data import (
    Dataset,
    generate_benchmark,
    generate_universal,
    linear_probe_accuracy,
    pretrain,
    save_dataset,
)
from ..errors import UsageError
from ..model import ModelParams, predict
from ..numerics import RandomSource
from ..utils.logging import get_logger

logger = get_logger(__name__)

Variant = Literal["full", "no_filtering", "no_mixup", "no_colearning", "baseline"]
VARIANTS: tuple[str, ...] = get_args(Variant)
ABLATIONS = {
    "filtering": "enable_filtering",
    "mixup": "enable_mixup",
    "colearning": "enable_colearning",
}

SWEEP_COLUMNS = [
    "seed",
    "variant",
    "source_accuracy",
    "final_accuracy",
    "r_first",
    "r_final",
    "hard_noise_first",
    "hard_noise_final",
]

T = TypeVar("T")

_UNIVERSAL_STREAM = 0
_SOURCE_STREAM = 1
_SCRATCH_STREAM = 2


@dataclass(frozen=True, eq=False)
class Benchmark:
    source: Dataset
    target: Dataset
    universal: Dataset


@dataclass(frozen=True, eq=False)
class PretrainedPair:
    """Source model and the universal model whose extractor seeds every student."""

    source: ModelParams
    universal: ModelParams


@dataclass(frozen=True, eq=False)
class VariantResult:
    seed: int
    variant: str
    model: ModelParams
    metrics: MetricsLog
    source_accuracy: float

    def summary(self) -> dict[str, float | int | str]:
        first, final = self.metrics.rows[0], self.metrics.rows[-1]
        return {
            "seed": self.seed,
            "variant": self.variant,
            "source_accuracy": self.source_accuracy,
            "final_accuracy": final.accuracy,
            "r_first": first.r,
            "r_final": final.r,
            "hard_noise_first": first.hard_class_noise_rate,
            "hard_noise_final": final.hard_class_noise_rate,
        }


def with_seed(cfg: LabConfig, seed: int) -> LabConfig:
    """Copy of ``cfg`` whose sampling, pretraining and adaptation use ``seed``."""
    return cfg.model_copy(
        update={
            "shift": cfg.shift.model_copy(update={"seed": seed}),
            "pretrain": cfg.pretrain.model_copy(update={"seed": seed}),
            "adaptation": cfg.adaptation.model_copy(update={"seed": seed}),
        }
    )


def ablated(cfg: AdaptationConfig, module: str) -> AdaptationConfig:
    """``cfg`` with one of ``filtering``, ``mixup`` or ``colearning`` disabled."""
    if module not in ABLATIONS:
        raise UsageError(f"unknown ablation {module!r}; choose from {sorted(ABLATIONS)}")
    return cfg.model_copy(update={ABLATIONS[module]: False})


def build_benchmark(shift: ShiftConfig) -> Benchmark:
    rng = RandomSource(shift.seed)
    source, target = generate_benchmark(shift, shift.n_source, shift.n_target, rng.child(0))
    universal = generate_universal(shift, shift.n_universal, rng.child(1))
    return Benchmark(source, target, universal)


def save_benchmark(bench: Benchmark, out_dir: Path) -> dict[str, Path]:
    return {
        name: save_dataset(getattr(bench, name), out_dir / f"{name}.csv")
        for name in ("source", "target", "universal")
    }


def pretrain_universal(universal: Dataset, cfg: LabConfig) -> ModelParams:
    rng = RandomSource(cfg.pretrain.seed).child(_UNIVERSAL_STREAM)
    return pretrain(universal, cfg.model, cfg.pretrain, rng)


def pretrain_source(
    source: Dataset, cfg: LabConfig, universal: ModelParams | None = None
) -> ModelParams:
    """Source model, starting from the universal extractor when one is given.

    Sharing the starting extractor keeps the source classifier meaningful on
    top of the universal features that seed every student.
    """
    rng = RandomSource(cfg.pretrain.seed).child(_SOURCE_STREAM)
    init = universal.extractor if universal is not None else None
    return pretrain(source, cfg.model, cfg.pretrain, rng, init_extractor=init)


def pretrain_pair(bench: Benchmark, cfg: LabConfig) -> PretrainedPair:
    universal = pretrain_universal(bench.universal, cfg)
    return PretrainedPair(pretrain_source(bench.source, cfg, universal), universal)


def evaluation_for(target: Dataset, shift: ShiftConfig) -> Evaluation:
    return Evaluation(target.oracle(), tuple(shift.hard_class_indices))


def run_variant(
    variant: str,
    pair: PretrainedPair,
    target: Dataset,
    cfg: LabConfig,
    seed: int,
) -> VariantResult:
    evaluation = evaluation_for(target, cfg.shift)
    view = target.unlabeled()
    adapt_cfg = cfg.adaptation
    if variant == "baseline":
        model, log = adapt_baseline(pair.source, view, adapt_cfg, evaluation)
    else:
        if variant != "full":
            adapt_cfg = ablated(adapt_cfg, variant.removeprefix("no_"))
        model, log = adapt(pair.source, pair.universal.extractor, view, adapt_cfg, evaluation)
    source_acc = evaluation.oracle.accuracy(predict(pair.source, target.inputs))
    return VariantResult(seed, variant, model, log, source_acc)


def run_seed(
    cfg: LabConfig, seed: int, variants: Iterable[str] = VARIANTS
) -> list[VariantResult]:
    """Full pipeline for one seed, one adaptation per requested variant."""
    seeded = with_seed(cfg, seed)
    bench = build_benchmark(seeded.shift)
    pair = pretrain_pair(bench, seeded)
    return [run_variant(v, pair, bench.target, seeded, seed) for v in variants]


def probe_comparison(cfg: LabConfig, seed: int) -> dict[str, float]:
    """Target linear-probe accuracy of universal versus scratch-source extractors."""
    seeded = with_seed(cfg, seed)
    bench = build_benchmark(seeded.shift)
    universal = pretrain_universal(bench.universal, seeded)
    scratch = pretrain(
        bench.source,
        seeded.model,
        seeded.pretrain,
        RandomSource(seeded.pretrain.seed).child(_SCRATCH_STREAM),
    )
    return {
        "seed": seed,
        "universal_probe": linear_probe_accuracy(universal, bench.target),
        "source_probe": linear_probe_accuracy(scratch, bench.target),
    }


async def gather_seeds(fn: Callable[[int], T], seeds: Iterable[int]) -> list[T]:
    """Run ``fn(seed)`` for every seed in worker threads; results keep seed order."""
    return list(await asyncio.gather(*(asyncio.to_thread(fn, s) for s in seeds)))


def run_seeds(fn: Callable[[int], T], seeds: Iterable[int]) -> list[T]:
    return asyncio.run(gather_seeds(fn, seeds))


def sweep(
    cfg: LabConfig, seeds: Iterable[int], variants: Iterable[str] = VARIANTS
) -> pd.DataFrame:
    """One summary row per (seed, variant)."""
    chosen = list(variants)
    unknown = set(chosen) - set(VARIANTS)
    if unknown:
        raise UsageError(f"unknown variants {sorted(unknown)}")
    per_seed = run_seeds(lambda s: run_seed(cfg, s, chosen), seeds)
    rows = [result.summary() for results in per_seed for result in results]
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def sweep_checks(frame: pd.DataFrame) -> dict[str, bool | int | float | str]:
    """Directional comparisons over a sweep table.

    Keys that need a variant absent from ``frame`` are omitted.
    """
    table = frame.pivot(index="seed", columns="variant", values="final_accuracy")
    checks: dict[str, bool | int | float | str] = {"seeds": int(table.shape[0])}
    if "full" not in table:
        return checks
    full = frame[frame.variant == "full"].set_index("seed")
    checks["beats_source"] = int(np.sum(full.final_accuracy > full.source_accuracy))
    checks["r_grows"] = int(np.sum(full.r_final > full.r_first))
    checks["hard_noise_drops"] = int(
        np.sum(full.hard_noise_final < full.hard_noise_first)
    )
    if "baseline" in table:
        checks["beats_baseline"] = int(np.sum(table["full"] > table["baseline"]))
        base = frame[frame.variant == "baseline"].set_index("seed")
        checks["baseline_noise_accumulates"] = int(
            np.sum(base.hard_noise_final >= base.hard_noise_first)
        )
    ablations = [f"no_{m}" for m in ABLATIONS if f"no_{m}" in table]
    if ablations:
        means = table.mean()
        drops = {name: float(means["full"] - means[name]) for name in ablations}
        checks["full_beats_ablations"] = all(d >= 0 for d in drops.values())
        checks["largest_drop"] = max(drops, key=lambda k: drops[k])
    return checks
