"""Curriculum adaptation loop: split, student training, Dual MixUP and fusion.

Each epoch ``n`` draws its mini-batch order from ``rng.child(1).child(n)`` and
its mixing pairs and ratios from ``rng.child(2).child(n)``. The student and
mixup phases share the batch stream and one optimizer, so a zero mix weight
makes the mixup phase indistinguishable from extra student sub-epochs.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config.models import AdaptationConfig
from ..curriculum import (
    PseudoLabelSet,
    SubsetSplit,
    curriculum_labels,
    pseudo_label,
    save_split_dump,
    split_trustworthy,
    unfiltered_split,
)
from ..curriculum.prototypes import UNREFINED
from ..data import TargetView, minibatch_indices
from ..errors import UsageError
from ..mixup import MixedBatch, inter_mix, intra_mix, mix_loss, restricted_alpha
from ..model import (
    BetaSchedule,
    Layer,
    LossSpec,
    ModelParams,
    Optimizer,
    fuse_parameters,
    init_student,
    loss_and_gradients,
    make_beta_schedule,
)
from ..model.network import extract_features
from ..numerics import IntArray, RandomSource, one_hot
from ..utils.logging import get_logger
from .metrics import EpochMetrics, Evaluation, MetricsLog

logger = get_logger(__name__)

BATCH_STREAM = 1
MIX_STREAM = 2


@dataclass
class AdaptationState:
    """Loop state after ``epoch`` completed epochs.

    ``initial`` is the source model, whose classifier (and extractor, without
    co-learning) seeds every student.
    """

    initial: ModelParams
    source_params: ModelParams
    schedule: BetaSchedule
    epoch: int = 0
    student_params: ModelParams | None = None
    split: SubsetSplit | None = None
    metrics: MetricsLog = field(default_factory=MetricsLog)


@dataclass
class PhaseResult:
    params: ModelParams
    loss: float = float("nan")
    mix_loss: float = float("nan")
    lambda_intra_mean: float = float("nan")
    lambda_inter_mean: float = float("nan")
    skipped: bool = False


def make_optimizer(cfg: AdaptationConfig) -> Optimizer:
    return Optimizer(cfg.optimizer, cfg.lr, cfg.weight_decay, cfg.momentum)


def _add_scaled(grads: ModelParams, extra: ModelParams, scale: float) -> ModelParams:
    return grads.zip_map(extra, lambda g, e: g + scale * e)


def fresh_student(
    state: AdaptationState, g_star: Sequence[Layer], cfg: AdaptationConfig
) -> ModelParams:
    """Student for the next epoch according to the co-learning flags."""
    prev = state.source_params
    if not cfg.reinit_student:
        return prev
    extractor = tuple(g_star) if cfg.enable_colearning else state.initial.extractor
    classifier = (
        prev.classifier if cfg.student_classifier_from_latest else state.initial.classifier
    )
    return init_student(extractor, classifier, prev.activation)


def label_and_split(
    model: ModelParams, target_view: TargetView, cfg: AdaptationConfig
) -> tuple[PseudoLabelSet, SubsetSplit, int]:
    """Pseudo-labels and ``D_tt``/``D_ut`` under ``model``; also the degenerate count."""
    if not cfg.enable_filtering:
        pl = pseudo_label(model, target_view)
        return pl, unfiltered_split(pl), 0
    pl, protos = curriculum_labels(model, target_view)
    return pl, split_trustworthy(pl, cfg.tau_norm), protos.num_degenerate


def untrusted_labels(pl: PseudoLabelSet, cfg: AdaptationConfig) -> IntArray:
    """Labels used for ``D_ut`` parents in Inter-MixUP."""
    if not cfg.inter_labels_refined or pl.refined is None:
        return pl.hard
    return np.where(pl.refined == UNREFINED, pl.hard, pl.refined)


def student_phase(
    student: ModelParams,
    target_view: TargetView,
    split: SubsetSplit,
    labels: IntArray,
    cfg: AdaptationConfig,
    optimizer: Optimizer,
    rng: RandomSource,
) -> PhaseResult:
    """``K_sub`` sub-epochs of ``gamma * CE + entropy`` on ``D_tt`` only.

    An empty ``D_tt`` skips the phase with a warning.
    """
    if split.tt_size == 0:
        logger.warning("Trustworthy subset is empty; student phase skipped")
        return PhaseResult(student, skipped=True)

    tt = split.trustworthy
    inputs = target_view.inputs[tt]
    targets = one_hot(np.asarray(labels)[tt], student.num_classes)
    losses = []
    for _ in range(cfg.sub_epochs):
        for idx in minibatch_indices(tt.size, cfg.batch_size, rng):
            spec = LossSpec.student(targets[idx], cfg.gamma)
            loss, grads = loss_and_gradients(student, inputs[idx], spec)
            student = optimizer.step(student, grads)
            losses.append(loss)
    return PhaseResult(student, loss=float(np.mean(losses)))


def _mixed_batches(
    student: ModelParams,
    target_view: TargetView,
    split: SubsetSplit,
    labels_tt: IntArray,
    labels_ut: IntArray,
    r: float,
    cfg: AdaptationConfig,
    rng: RandomSource,
) -> tuple[MixedBatch, MixedBatch]:
    features, _, _ = extract_features(student, target_view.inputs)
    tt, ut = split.trustworthy, split.untrustworthy
    k = student.num_classes
    intra = intra_mix(
        features[tt],
        labels_tt,
        cfg.alpha_intra,
        rng,
        k,
        inputs_tt=target_view.inputs[tt],
        max_pairs=cfg.max_intra_pairs,
    )
    inter = inter_mix(
        features[tt],
        labels_tt,
        features[ut],
        labels_ut,
        restricted_alpha(cfg.alpha_inter, r),
        rng,
        k,
        inputs_tt=target_view.inputs[tt],
        inputs_ut=target_view.inputs[ut],
    )
    return intra, inter


def mixup_phase(
    student: ModelParams,
    target_view: TargetView,
    split: SubsetSplit,
    pl: PseudoLabelSet,
    labels: IntArray,
    cfg: AdaptationConfig,
    optimizer: Optimizer,
    batch_rng: RandomSource,
    mix_rng: RandomSource,
) -> PhaseResult:
    """``K_mix`` sub-epochs of ``L_std + mu * (L_intra + L_inter)``.

    Pairs are redrawn at the start of every sub-epoch and spread evenly over
    that sub-epoch's ``D_tt`` mini-batches.
    """
    if not cfg.enable_mixup or cfg.mix_epochs == 0:
        return PhaseResult(student)
    if split.tt_size == 0:
        logger.info("Dual MixUP skipped", reason="empty trustworthy subset")
        return PhaseResult(student, skipped=True)

    tt = split.trustworthy
    labels_tt = np.asarray(labels)[tt]
    labels_ut = untrusted_labels(pl, cfg)[split.untrustworthy]
    inputs = target_view.inputs[tt]
    targets = one_hot(labels_tt, student.num_classes)
    std_losses: list[float] = []
    mix_losses: list[float] = []
    intra_lams: list[np.ndarray] = []
    inter_lams: list[np.ndarray] = []

    for _ in range(cfg.mix_epochs):
        batches = list(minibatch_indices(tt.size, cfg.batch_size, batch_rng))
        if cfg.mu > 0:
            intra, inter = _mixed_batches(
                student, target_view, split, labels_tt, labels_ut, split.r, cfg, mix_rng
            )
            intra_lams.append(intra.lambdas)
            inter_lams.append(inter.lambdas)
            intra_chunks = np.array_split(np.arange(len(intra)), len(batches))
            inter_chunks = np.array_split(np.arange(len(inter)), len(batches))

        for j, idx in enumerate(batches):
            spec = LossSpec.student(targets[idx], cfg.gamma)
            loss, grads = loss_and_gradients(student, inputs[idx], spec)
            std_losses.append(loss)
            if cfg.mu > 0:
                step_mix = 0.0
                for mb in (intra.subset(intra_chunks[j]), inter.subset(inter_chunks[j])):
                    if mb.is_empty:
                        continue
                    part, mix_grads = mix_loss(student, mb)
                    grads = _add_scaled(grads, mix_grads, cfg.mu)
                    step_mix += part
                mix_losses.append(step_mix)
            student = optimizer.step(student, grads)

    return PhaseResult(
        student,
        loss=float(np.mean(std_losses)),
        mix_loss=float(np.mean(mix_losses)) if mix_losses else float("nan"),
        lambda_intra_mean=_mean_of(intra_lams),
        lambda_inter_mean=_mean_of(inter_lams),
    )


def _mean_of(chunks: list[np.ndarray]) -> float:
    values = np.concatenate(chunks) if chunks else np.zeros(0)
    return float(np.mean(values)) if values.size else float("nan")


def run_epoch(
    state: AdaptationState,
    target_view: TargetView,
    g_star: Sequence[Layer],
    cfg: AdaptationConfig,
    rng: RandomSource,
    evaluation: Evaluation | None = None,
    split_dump_dir: Path | None = None,
) -> AdaptationState:
    """Advance ``state`` by one epoch: re-init, split, train, mix, fuse.

    Updates ``state`` in place and returns it.
    """
    n = state.epoch + 1
    prev = state.source_params
    student = fresh_student(state, g_star, cfg)
    optimizer = make_optimizer(cfg)
    batch_rng = rng.child(BATCH_STREAM).child(n)
    mix_rng = rng.child(MIX_STREAM).child(n)

    pl, split, degenerate = label_and_split(prev, target_view, cfg)
    labels = pl.hard
    if split_dump_dir is not None:
        save_split_dump(pl, split, split_dump_dir / f"epoch_{n:03d}.csv")

    phase_a = student_phase(student, target_view, split, labels, cfg, optimizer, batch_rng)
    phase_b = mixup_phase(
        phase_a.params, target_view, split, pl, labels, cfg, optimizer, batch_rng, mix_rng
    )
    student = phase_b.params

    beta = state.schedule.beta(n)
    if split.tt_size == 0 and cfg.skip_fusion_on_empty_split:
        logger.warning("Fusion skipped for empty trustworthy subset", epoch=n)
        fused = prev
    else:
        if split.tt_size == 0:
            logger.warning(
                "Fusing an untrained student; trustworthy subset is empty",
                epoch=n,
                beta=beta,
            )
        fused = fuse_parameters(student, prev, beta)

    row = EpochMetrics(
        epoch=n,
        beta=beta,
        r=split.r,
        tt_size=split.tt_size,
        ut_size=split.ut_size,
        loss_std=phase_a.loss,
        loss_mix=phase_b.mix_loss,
        lambda_intra_mean=phase_b.lambda_intra_mean,
        lambda_inter_mean=phase_b.lambda_inter_mean,
        alpha_hat=_alpha_hat(cfg, split.r),
        degenerate_prototypes=degenerate,
        student_skipped=phase_a.skipped,
    )
    if evaluation is not None:
        evaluation.fill(row, fused, target_view.inputs, pl, split)
    state.metrics.append(row)
    logger.info(
        "Epoch complete",
        epoch=n,
        beta=beta,
        r=split.r,
        accuracy=row.accuracy,
    )

    state.epoch = n
    state.student_params = student
    state.split = split
    state.source_params = fused
    return state


def _alpha_hat(cfg: AdaptationConfig, r: float) -> float:
    if not cfg.enable_mixup or cfg.mix_epochs == 0 or cfg.mu == 0:
        return float("nan")
    return restricted_alpha(cfg.alpha_inter, r).alpha_hat


def check_target(source: ModelParams, target_view: TargetView) -> None:
    """Raise :class:`UsageError` when the model and target data disagree on shapes."""
    if source.input_dim != target_view.input_dim:
        raise UsageError(
            f"source model expects {source.input_dim} inputs, "
            f"target has {target_view.input_dim}"
        )
    if source.num_classes != target_view.num_classes:
        raise UsageError(
            f"source model has {source.num_classes} classes, "
            f"target has {target_view.num_classes}"
        )


def check_compatible(
    source: ModelParams, g_star: Sequence[Layer], target_view: TargetView
) -> None:
    """Raise :class:`UsageError` when models and target data disagree on shapes."""
    check_target(source, target_view)
    extractor = tuple(g_star)
    dims = [layer.weight.shape for layer in extractor]
    if not extractor or extractor[0].in_dim != source.input_dim:
        raise UsageError(f"universal extractor {dims} does not accept the target inputs")
    if extractor[-1].out_dim != source.feature_dim:
        raise UsageError(
            f"universal extractor outputs {extractor[-1].out_dim} features, "
            f"source classifier expects {source.feature_dim}"
        )


def adapt(
    source: ModelParams,
    g_star: Sequence[Layer],
    target_view: TargetView,
    cfg: AdaptationConfig,
    evaluation: Evaluation | None = None,
    epochs: int | None = None,
    split_dump_dir: Path | None = None,
) -> tuple[ModelParams, MetricsLog]:
    """Adapt ``source`` to the unlabelled target domain.

    Args:
        source: The source model, epoch-0 parameters.
        g_star: Extractor layers of the universally pretrained model.
        target_view: Target inputs without labels.
        cfg: Adaptation hyperparameters and ablation flags.
        evaluation: Optional hidden-label context for metric columns.
        epochs: Overrides ``cfg.epochs``; zero returns ``source`` unchanged.
        split_dump_dir: When set, one split CSV per epoch is written there.

    Returns:
        The final fused model and the per-epoch metrics.
    """
    check_compatible(source, g_star, target_view)
    n_epochs = cfg.epochs if epochs is None else epochs
    if n_epochs < 0:
        raise UsageError("epochs must be non-negative")
    if n_epochs == 0:
        return source, MetricsLog()

    rng = RandomSource(cfg.seed)
    state = AdaptationState(
        initial=source,
        source_params=source,
        schedule=make_beta_schedule(cfg.beta0, cfg.beta_end, n_epochs),
    )
    logger.info(
        "Adaptation started",
        epochs=n_epochs,
        filtering=cfg.enable_filtering,
        mixup=cfg.enable_mixup,
        colearning=cfg.enable_colearning,
        seed=cfg.seed,
    )
    for _ in range(n_epochs):
        run_epoch(state, target_view, g_star, cfg, rng, evaluation, split_dump_dir)
    return state.source_params, state.metrics
