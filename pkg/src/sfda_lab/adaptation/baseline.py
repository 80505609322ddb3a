"""Naive self-training: retrain on every pseudo-label, no curriculum."""

from ..config.models import AdaptationConfig
from ..curriculum import pseudo_label, unfiltered_split
from ..data import TargetView
from ..errors import UsageError
from ..model import ModelParams
from ..numerics import RandomSource
from ..utils.logging import get_logger
from .engine import BATCH_STREAM, check_target, make_optimizer, student_phase
from .metrics import EpochMetrics, Evaluation, MetricsLog

logger = get_logger(__name__)


def adapt_baseline(
    source: ModelParams,
    target_view: TargetView,
    cfg: AdaptationConfig,
    evaluation: Evaluation | None = None,
    epochs: int | None = None,
) -> tuple[ModelParams, MetricsLog]:
    """Each epoch pseudo-label all targets with the current model and train on them.

    Uses the same loss, sub-epoch budget and batch stream as the student phase
    of :func:`~sfda_lab.adaptation.engine.adapt`, with no filtering, mixup,
    fusion or re-initialisation.
    """
    check_target(source, target_view)
    n_epochs = cfg.epochs if epochs is None else epochs
    if n_epochs < 0:
        raise UsageError("epochs must be non-negative")

    rng = RandomSource(cfg.seed)
    params = source
    log = MetricsLog()
    for n in range(1, n_epochs + 1):
        pl = pseudo_label(params, target_view)
        split = unfiltered_split(pl)
        result = student_phase(
            params,
            target_view,
            split,
            pl.hard,
            cfg,
            make_optimizer(cfg),
            rng.child(BATCH_STREAM).child(n),
        )
        params = result.params
        row = EpochMetrics(
            epoch=n,
            beta=1.0,
            r=split.r,
            tt_size=split.tt_size,
            ut_size=split.ut_size,
            loss_std=result.loss,
        )
        if evaluation is not None:
            evaluation.fill(row, params, target_view.inputs, pl, split)
        log.append(row)
        logger.info("Baseline epoch complete", epoch=n, accuracy=row.accuracy)
    return params, log
