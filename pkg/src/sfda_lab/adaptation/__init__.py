from .baseline import adapt_baseline
from .engine import (
    AdaptationState,
    adapt,
    check_compatible,
    mixup_phase,
    run_epoch,
    student_phase,
)
from .metrics import METRIC_COLUMNS, EpochMetrics, Evaluation, MetricsLog, load_metrics

__all__ = [
    "METRIC_COLUMNS",
    "AdaptationState",
    "EpochMetrics",
    "Evaluation",
    "MetricsLog",
    "adapt",
    "adapt_baseline",
    "check_compatible",
    "load_metrics",
    "mixup_phase",
    "run_epoch",
    "student_phase",
]
