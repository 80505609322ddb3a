"""Scheduled parameter fusion between the student and the running source model."""

from collections.abc import Sequence
from dataclasses import dataclass, field

from ..errors import UsageError
from .params import Layer, ModelParams


@dataclass(frozen=True)
class BetaSchedule:
    """Linearly increasing fusion ratios ``beta_n = beta0 + n * delta``, n = 1..N."""

    beta0: float
    beta_end: float
    epochs: int
    delta: float = field(init=False)
    values: tuple[float, ...] = field(init=False)

    def __post_init__(self) -> None:
        delta = (self.beta_end - self.beta0) / self.epochs
        values = [self.beta0 + n * delta for n in range(1, self.epochs)]
        # the terminal ratio is pinned so rounding never drifts past beta_end
        values.append(self.beta_end)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "values", tuple(min(1.0, max(0.0, v)) for v in values))

    def beta(self, epoch: int) -> float:
        """Ratio used at 1-based ``epoch``."""
        if not 1 <= epoch <= self.epochs:
            raise UsageError(f"epoch {epoch} outside 1..{self.epochs}")
        return self.values[epoch - 1]


def make_beta_schedule(beta0: float, beta_end: float, epochs: int) -> BetaSchedule:
    """Build the schedule, validating ``0 <= beta0 <= beta_end <= 1`` and N >= 1."""
    if not 0.0 <= beta0 <= beta_end <= 1.0:
        raise UsageError(
            f"need 0 <= beta0 <= beta_end <= 1, got beta0={beta0}, beta_end={beta_end}"
        )
    if epochs < 1:
        raise UsageError(f"schedule needs at least one epoch, got {epochs}")
    return BetaSchedule(beta0, beta_end, epochs)


def fuse_parameters(
    student: ModelParams, source_prev: ModelParams, beta_n: float
) -> ModelParams:
    """``theta_n = beta_n * theta_c + (1 - beta_n) * theta_(n-1)``, element-wise."""
    if not 0.0 <= beta_n <= 1.0:
        raise UsageError(f"beta_n must lie in [0, 1], got {beta_n}")
    if beta_n == 0.0:
        student.require_compatible(source_prev)
        return source_prev
    if beta_n == 1.0:
        student.require_compatible(source_prev)
        return student
    keep = 1.0 - beta_n
    return student.zip_map(source_prev, lambda s, p: beta_n * s + keep * p)


def init_student(
    universal_extractor: Sequence[Layer],
    source_classifier: Layer,
    activation: str = "tanh",
) -> ModelParams:
    """Student ``{g_*, h_s}``.

    Layers are immutable, so the student shares no writable state with either
    parent.
    """
    extractor = tuple(universal_extractor)
    out_dim = extractor[-1].out_dim if extractor else None
    if out_dim is not None and out_dim != source_classifier.in_dim:
        raise UsageError(
            f"extractor outputs {out_dim} features but the classifier expects "
            f"{source_classifier.in_dim}"
        )
    return ModelParams(
        tuple(Layer(layer.weight, layer.bias) for layer in extractor),
        Layer(source_classifier.weight, source_classifier.bias),
        activation,  # type: ignore[arg-type]
    )
