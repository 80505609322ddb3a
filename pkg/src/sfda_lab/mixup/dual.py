"""Feature-space Intra-MixUP and Inter-MixUP with a trust-restricted ratio.

A :class:`MixedBatch` keeps the parents' raw inputs when they are available, so
:func:`mix_loss` can recompute the parent features with the current student and
send the gradient back through the extractor of both parents.
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from ..errors import UsageError
from ..model import LossSpec, ModelParams, classify, extractor_backward, forward
from ..model.network import linear_backward, logit_loss
from ..numerics import FloatArray, IntArray, RandomSource, one_hot
from ..utils.logging import get_logger

logger = get_logger(__name__)

MixKind = Literal["intra", "inter"]

ALPHA_HAT_FLOOR = 1e-3


@dataclass(frozen=True)
class RestrictedAlpha:
    """``alpha_hat = base_alpha * r**2``, floored before sampling.

    ``raw`` is the unclamped product.
    """

    base_alpha: float
    r: float
    raw: float
    alpha_hat: float


def restricted_alpha(alpha: float, r: float) -> RestrictedAlpha:
    if not alpha > 0:
        raise UsageError(f"alpha must be positive, got {alpha}")
    if not 0.0 <= r <= 1.0:
        raise UsageError(f"r must lie in [0, 1], got {r}")
    raw = alpha * r * r
    return RestrictedAlpha(alpha, r, raw, max(raw, ALPHA_HAT_FLOOR))


@dataclass(frozen=True, eq=False)
class MixedBatch:
    """Mixtures ``lam * a + (1 - lam) * b`` of parent features and one-hot labels.

    For ``kind == "inter"`` parent ``a`` is always the trustworthy sample.
    """

    mixed_features: FloatArray
    mixed_labels: FloatArray
    lambdas: FloatArray
    kind: MixKind
    first_labels: IntArray
    second_labels: IntArray
    first_inputs: FloatArray | None = None
    second_inputs: FloatArray | None = None

    def __len__(self) -> int:
        return int(self.lambdas.shape[0])

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    @property
    def has_inputs(self) -> bool:
        return self.first_inputs is not None and self.second_inputs is not None

    def lambda_mean(self) -> float:
        return float(np.mean(self.lambdas)) if len(self) else float("nan")

    def subset(self, rows: np.ndarray) -> "MixedBatch":
        """The pairs at ``rows``, parents included."""
        return MixedBatch(
            mixed_features=self.mixed_features[rows],
            mixed_labels=self.mixed_labels[rows],
            lambdas=self.lambdas[rows],
            kind=self.kind,
            first_labels=self.first_labels[rows],
            second_labels=self.second_labels[rows],
            first_inputs=None if self.first_inputs is None else self.first_inputs[rows],
            second_inputs=None if self.second_inputs is None else self.second_inputs[rows],
        )

    @classmethod
    def empty(cls, kind: MixKind, dim: int, num_classes: int) -> "MixedBatch":
        return cls(
            mixed_features=np.zeros((0, dim)),
            mixed_labels=np.zeros((0, num_classes)),
            lambdas=np.zeros(0),
            kind=kind,
            first_labels=np.zeros(0, dtype=np.int64),
            second_labels=np.zeros(0, dtype=np.int64),
        )


def _mix(
    kind: MixKind,
    lambdas: FloatArray,
    features: tuple[FloatArray, FloatArray],
    labels: tuple[IntArray, IntArray],
    inputs: tuple[FloatArray | None, FloatArray | None],
    num_classes: int,
) -> MixedBatch:
    lam = lambdas[:, None]
    first, second = features
    mixed = lam * first + (1.0 - lam) * second
    targets = lam * one_hot(labels[0], num_classes) + (1.0 - lam) * one_hot(
        labels[1], num_classes
    )
    return MixedBatch(
        mixed_features=mixed,
        mixed_labels=targets,
        lambdas=lambdas,
        kind=kind,
        first_labels=np.asarray(labels[0], dtype=np.int64),
        second_labels=np.asarray(labels[1], dtype=np.int64),
        first_inputs=inputs[0],
        second_inputs=inputs[1],
    )


def _draw_lambdas(
    alpha: float, size: int, rng: RandomSource, forced: float | None
) -> FloatArray:
    if forced is not None:
        if not 0.0 <= forced <= 1.0:
            raise UsageError("forced lambda must lie in [0, 1]")
        return np.full(size, float(forced))
    return rng.betas(alpha, size)


def _take(arr: FloatArray | None, idx: IntArray) -> FloatArray | None:
    return None if arr is None else np.asarray(arr)[idx]


def intra_mix(
    features_tt: FloatArray,
    labels_tt: IntArray,
    alpha: float,
    rng: RandomSource,
    num_classes: int,
    inputs_tt: FloatArray | None = None,
    max_pairs: int | None = None,
    lam: float | None = None,
) -> MixedBatch:
    """Pair trustworthy samples with a seeded permutation of themselves.

    ``lam`` fixes every mixing ratio and is meant for tests.
    """
    features_tt = np.asarray(features_tt, dtype=np.float64)
    labels_tt = np.asarray(labels_tt, dtype=np.int64)
    n = features_tt.shape[0]
    if n < 2:
        logger.info("Intra-MixUP skipped", reason="fewer than two trustworthy samples")
        return MixedBatch.empty("intra", features_tt.shape[1], num_classes)

    m = n if max_pairs is None else min(n, max_pairs)
    first = rng.permutation(n)[:m]
    second = rng.permutation(n)[:m]
    lambdas = _draw_lambdas(alpha, m, rng, lam)
    return _mix(
        "intra",
        lambdas,
        (features_tt[first], features_tt[second]),
        (labels_tt[first], labels_tt[second]),
        (_take(inputs_tt, first), _take(inputs_tt, second)),
        num_classes,
    )


def inter_mix(
    features_tt: FloatArray,
    labels_tt: IntArray,
    features_ut: FloatArray,
    labels_ut: IntArray,
    alpha_hat: RestrictedAlpha,
    rng: RandomSource,
    num_classes: int,
    inputs_tt: FloatArray | None = None,
    inputs_ut: FloatArray | None = None,
    lam: float | None = None,
) -> MixedBatch:
    """Mix trustworthy with untrustworthy samples.

    Ratios are drawn from Beta(alpha_hat, alpha_hat) and folded to
    ``max(lam, 1 - lam)`` so the trustworthy parent always weighs at least 0.5.
    A forced ``lam`` is folded the same way.
    """
    features_tt = np.asarray(features_tt, dtype=np.float64)
    features_ut = np.asarray(features_ut, dtype=np.float64)
    n_tt, n_ut = features_tt.shape[0], features_ut.shape[0]
    if n_tt == 0 or n_ut == 0:
        logger.info("Inter-MixUP skipped", tt=n_tt, ut=n_ut)
        return MixedBatch.empty("inter", features_tt.shape[1], num_classes)

    m = min(n_tt, n_ut)
    first = rng.permutation(n_tt)[:m]
    second = rng.permutation(n_ut)[:m]
    raw = _draw_lambdas(alpha_hat.alpha_hat, m, rng, lam)
    lambdas = np.maximum(raw, 1.0 - raw)
    return _mix(
        "inter",
        lambdas,
        (features_tt[first], features_ut[second]),
        (np.asarray(labels_tt)[first], np.asarray(labels_ut)[second]),
        (_take(inputs_tt, first), _take(inputs_ut, second)),
        num_classes,
    )


def mix_loss(student: ModelParams, mb: MixedBatch) -> tuple[float, ModelParams]:
    """Mean soft-label cross-entropy of the classifier on mixed features.

    With parent inputs on the batch, parent features are recomputed by the
    current student extractor and the extractor receives ``lam * dF`` and
    ``(1 - lam) * dF`` through the two parents. Without them only the classifier
    gets a gradient.
    """
    if mb.is_empty:
        return 0.0, student.zeros_like()
    if mb.mixed_features.shape[1] != student.feature_dim:
        raise UsageError(
            f"mixed features have dim {mb.mixed_features.shape[1]}, "
            f"student expects {student.feature_dim}"
        )
    if mb.mixed_labels.shape[1] != student.num_classes:
        raise UsageError("mixed labels do not match the student's class count")

    lam = mb.lambdas[:, None]
    if mb.has_inputs:
        rec_a = forward(student, mb.first_inputs)
        rec_b = forward(student, mb.second_inputs)
        mixed = lam * rec_a.features + (1.0 - lam) * rec_b.features
    else:
        mixed = mb.mixed_features

    _, probs = classify(student, mixed)
    loss, d_logits = logit_loss(probs, LossSpec(mb.mixed_labels))
    classifier_grad, d_mixed = linear_backward(mixed, d_logits, student.classifier)

    if mb.has_inputs:
        grads_a = extractor_backward(student, rec_a, lam * d_mixed)
        grads_b = extractor_backward(student, rec_b, (1.0 - lam) * d_mixed)
        extractor_grads = tuple(
            a.zip_map(b, np.add) for a, b in zip(grads_a, grads_b, strict=True)
        )
    else:
        extractor_grads = student.zeros_like().extractor
    return loss, ModelParams(extractor_grads, classifier_grad, student.activation)
