"""Pseudo-labels, soft-weighted class prototypes and nearest-prototype refinement."""

from dataclasses import dataclass, replace
from typing import Protocol

import numpy as np

from ..errors import ConfigurationError, UsageError
from ..model import ModelParams, forward
from ..numerics import FloatArray, IntArray, cosine_distance_matrix, entropy
from ..numerics.functions import NORM_EPS
from ..utils.logging import get_logger

logger = get_logger(__name__)

# prototypes whose total soft weight falls below this are unusable
MASS_EPS = 1e-8
UNREFINED = -1


class HasInputs(Protocol):
    @property
    def inputs(self) -> FloatArray: ...


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PseudoLabelSet:
    """Per-sample model outputs on the target domain.

    ``refined`` is ``None`` until :func:`refine_labels` has been applied. A refined
    value of ``-1`` marks a sample whose feature vector has zero norm.
    """

    soft: FloatArray
    hard: IntArray
    entropy_norm: FloatArray
    features: FloatArray
    refined: IntArray | None = None

    def __post_init__(self) -> None:
        for name in ("soft", "hard", "entropy_norm", "features", "refined"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen(value))

    def __len__(self) -> int:
        return int(self.hard.shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.soft.shape[1])

    def with_refined(self, refined: IntArray) -> "PseudoLabelSet":
        if refined.shape != self.hard.shape:
            raise UsageError("refined labels must cover every sample")
        return replace(self, refined=refined)

    def consistent(self) -> np.ndarray:
        """Mask of samples whose classifier and prototype labels agree."""
        if self.refined is None:
            raise UsageError("pseudo-labels have not been refined")
        return self.hard == self.refined


@dataclass(frozen=True, eq=False)
class PrototypeSet:
    """Class prototypes ``c_k`` and the soft weight mass behind each."""

    prototypes: FloatArray
    weight_mass: FloatArray
    degenerate: np.ndarray

    def __post_init__(self) -> None:
        for name in ("prototypes", "weight_mass", "degenerate"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def num_classes(self) -> int:
        return int(self.prototypes.shape[0])

    @property
    def dim(self) -> int:
        return int(self.prototypes.shape[1])

    @property
    def num_degenerate(self) -> int:
        return int(np.count_nonzero(self.degenerate))


def normalized_entropy(soft: FloatArray) -> FloatArray:
    """``H(p) / log K`` per row; zero when K = 1."""
    k = soft.shape[1]
    if k == 1:
        return np.zeros(soft.shape[0])
    h = np.asarray(entropy(soft), dtype=np.float64)
    return np.clip(h / np.log(k), 0.0, 1.0)


def pseudo_label(model: ModelParams, targets: HasInputs) -> PseudoLabelSet:
    """Soft predictions, argmax labels and normalized entropy for every sample."""
    record = forward(model, targets.inputs)
    return PseudoLabelSet(
        soft=record.probs,
        hard=record.predictions,
        entropy_norm=normalized_entropy(record.probs),
        features=record.features,
    )


def prototypes_from(soft: FloatArray, features: FloatArray) -> PrototypeSet:
    """``c_k = sum_i p_ik g(x_i) / sum_i p_ik`` over all samples."""
    if soft.shape[0] == 0:
        raise UsageError("prototypes need at least one sample")
    if soft.shape[0] != features.shape[0]:
        raise UsageError("soft predictions and features differ in length")
    mass = soft.sum(axis=0)
    degenerate = mass < MASS_EPS
    safe_mass = np.where(degenerate, 1.0, mass)
    prototypes = (soft.T @ features) / safe_mass[:, None]
    prototypes[degenerate] = 0.0
    return PrototypeSet(prototypes, mass, degenerate)


def compute_prototypes(model: ModelParams, targets: HasInputs) -> PrototypeSet:
    record = forward(model, targets.inputs)
    return prototypes_from(record.probs, record.features)


def refine_labels(features: FloatArray, protos: PrototypeSet) -> IntArray:
    """Nearest prototype by cosine distance; lowest class index wins ties.

    Degenerate and zero-norm prototypes are never chosen. Zero-norm features get
    ``-1``.

    Raises:
        UsageError: If the feature dimension differs from the prototypes'.
        ConfigurationError: If every prototype is unusable.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] != protos.dim:
        raise UsageError(
            f"features must be n x {protos.dim}, got shape {feats.shape}"
        )
    usable = ~protos.degenerate & (np.linalg.norm(protos.prototypes, axis=1) > NORM_EPS)
    if not usable.any():
        raise ConfigurationError("all prototypes are degenerate; cannot refine labels")
    dist = cosine_distance_matrix(feats, protos.prototypes)
    dist[:, ~usable] = np.inf
    refined = np.argmin(dist, axis=1).astype(np.int64)
    refined[~np.isfinite(dist.min(axis=1))] = UNREFINED
    return refined


def curriculum_labels(
    model: ModelParams, targets: HasInputs
) -> tuple[PseudoLabelSet, PrototypeSet]:
    """Pseudo-label, build prototypes and refine in one forward pass."""
    pl = pseudo_label(model, targets)
    protos = prototypes_from(pl.soft, pl.features)
    if protos.num_degenerate:
        logger.warning(
            "Degenerate prototypes excluded",
            count=protos.num_degenerate,
            classes=np.flatnonzero(protos.degenerate).tolist(),
        )
    return pl.with_refined(refine_labels(pl.features, protos)), protos
