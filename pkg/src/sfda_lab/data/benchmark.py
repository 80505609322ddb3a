"""Synthetic domain-shift benchmarks with hidden target ground truth.

Every domain draws from the same Gaussian class clusters. A domain is defined by
an affine transform applied to cluster samples: rotation of the first two
coordinates, translation, a within-class noise multiplier, and an extra shift of
the hard classes toward their nearest neighbouring class.
"""

from dataclasses import dataclass

import numpy as np

from ..config.models import ShiftConfig
from ..errors import UsageError
from ..numerics import FloatArray, RandomSource
from ..utils.logging import get_logger
from .dataset import Dataset, Domain

logger = get_logger(__name__)

_MEANS_STREAM = 0
_TRANSLATION_STREAM = 1


def class_means(cfg: ShiftConfig) -> FloatArray:
    """K x D cluster means, explicit or derived from ``layout_seed``.

    Derived means are ``mean_scale`` times orthonormal directions when K <= D,
    so every pair of classes is ``sqrt(2) * mean_scale`` apart.
    """
    if cfg.class_means is not None:
        return np.array(cfg.class_means, dtype=np.float64)
    rng = RandomSource(cfg.layout_seed).child(_MEANS_STREAM)
    k, d = cfg.num_classes, cfg.input_dim
    raw = rng.normal((d, k))
    if k <= d:
        q, _ = np.linalg.qr(raw)
        directions = q.T
    else:
        directions = (raw / np.linalg.norm(raw, axis=0)).T
    return cfg.mean_scale * directions


def translation_vector(cfg: ShiftConfig) -> FloatArray:
    if cfg.translation is not None:
        return np.array(cfg.translation, dtype=np.float64)
    rng = RandomSource(cfg.layout_seed).child(_TRANSLATION_STREAM)
    direction = rng.normal(cfg.input_dim)
    return cfg.translation_scale * direction / np.linalg.norm(direction)


def rotation_matrix(degrees: float, dim: int) -> FloatArray:
    """Rotation of the first two coordinates; identity elsewhere."""
    theta = np.deg2rad(degrees)
    rot = np.eye(dim)
    c, s = np.cos(theta), np.sin(theta)
    rot[:2, :2] = [[c, -s], [s, c]]
    return rot


def hard_class_offsets(
    means: FloatArray, hard_classes: list[int], magnitude: float
) -> FloatArray:
    """Per-class offset pulling each hard class toward its nearest other class."""
    k, d = means.shape
    offsets = np.zeros((k, d))
    for cls in hard_classes:
        if k == 1:
            direction = np.eye(d)[0]
        else:
            gaps = np.linalg.norm(means - means[cls], axis=1)
            gaps[cls] = np.inf
            nearest = int(np.argmin(gaps))
            direction = (means[nearest] - means[cls]) / gaps[nearest]
        offsets[cls] = magnitude * direction
    return offsets


@dataclass(frozen=True, eq=False)
class DomainTransform:
    """``x -> A R x + t + offset[label]`` applied to cluster samples.

    ``noise_scale`` multiplies the within-class deviation before the map.
    """

    rotation_deg: float
    translation: FloatArray
    noise_scale: float
    class_offsets: FloatArray
    linear: FloatArray

    @classmethod
    def identity(cls, num_classes: int, dim: int) -> "DomainTransform":
        return cls(0.0, np.zeros(dim), 1.0, np.zeros((num_classes, dim)), np.eye(dim))

    @classmethod
    def target(cls, cfg: ShiftConfig) -> "DomainTransform":
        means = class_means(cfg)
        return cls(
            rotation_deg=cfg.rotation_deg,
            translation=translation_vector(cfg),
            noise_scale=cfg.noise_scale,
            class_offsets=hard_class_offsets(
                means, cfg.hard_class_indices, cfg.hard_shift * cfg.cluster_std
            ),
            linear=np.eye(cfg.input_dim),
        )

    def interpolate(self, weight: float, linear: FloatArray) -> "DomainTransform":
        """Blend between the identity (weight 0) and this transform (weight 1)."""
        return DomainTransform(
            rotation_deg=weight * self.rotation_deg,
            translation=weight * self.translation,
            noise_scale=1.0 + weight * (self.noise_scale - 1.0),
            class_offsets=weight * self.class_offsets,
            linear=linear,
        )

    def apply(
        self, means: FloatArray, labels: np.ndarray, deviations: FloatArray
    ) -> FloatArray:
        base = means[labels] + self.noise_scale * deviations
        rot = rotation_matrix(self.rotation_deg, means.shape[1])
        mapped = base @ (self.linear @ rot).T
        return mapped + self.translation + self.class_offsets[labels]


def sample_domain(
    cfg: ShiftConfig,
    transform: DomainTransform,
    n: int,
    rng: RandomSource,
    domain: Domain,
) -> Dataset:
    """Draw ``n`` samples with uniform class priors through ``transform``."""
    means = class_means(cfg)
    labels = rng.integers(cfg.num_classes, n)
    deviations = cfg.cluster_std * rng.normal((n, cfg.input_dim))
    inputs = transform.apply(means, labels, deviations)
    return Dataset(inputs, labels, domain, cfg.num_classes)


def generate_benchmark(
    cfg: ShiftConfig,
    n_source: int,
    n_target: int,
    rng: RandomSource,
) -> tuple[Dataset, Dataset]:
    """Source from the untransformed clusters, target through the shift.

    Source and target use independent child streams of ``rng``.
    """
    for name, n in (("n_source", n_source), ("n_target", n_target)):
        if n < cfg.num_classes:
            raise UsageError(f"{name} must be at least num_classes")
    identity = DomainTransform.identity(cfg.num_classes, cfg.input_dim)
    source = sample_domain(cfg, identity, n_source, rng.child(0), "source")
    target = sample_domain(cfg, DomainTransform.target(cfg), n_target, rng.child(1), "target")
    logger.info(
        "Benchmark generated",
        classes=cfg.num_classes,
        dim=cfg.input_dim,
        rotation=cfg.rotation_deg,
        hard=cfg.hard_class_indices,
    )
    return source, target


def universal_transforms(cfg: ShiftConfig, rng: RandomSource) -> list[DomainTransform]:
    """Mixture components spanning source-like to target-like transforms.

    Component ``m`` of ``M`` blends the identity and the target transform with
    weight ``m / (M - 1)`` and adds a random linear jitter ``I + j * G / sqrt(D)``.
    """
    m_total = cfg.universal_components
    d = cfg.input_dim
    target = DomainTransform.target(cfg)
    components = []
    for m in range(m_total):
        weight = m / (m_total - 1) if m_total > 1 else 0.0
        jitter = cfg.universal_jitter * rng.normal((d, d)) / np.sqrt(d)
        components.append(target.interpolate(weight, np.eye(d) + jitter))
    return components


def generate_universal(cfg: ShiftConfig, n: int, rng: RandomSource) -> Dataset:
    """Broad pretraining domain: a uniform mixture of :func:`universal_transforms`."""
    if n < cfg.num_classes:
        raise UsageError("n must be at least num_classes")
    components = universal_transforms(cfg, rng.child(0))
    draw = rng.child(1)
    labels = draw.integers(cfg.num_classes, n)
    deviations = cfg.cluster_std * draw.normal((n, cfg.input_dim))
    assignment = draw.integers(len(components), n)
    means = class_means(cfg)
    inputs = np.empty((n, cfg.input_dim))
    for m, transform in enumerate(components):
        rows = assignment == m
        inputs[rows] = transform.apply(means, labels[rows], deviations[rows])
    logger.info("Universal domain generated", components=len(components), rows=n)
    return Dataset(inputs, labels, "universal", cfg.num_classes)
