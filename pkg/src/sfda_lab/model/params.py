"""Model parameter snapshots and checkpoint files."""

import json
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np

from ..errors import DatasetParseError, UsageError
from ..numerics import FloatArray, RandomSource
from ..utils.logging import get_logger

logger = get_logger(__name__)

Activation = Literal["tanh", "linear"]

CHECKPOINT_FORMAT = "sfda-lab-checkpoint"
CHECKPOINT_VERSION = 1


def _frozen(values: Any, ndim: int, name: str) -> FloatArray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise UsageError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains NaN or Inf")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Layer:
    """Affine map ``x @ weight + bias`` with weight of shape (in, out)."""

    weight: FloatArray
    bias: FloatArray

    def __post_init__(self) -> None:
        weight = _frozen(self.weight, 2, "weight")
        bias = _frozen(self.bias, 1, "bias")
        if weight.shape[1] != bias.shape[0]:
            raise UsageError(
                f"bias length {bias.shape[0]} does not match weight {weight.shape}"
            )
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "bias", bias)

    @property
    def in_dim(self) -> int:
        return int(self.weight.shape[0])

    @property
    def out_dim(self) -> int:
        return int(self.weight.shape[1])

    def map(self, fn: Callable[[FloatArray], FloatArray]) -> "Layer":
        return Layer(fn(self.weight), fn(self.bias))

    def zip_map(
        self, other: "Layer", fn: Callable[[FloatArray, FloatArray], FloatArray]
    ) -> "Layer":
        return Layer(fn(self.weight, other.weight), fn(self.bias, other.bias))


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Parameters of ``f = h o g``: MLP extractor layers plus a linear classifier.

    Instances are immutable snapshots; every update produces a new one.
    """

    extractor: tuple[Layer, ...]
    classifier: Layer
    activation: Activation = "tanh"
    layer_dims: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "extractor", tuple(self.extractor))
        layers = self.layers
        for prev, nxt in zip(layers, layers[1:], strict=False):
            if prev.out_dim != nxt.in_dim:
                raise UsageError(
                    f"incompatible layers: {prev.weight.shape} -> {nxt.weight.shape}"
                )
        dims = (layers[0].in_dim, *(layer.out_dim for layer in layers))
        object.__setattr__(self, "layer_dims", dims)

    @property
    def layers(self) -> tuple[Layer, ...]:
        return (*self.extractor, self.classifier)

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def feature_dim(self) -> int:
        return self.classifier.in_dim

    @property
    def num_classes(self) -> int:
        return self.classifier.out_dim

    @property
    def num_parameters(self) -> int:
        return sum(layer.weight.size + layer.bias.size for layer in self.layers)

    def map(self, fn: Callable[[FloatArray], FloatArray]) -> "ModelParams":
        """Apply ``fn`` to every parameter array."""
        return ModelParams(
            tuple(layer.map(fn) for layer in self.extractor),
            self.classifier.map(fn),
            self.activation,
        )

    def zip_map(
        self,
        other: "ModelParams",
        fn: Callable[[FloatArray, FloatArray], FloatArray],
    ) -> "ModelParams":
        """Combine two shape-compatible parameter sets element-wise."""
        self.require_compatible(other)
        return ModelParams(
            tuple(
                a.zip_map(b, fn)
                for a, b in zip(self.extractor, other.extractor, strict=True)
            ),
            self.classifier.zip_map(other.classifier, fn),
            self.activation,
        )

    def require_compatible(self, other: "ModelParams") -> None:
        if self.layer_dims != other.layer_dims:
            raise UsageError(
                f"layer dims differ: {self.layer_dims} vs {other.layer_dims}"
            )

    def zeros_like(self) -> "ModelParams":
        return self.map(np.zeros_like)

    def flatten(self) -> FloatArray:
        """All parameters as one vector, layer by layer, weight before bias."""
        parts = []
        for layer in self.layers:
            parts.extend([layer.weight.ravel(), layer.bias])
        return np.concatenate(parts)

    def unflatten(self, flat: FloatArray) -> "ModelParams":
        """Inverse of :meth:`flatten` using this instance's shapes."""
        if flat.shape != (self.num_parameters,):
            raise UsageError(f"expected {self.num_parameters} values")
        offset = 0
        rebuilt = []
        for layer in self.layers:
            w_size = layer.weight.size
            weight = flat[offset : offset + w_size].reshape(layer.weight.shape)
            offset += w_size
            bias = flat[offset : offset + layer.out_dim]
            offset += layer.out_dim
            rebuilt.append(Layer(weight, bias))
        return ModelParams(tuple(rebuilt[:-1]), rebuilt[-1], self.activation)

    def with_classifier(self, classifier: Layer) -> "ModelParams":
        return ModelParams(self.extractor, classifier, self.activation)


def init_params(
    layer_dims: Sequence[int],
    rng: RandomSource,
    activation: Activation = "tanh",
) -> ModelParams:
    """Glorot-uniform weights and zero biases for ``D_in -> ... -> d -> K``."""
    if len(layer_dims) < 2 or any(dim < 1 for dim in layer_dims):
        raise UsageError(f"invalid layer dims {tuple(layer_dims)}")
    layers = []
    for fan_in, fan_out in zip(layer_dims, layer_dims[1:], strict=False):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weight = (2.0 * rng.uniform((fan_in, fan_out)) - 1.0) * limit
        layers.append(Layer(weight, np.zeros(fan_out)))
    return ModelParams(tuple(layers[:-1]), layers[-1], activation)


def _layer_to_dict(layer: Layer) -> dict[str, Any]:
    return {"weight": layer.weight.tolist(), "bias": layer.bias.tolist()}


def checkpoint_document(params: ModelParams) -> dict[str, Any]:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layer_dims": list(params.layer_dims),
        "activation": params.activation,
        "extractor": [_layer_to_dict(layer) for layer in params.extractor],
        "classifier": _layer_to_dict(params.classifier),
    }


def save_checkpoint(params: ModelParams, path: str | Path) -> Path:
    """Write a JSON checkpoint; floats use round-trip repr so loading is exact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(checkpoint_document(params), f)
        f.write("\n")
    logger.info("Checkpoint written", path=str(path), dims=params.layer_dims)
    return path


def load_checkpoint(path: str | Path) -> ModelParams:
    """Read a checkpoint written by :func:`save_checkpoint`."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise DatasetParseError(f"{path}: invalid JSON ({e.msg})", e.lineno) from e

    if doc.get("format") != CHECKPOINT_FORMAT:
        raise DatasetParseError(f"{path}: not an sfda-lab checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise DatasetParseError(
            f"{path}: unsupported checkpoint version {doc.get('version')}"
        )
    try:
        params = ModelParams(
            tuple(Layer(item["weight"], item["bias"]) for item in doc["extractor"]),
            Layer(doc["classifier"]["weight"], doc["classifier"]["bias"]),
            doc.get("activation", "tanh"),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetParseError(f"{path}: malformed checkpoint ({e})") from e
    if list(params.layer_dims) != doc.get("layer_dims"):
        raise DatasetParseError(f"{path}: layer_dims do not match the arrays")
    return params
