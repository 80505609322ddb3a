"""Forward pass, losses and hand-derived gradients of the MLP."""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from ..errors import UsageError
from ..numerics import FloatArray, softmax
from ..numerics.functions import LOG_EPS, as_float_array
from .params import Layer, ModelParams


@dataclass(frozen=True, eq=False)
class ForwardRecord:
    """Everything a backward pass needs.

    ``layer_inputs[i]`` is the input of extractor layer ``i`` and
    ``layer_outputs[i]`` its post-activation output.
    """

    inputs: FloatArray
    layer_inputs: tuple[FloatArray, ...]
    layer_outputs: tuple[FloatArray, ...]
    features: FloatArray
    logits: FloatArray
    probs: FloatArray

    @property
    def predictions(self) -> npt.NDArray[np.int64]:
        # np.argmax returns the lowest index on ties
        return np.argmax(self.probs, axis=1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class LossSpec:
    """Weighted sum of a mean cross-entropy and a mean prediction-entropy term.

    ``targets`` are soft label rows; a one-hot row is the hard-label case.
    """

    targets: FloatArray | None = None
    ce_weight: float = 1.0
    entropy_weight: float = 0.0

    @classmethod
    def student(cls, targets: FloatArray, gamma: float) -> "LossSpec":
        """``gamma * L_ce + L_ent``."""
        return cls(targets=targets, ce_weight=gamma, entropy_weight=1.0)


def _activate(params: ModelParams, z: FloatArray) -> FloatArray:
    return np.tanh(z) if params.activation == "tanh" else z


def extract_features(
    params: ModelParams, inputs: npt.ArrayLike
) -> tuple[FloatArray, tuple[FloatArray, ...], tuple[FloatArray, ...]]:
    x = as_float_array(inputs, "inputs")
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise UsageError(
            f"inputs must be batch x {params.input_dim}, got shape {x.shape}"
        )
    layer_inputs = []
    layer_outputs = []
    h = x
    for layer in params.extractor:
        layer_inputs.append(h)
        h = _activate(params, h @ layer.weight + layer.bias)
        layer_outputs.append(h)
    return h, tuple(layer_inputs), tuple(layer_outputs)


def classify(params: ModelParams, features: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Apply the classifier head to feature rows; returns (logits, probs)."""
    if features.ndim != 2 or features.shape[1] != params.feature_dim:
        raise UsageError(
            f"features must be batch x {params.feature_dim}, got {features.shape}"
        )
    logits = features @ params.classifier.weight + params.classifier.bias
    return logits, softmax(logits)


def forward(params: ModelParams, inputs: npt.ArrayLike) -> ForwardRecord:
    """Run ``f = h o g`` on a batch of inputs."""
    features, layer_inputs, layer_outputs = extract_features(params, inputs)
    logits, probs = classify(params, features)
    return ForwardRecord(
        inputs=layer_inputs[0] if layer_inputs else features,
        layer_inputs=layer_inputs,
        layer_outputs=layer_outputs,
        features=features,
        logits=logits,
        probs=probs,
    )


def predict(params: ModelParams, inputs: npt.ArrayLike) -> npt.NDArray[np.int64]:
    return forward(params, inputs).predictions


def logit_loss(probs: FloatArray, spec: LossSpec) -> tuple[float, FloatArray]:
    """Loss value and its gradient with respect to the logits.

    For soft targets ``t`` the CE gradient is ``p * sum(t) - t``; the entropy
    gradient is ``-p * (log p + H)``.
    """
    n = probs.shape[0]
    if n == 0:
        raise UsageError("batch must be non-empty")
    loss = 0.0
    grad = np.zeros_like(probs)

    if spec.ce_weight != 0.0:
        if spec.targets is None:
            raise UsageError("cross-entropy term needs targets")
        targets = np.asarray(spec.targets, dtype=np.float64)
        if targets.shape != probs.shape:
            raise UsageError(
                f"targets shape {targets.shape} does not match {probs.shape}"
            )
        ce = -np.sum(targets * np.log(np.maximum(probs, LOG_EPS)), axis=1)
        loss += spec.ce_weight * float(np.mean(ce))
        row_mass = targets.sum(axis=1, keepdims=True)
        grad += spec.ce_weight * (probs * row_mass - targets) / n

    if spec.entropy_weight != 0.0:
        log_p = np.log(np.where(probs > 0, probs, 1.0))
        h = -np.sum(probs * log_p, axis=1, keepdims=True)
        loss += spec.entropy_weight * float(np.mean(h))
        grad += spec.entropy_weight * (-probs * (log_p + h)) / n

    return loss, grad


def linear_backward(
    layer_input: FloatArray, d_out: FloatArray, layer: Layer
) -> tuple[Layer, FloatArray]:
    """Gradients of an affine layer and of its input."""
    grad = Layer(layer_input.T @ d_out, d_out.sum(axis=0))
    return grad, d_out @ layer.weight.T


def extractor_backward(
    params: ModelParams, record: ForwardRecord, d_features: FloatArray
) -> tuple[Layer, ...]:
    """Backpropagate a feature-space gradient through the extractor."""
    grads: list[Layer] = []
    d_h = d_features
    for i in range(len(params.extractor) - 1, -1, -1):
        out = record.layer_outputs[i]
        d_z = d_h * (1.0 - out**2) if params.activation == "tanh" else d_h
        layer_grad, d_h = linear_backward(
            record.layer_inputs[i], d_z, params.extractor[i]
        )
        grads.append(layer_grad)
    return tuple(reversed(grads))


def backward(
    params: ModelParams, record: ForwardRecord, d_logits: FloatArray
) -> ModelParams:
    """Full parameter gradient given the gradient at the logits."""
    classifier_grad, d_features = linear_backward(
        record.features, d_logits, params.classifier
    )
    return ModelParams(
        extractor_backward(params, record, d_features),
        classifier_grad,
        params.activation,
    )


def loss_and_gradients(
    params: ModelParams, batch_inputs: npt.ArrayLike, loss_spec: LossSpec
) -> tuple[float, ModelParams]:
    """Loss of ``loss_spec`` on the batch and its exact analytic gradient."""
    record = forward(params, batch_inputs)
    loss, d_logits = logit_loss(record.probs, loss_spec)
    return loss, backward(params, record, d_logits)


def accuracy(params: ModelParams, inputs: npt.ArrayLike, labels: npt.ArrayLike) -> float:
    labels_arr = np.asarray(labels, dtype=np.int64)
    if labels_arr.size == 0:
        raise UsageError("accuracy of an empty dataset is undefined")
    return float(np.mean(predict(params, inputs) == labels_arr))
