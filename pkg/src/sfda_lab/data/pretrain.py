"""Supervised pretraining of source and universal models, plus a linear probe."""

from collections.abc import Iterator, Sequence

import numpy as np

from ..config.models import ModelConfig, PretrainConfig
from ..errors import UsageError
from ..model import Layer, LossSpec, ModelParams, Optimizer, init_params, loss_and_gradients
from ..model.network import accuracy, extract_features
from ..numerics import IntArray, RandomSource, one_hot
from ..utils.logging import get_logger
from .dataset import Dataset

logger = get_logger(__name__)

CONVERGENCE_WARNING_ACCURACY = 0.8


def minibatch_indices(n: int, batch_size: int, rng: RandomSource) -> Iterator[IntArray]:
    """Yield the batches of one shuffled pass over ``range(n)``."""
    if batch_size < 1:
        raise UsageError("batch_size must be positive")
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def model_layer_dims(input_dim: int, num_classes: int, model_cfg: ModelConfig) -> list[int]:
    """``D_in -> hidden... -> d -> K``."""
    return [input_dim, *model_cfg.hidden_dims, model_cfg.feature_dim, num_classes]


def _initial_params(
    data: Dataset,
    model_cfg: ModelConfig,
    rng: RandomSource,
    init_extractor: Sequence[Layer] | None,
) -> ModelParams:
    if init_extractor is None:
        dims = model_layer_dims(data.input_dim, data.num_classes, model_cfg)
        return init_params(dims, rng, model_cfg.activation)

    extractor = tuple(init_extractor)
    if not extractor or extractor[0].in_dim != data.input_dim:
        raise UsageError(
            f"initial extractor does not accept {data.input_dim}-dimensional inputs"
        )
    head = init_params([extractor[-1].out_dim, data.num_classes], rng).classifier
    return ModelParams(extractor, head, model_cfg.activation)


def train_supervised(
    params: ModelParams,
    inputs: np.ndarray,
    targets: np.ndarray,
    train_cfg: PretrainConfig,
    epochs: int,
    rng: RandomSource,
) -> ModelParams:
    """Mini-batch cross-entropy training against soft ``targets`` rows."""
    optimizer = Optimizer(
        train_cfg.optimizer, train_cfg.lr, train_cfg.weight_decay, train_cfg.momentum
    )
    n = inputs.shape[0]
    for epoch in range(epochs):
        losses = []
        for idx in minibatch_indices(n, train_cfg.batch_size, rng):
            loss, grads = loss_and_gradients(params, inputs[idx], LossSpec(targets[idx]))
            params = optimizer.step(params, grads)
            losses.append(loss)
        logger.debug("Pretrain epoch", epoch=epoch + 1, loss=float(np.mean(losses)))
    return params


def pretrain(
    data: Dataset,
    model_cfg: ModelConfig,
    train_cfg: PretrainConfig,
    rng: RandomSource,
    init_extractor: Sequence[Layer] | None = None,
    epochs: int | None = None,
) -> ModelParams:
    """Train ``h o g`` on a labelled dataset.

    Args:
        data: Training samples; must be non-empty.
        model_cfg: Extractor widths and activation.
        train_cfg: Optimizer settings and default epoch count.
        rng: Source of the initialization (child 0) and batch order (child 1).
        init_extractor: Start from these extractor layers with a fresh classifier
            instead of a random extractor.
        epochs: Overrides ``train_cfg.epochs``. Zero returns the initialization.

    Returns:
        The trained parameters. Train accuracy below 80% is logged as a warning.
    """
    if len(data) == 0:
        raise UsageError("cannot pretrain on an empty dataset")
    n_epochs = train_cfg.epochs if epochs is None else epochs
    if n_epochs < 0:
        raise UsageError("epochs must be non-negative")

    params = _initial_params(data, model_cfg, rng.child(0), init_extractor)
    if n_epochs == 0:
        return params

    targets = one_hot(data.labels, data.num_classes)
    params = train_supervised(
        params, data.inputs, targets, train_cfg, n_epochs, rng.child(1)
    )
    train_acc = accuracy(params, data.inputs, data.labels)
    if train_acc < CONVERGENCE_WARNING_ACCURACY:
        logger.warning(
            "Pretraining did not converge",
            domain=data.domain,
            train_accuracy=train_acc,
        )
    logger.info(
        "Pretraining finished",
        domain=data.domain,
        epochs=n_epochs,
        train_accuracy=train_acc,
    )
    return params


def linear_probe_accuracy(
    extractor: ModelParams,
    data: Dataset,
    epochs: int = 200,
    lr: float = 0.5,
    seed: int = 0,
) -> float:
    """Accuracy of a softmax-regression head fit on frozen ``extractor`` features.

    The head is trained and scored on ``data`` itself, so the number measures
    how linearly separable the classes are in feature space.
    """
    features, _, _ = extract_features(extractor, data.inputs)
    head = init_params([features.shape[1], data.num_classes], RandomSource(seed))
    probe = ModelParams((), head.classifier, "linear")
    targets = one_hot(data.labels, data.num_classes)
    optimizer = Optimizer("sgd", lr, 0.0, 0.9)
    spec = LossSpec(targets)
    for _ in range(epochs):
        _, grads = loss_and_gradients(probe, features, spec)
        probe = optimizer.step(probe, grads)
    return accuracy(probe, features, data.labels)
