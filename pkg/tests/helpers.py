"""Test helpers shared across modules."""

from collections.abc import Callable

import numpy as np

from sfda_lab.model import Layer, ModelParams


def zero_params(layer_dims: list[int], activation: str = "tanh") -> ModelParams:
    """All-zero weights and biases."""
    layers = [
        Layer(np.zeros((a, b)), np.zeros(b))
        for a, b in zip(layer_dims, layer_dims[1:], strict=False)
    ]
    return ModelParams(tuple(layers[:-1]), layers[-1], activation)  # type: ignore[arg-type]


def finite_difference(
    loss_fn: Callable[[ModelParams], float], params: ModelParams, step: float = 1e-5
) -> np.ndarray:
    """Central differences of ``loss_fn`` over every flattened coordinate."""
    flat = params.flatten()
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        plus, minus = flat.copy(), flat.copy()
        plus[i] += step
        minus[i] -= step
        grad[i] = (
            loss_fn(params.unflatten(plus)) - loss_fn(params.unflatten(minus))
        ) / (2 * step)
    return grad


def assert_gradients_close(analytic: np.ndarray, numeric: np.ndarray) -> None:
    """Relative error below 1e-5 wherever the gradient is not negligible.

    Where both values are tiny only a small absolute error is required, since
    finite differences of near-flat coordinates are dominated by roundoff.
    """
    scale = np.abs(analytic) + np.abs(numeric)
    significant = scale > 1e-4
    rel = np.abs(analytic - numeric)[significant] / scale[significant]
    assert rel.size == 0 or rel.max() < 1e-5, f"max relative error {rel.max()}"
    assert np.all(np.abs(analytic - numeric)[~significant] < 1e-8)


def params_equal(a: ModelParams, b: ModelParams) -> bool:
    """Bit-for-bit equality of two parameter sets."""
    return a.layer_dims == b.layer_dims and bool(
        np.array_equal(a.flatten(), b.flatten())
    )
