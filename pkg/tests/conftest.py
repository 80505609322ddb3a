"""Pytest configuration and shared fixtures."""

import logging
import tempfile
from collections.abc import Generator
from pathlib import Path

import pytest

from sfda_lab.config.models import (
    AdaptationConfig,
    LabConfig,
    LoggingConfig,
    ModelConfig,
    PretrainConfig,
    ShiftConfig,
)
from sfda_lab.experiments.runner import Benchmark, PretrainedPair, build_benchmark, pretrain_pair
from sfda_lab.model import ModelParams, init_params
from sfda_lab.numerics import RandomSource
from sfda_lab.utils.logging import PACKAGE_LOGGER, setup_logging


@pytest.fixture(autouse=True)
def reset_package_logger() -> Generator[None, None, None]:
    """Drop handlers a CLI command or test installed."""
    yield
    setup_logging(LoggingConfig(console=False))
    logging.getLogger(PACKAGE_LOGGER).setLevel(logging.NOTSET)


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmp_dir:
        yield Path(tmp_dir)


@pytest.fixture
def rng() -> RandomSource:
    return RandomSource(1234)


@pytest.fixture
def small_params() -> ModelParams:
    """Random 5 -> 6 -> 4 -> 3 tanh network."""
    return init_params([5, 6, 4, 3], RandomSource(7))


@pytest.fixture
def small_lab_config() -> LabConfig:
    """Benchmark and model sizes small enough for a pipeline run in a unit test."""
    return LabConfig(
        shift=ShiftConfig(
            num_classes=3,
            input_dim=4,
            hard_class_indices=[2],
            n_source=150,
            n_target=150,
            n_universal=300,
        ),
        model=ModelConfig(hidden_dims=[8], feature_dim=4),
        pretrain=PretrainConfig(epochs=15, batch_size=32),
        adaptation=AdaptationConfig(
            epochs=3, sub_epochs=2, mix_epochs=2, batch_size=32
        ),
    )


@pytest.fixture
def small_benchmark(small_lab_config: LabConfig) -> Benchmark:
    return build_benchmark(small_lab_config.shift)


@pytest.fixture
def small_pair(small_benchmark: Benchmark, small_lab_config: LabConfig) -> PretrainedPair:
    return pretrain_pair(small_benchmark, small_lab_config)
