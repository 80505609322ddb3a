from .loader import load_config, load_shift_config, save_config
from .models import (
    AdaptationConfig,
    LabConfig,
    LoggingConfig,
    ModelConfig,
    PretrainConfig,
    ShiftConfig,
)

__all__ = [
    "AdaptationConfig",
    "LabConfig",
    "LoggingConfig",
    "ModelConfig",
    "PretrainConfig",
    "ShiftConfig",
    "load_config",
    "load_shift_config",
    "save_config",
]
