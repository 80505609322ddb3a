from .fusion import BetaSchedule, fuse_parameters, init_student, make_beta_schedule
from .network import (
    ForwardRecord,
    LossSpec,
    accuracy,
    backward,
    classify,
    extractor_backward,
    forward,
    loss_and_gradients,
    predict,
)
from .optim import AdamState, MomentumState, Optimizer, adam_step, sgd_step
from .params import (
    Layer,
    ModelParams,
    init_params,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "AdamState",
    "BetaSchedule",
    "ForwardRecord",
    "Layer",
    "LossSpec",
    "ModelParams",
    "MomentumState",
    "Optimizer",
    "accuracy",
    "adam_step",
    "backward",
    "classify",
    "extractor_backward",
    "forward",
    "fuse_parameters",
    "init_params",
    "init_student",
    "load_checkpoint",
    "loss_and_gradients",
    "make_beta_schedule",
    "predict",
    "save_checkpoint",
    "sgd_step",
]
