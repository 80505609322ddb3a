"""Configuration models using Pydantic."""

from typing import Literal

from pydantic import (
    AliasChoices,
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

OptimizerName = Literal["sgd", "adam"]
LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


class ShiftConfig(BaseModel):
    """Synthetic domain-shift benchmark description.

    Class clusters are Gaussian around ``class_means`` (derived from
    ``layout_seed`` when omitted). The target domain applies a rotation in the
    first two coordinates, a translation, a noise multiplier and an extra shift
    for the hard classes.
    """

    num_classes: int = Field(
        4,
        ge=1,
        validation_alias=AliasChoices("num_classes", "K"),
        description="Number of classes (K)",
    )
    input_dim: int = Field(
        8,
        ge=2,
        validation_alias=AliasChoices("input_dim", "D_in"),
        description="Input dimension (D_in); rotation uses the first two coordinates",
    )
    class_means: list[list[float]] | None = Field(
        None, description="Explicit K x D_in cluster means (derived when omitted)"
    )
    mean_scale: float = Field(3.5, gt=0, description="Norm of derived class means")
    cluster_std: float = Field(1.0, gt=0, description="Per-coordinate cluster sigma")
    rotation_deg: float = Field(30.0, description="Target rotation angle in degrees")
    translation: list[float] | None = Field(
        None, description="Target translation vector (derived when omitted)"
    )
    translation_scale: float = Field(
        1.0, ge=0, description="Norm of the derived translation vector"
    )
    noise_scale: float = Field(1.5, gt=0, description="Target noise multiplier")
    hard_class_indices: list[int] = Field(
        default_factory=lambda: [3], description="Classes given an extra shift"
    )
    hard_shift: float = Field(
        3.0, ge=2.0, description="Extra hard-class shift in units of cluster_std"
    )
    layout_seed: int = Field(0, ge=0, description="Seed for derived means/translation")
    seed: int = Field(0, ge=0, description="Seed for sampling the datasets")
    n_source: int = Field(800, ge=1, description="Source samples")
    n_target: int = Field(800, ge=1, description="Target samples")
    n_universal: int = Field(1600, ge=1, description="Universal pretraining samples")
    universal_components: int = Field(
        8, ge=1, description="Affine mixture components of the universal domain"
    )
    universal_jitter: float = Field(
        0.1, ge=0, description="Random affine jitter of universal components"
    )

    model_config = ConfigDict(
        extra="forbid", validate_assignment=True, populate_by_name=True
    )

    @model_validator(mode="after")
    def _check_shapes(self) -> "ShiftConfig":
        k, d = self.num_classes, self.input_dim
        for idx in self.hard_class_indices:
            if not 0 <= idx < k:
                raise ValueError(
                    f"hard_class_indices: {idx} is outside [0, {k})"
                )
        if self.class_means is not None:
            if len(self.class_means) != k or any(
                len(row) != d for row in self.class_means
            ):
                raise ValueError(f"class_means: expected a {k} x {d} matrix")
        if self.translation is not None and len(self.translation) != d:
            raise ValueError(f"translation: expected length {d}")
        for name in ("n_source", "n_target", "n_universal"):
            if getattr(self, name) < k:
                raise ValueError(f"{name}: must be at least num_classes ({k})")
        return self


class ModelConfig(BaseModel):
    """Shape of the MLP feature extractor and linear classifier."""

    hidden_dims: list[int] = Field(
        default_factory=lambda: [32], description="Hidden extractor widths"
    )
    feature_dim: int = Field(16, ge=1, description="Feature dimension d")
    activation: Literal["tanh", "linear"] = Field(
        "tanh", description="Extractor nonlinearity ('linear' is a test hook)"
    )

    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class PretrainConfig(BaseModel):
    """Supervised pretraining of source and universal models."""

    epochs: int = Field(40, ge=0, description="Training epochs")
    lr: float = Field(0.05, gt=0, description="Learning rate")
    batch_size: int = Field(64, ge=1, description="Mini-batch size")
    momentum: float = Field(0.9, ge=0, lt=1, description="SGD momentum")
    weight_decay: float = Field(1e-4, ge=0, description="L2 weight decay")
    optimizer: OptimizerName = Field("sgd", description="Optimizer")
    seed: int = Field(0, ge=0, description="Initialisation and shuffling seed")

    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class AdaptationConfig(BaseModel):
    """Hyperparameters of the curriculum adaptation loop and its ablations."""

    epochs: int = Field(
        15, ge=1, validation_alias=AliasChoices("epochs", "N"), description="Target epochs N"
    )
    sub_epochs: int = Field(
        10,
        ge=1,
        validation_alias=AliasChoices("sub_epochs", "K_sub"),
        description="Student sub-epochs per epoch",
    )
    mix_epochs: int = Field(
        5,
        ge=0,
        validation_alias=AliasChoices("mix_epochs", "K_mix"),
        description="Dual MixUP sub-epochs per epoch",
    )
    gamma: float = Field(1.0, ge=0, description="Cross-entropy weight in L_std")
    mu: float = Field(1.0, ge=0, description="Mix loss weight in L_tot")
    tau_norm: float = Field(
        0.5, gt=0, le=1, description="Normalised entropy threshold for D_tt"
    )
    alpha_intra: float = Field(1.0, gt=0, description="Beta parameter, Intra-MixUP")
    alpha_inter: float = Field(2.0, gt=0, description="Base Beta parameter, Inter-MixUP")
    beta0: float = Field(0.3, ge=0, le=1, description="Initial fusion ratio")
    beta_end: float = Field(
        0.8,
        ge=0,
        le=1,
        validation_alias=AliasChoices("beta_end", "betaN"),
        description="Final fusion ratio",
    )
    lr: float = Field(5e-3, gt=0, description="Student learning rate")
    batch_size: int = Field(64, ge=1, description="Mini-batch size")
    weight_decay: float = Field(1e-4, ge=0, description="L2 weight decay")
    momentum: float = Field(0.9, ge=0, lt=1, description="SGD momentum")
    optimizer: OptimizerName = Field("sgd", description="Optimizer")
    seed: int = Field(0, ge=0, description="Adaptation seed")
    max_intra_pairs: int | None = Field(
        None, ge=1, description="Intra-MixUP pair budget per sub-epoch"
    )

    enable_filtering: bool = Field(True, description="Prototype-consistency split")
    enable_mixup: bool = Field(True, description="Dual MixUP phase")
    enable_colearning: bool = Field(True, description="Student extractor from g_*")
    reinit_student: bool = Field(True, description="Re-initialise student each epoch")
    student_classifier_from_latest: bool = Field(
        False, description="Student classifier from theta_(n-1) instead of h_s"
    )
    inter_labels_refined: bool = Field(
        False, description="Use refined labels for D_ut in Inter-MixUP"
    )
    skip_fusion_on_empty_split: bool = Field(
        False, description="Keep theta_(n-1) when D_tt is empty"
    )

    model_config = ConfigDict(
        extra="forbid", validate_assignment=True, populate_by_name=True
    )

    @model_validator(mode="after")
    def _check_betas(self) -> "AdaptationConfig":
        if self.beta0 > self.beta_end:
            raise ValueError("beta0 must not exceed beta_end")
        return self


class LoggingConfig(BaseModel):
    """Configuration for logging."""

    level: LogLevel = Field("INFO", description="Log level")
    file: str | None = Field(None, description="Log file path")
    max_files: int = Field(5, description="Maximum log files to keep")
    max_size_mb: int = Field(10, description="Maximum log file size in MB")
    console: bool = Field(True, description="Enable console logging")

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    @field_validator("level", mode="before")
    @classmethod
    def _upper_level(cls, value: object) -> object:
        return value.upper() if isinstance(value, str) else value


class LabConfig(BaseModel):
    """Main configuration model."""

    shift: ShiftConfig = Field(default_factory=ShiftConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    pretrain: PretrainConfig = Field(default_factory=PretrainConfig)
    adaptation: AdaptationConfig = Field(default_factory=AdaptationConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    model_config = ConfigDict(extra="forbid", validate_assignment=True)
