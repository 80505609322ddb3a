"""Per-epoch observables of an adaptation run and their CSV form."""

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import pandas as pd

from ..curriculum import PseudoLabelSet, SubsetSplit
from ..data import LabelOracle
from ..model import ModelParams, predict
from ..numerics import GENERATOR_ID, FloatArray
from ..utils.logging import get_logger

logger = get_logger(__name__)

NAN = float("nan")


@dataclass
class EpochMetrics:
    """One row of the metrics log. Label-dependent fields are NaN without an oracle."""

    epoch: int
    beta: float
    accuracy: float = NAN
    noise_rate: float = NAN
    r: float = NAN
    tt_size: int = 0
    ut_size: int = 0
    tt_noise_rate: float = NAN
    hard_class_noise_rate: float = NAN
    loss_std: float = NAN
    loss_mix: float = NAN
    lambda_intra_mean: float = NAN
    lambda_inter_mean: float = NAN
    alpha_hat: float = NAN
    degenerate_prototypes: int = 0
    student_skipped: bool = False


METRIC_COLUMNS = [f.name for f in fields(EpochMetrics)]


@dataclass
class MetricsLog:
    """Ordered epoch rows; one per completed epoch."""

    rows: list[EpochMetrics] = field(default_factory=list)
    generator_id: str = GENERATOR_ID

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, row: EpochMetrics) -> None:
        self.rows.append(row)

    def column(self, name: str) -> FloatArray:
        return np.array([getattr(row, name) for row in self.rows], dtype=np.float64)

    @property
    def final(self) -> EpochMetrics | None:
        return self.rows[-1] if self.rows else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(row) for row in self.rows], columns=METRIC_COLUMNS)

    def save(self, path: str | Path) -> Path:
        """Write the log as CSV behind a ``# prng: ...`` header line."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(f"# prng: {self.generator_id}\n")
            self.to_frame().to_csv(f, index=False, lineterminator="\n")
        logger.info("Metrics written", path=str(path), epochs=len(self))
        return path


def load_metrics(path: str | Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


@dataclass(frozen=True)
class Evaluation:
    """Evaluation-only context: hidden target labels and the hard classes."""

    oracle: LabelOracle
    hard_classes: tuple[int, ...] = ()

    def fill(
        self,
        row: EpochMetrics,
        model: ModelParams,
        inputs: FloatArray,
        pl: PseudoLabelSet,
        split: SubsetSplit,
    ) -> None:
        """Add accuracy and noise measurements to ``row`` in place.

        ``pl`` and ``split`` are those the epoch trained on.
        """
        row.accuracy = self.oracle.accuracy(predict(model, inputs))
        row.noise_rate = self.oracle.noise_rate(pl.hard)
        row.tt_noise_rate = self.oracle.noise_rate(pl.hard, split.trustworthy)
        if self.hard_classes:
            row.hard_class_noise_rate = self.oracle.class_noise_rate(
                pl.hard, self.hard_classes
            )
