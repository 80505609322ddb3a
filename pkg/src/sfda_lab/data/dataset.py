"""Datasets, the label-free target view, and CSV persistence.

Adaptation code receives a :class:`TargetView`, which has no labels at all.
Ground truth is only reachable through :class:`LabelOracle`, which evaluation
code builds from the full :class:`Dataset`.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Literal, get_args

import numpy as np
import numpy.typing as npt
import pandas as pd

from ..errors import DatasetParseError, UsageError
from ..numerics import FloatArray, IntArray
from ..utils.logging import get_logger

logger = get_logger(__name__)

Domain = Literal["source", "target", "universal"]
DOMAINS: tuple[str, ...] = get_args(Domain)


@dataclass(frozen=True, eq=False)
class TargetView:
    """Inputs of a domain with the labels stripped."""

    inputs: FloatArray
    num_classes: int
    domain: Domain = "target"

    def __post_init__(self) -> None:
        inputs = np.array(self.inputs, dtype=np.float64, copy=True)
        inputs.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.inputs.shape[1])


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labelled samples of one domain."""

    inputs: FloatArray
    labels: IntArray
    domain: Domain
    num_classes: int

    def __post_init__(self) -> None:
        inputs = np.array(self.inputs, dtype=np.float64, copy=True)
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if inputs.ndim != 2:
            raise UsageError(f"inputs must be 2-dimensional, got {inputs.shape}")
        if labels.shape != (inputs.shape[0],):
            raise UsageError("labels length must equal the number of rows")
        if self.num_classes < 1:
            raise UsageError("num_classes must be positive")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise UsageError(f"labels must lie in [0, {self.num_classes})")
        if self.domain not in DOMAINS:
            raise UsageError(f"unknown domain {self.domain!r}")
        if not np.all(np.isfinite(inputs)):
            raise UsageError("inputs contain NaN or Inf")
        inputs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.inputs.shape[1])

    def unlabeled(self) -> TargetView:
        return TargetView(self.inputs, self.num_classes, self.domain)

    def oracle(self) -> "LabelOracle":
        return LabelOracle(self.labels, self.num_classes)

    def class_counts(self) -> IntArray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def same_as(self, other: "Dataset") -> bool:
        """Field-for-field equality."""
        return (
            self.domain == other.domain
            and self.num_classes == other.num_classes
            and self.inputs.shape == other.inputs.shape
            and bool(np.array_equal(self.inputs, other.inputs))
            and bool(np.array_equal(self.labels, other.labels))
        )


class LabelOracle:
    """Evaluation-only access to ground-truth labels."""

    def __init__(self, labels: npt.ArrayLike, num_classes: int):
        self._labels = np.array(labels, dtype=np.int64, copy=True)
        self.num_classes = num_classes

    def __len__(self) -> int:
        return int(self._labels.shape[0])

    def _mask(self, indices: npt.ArrayLike | None) -> npt.NDArray[np.bool_]:
        mask = np.zeros(len(self), dtype=bool)
        if indices is None:
            mask[:] = True
        else:
            mask[np.asarray(indices, dtype=np.int64)] = True
        return mask

    def accuracy(self, predictions: npt.ArrayLike) -> float:
        pred = np.asarray(predictions, dtype=np.int64)
        if pred.shape != self._labels.shape:
            raise UsageError("prediction count does not match the dataset")
        if pred.size == 0:
            return float("nan")
        return float(np.mean(pred == self._labels))

    def noise_rate(
        self, pseudo_labels: npt.ArrayLike, indices: npt.ArrayLike | None = None
    ) -> float:
        """Fraction of wrong pseudo-labels among ``indices`` (NaN when empty).

        ``pseudo_labels`` covers the whole dataset; ``indices`` selects a subset.
        """
        pred = np.asarray(pseudo_labels, dtype=np.int64)
        mask = self._mask(indices)
        if not mask.any():
            return float("nan")
        return float(np.mean(pred[mask] != self._labels[mask]))

    def class_noise_rate(
        self, pseudo_labels: npt.ArrayLike, classes: list[int] | tuple[int, ...]
    ) -> float:
        """Noise rate over samples whose true class is in ``classes``."""
        in_classes = np.isin(self._labels, np.asarray(classes, dtype=np.int64))
        return self.noise_rate(pseudo_labels, np.flatnonzero(in_classes))

    def per_class_accuracy(self, predictions: npt.ArrayLike) -> FloatArray:
        """Accuracy per true class; NaN for classes with no samples."""
        pred = np.asarray(predictions, dtype=np.int64)
        out = np.full(self.num_classes, np.nan)
        for k in range(self.num_classes):
            members = self._labels == k
            if members.any():
                out[k] = np.mean(pred[members] == k)
        return out


def feature_columns(dim: int) -> list[str]:
    return [f"f{i}" for i in range(dim)]


def dataset_frame(data: Dataset) -> pd.DataFrame:
    frame = pd.DataFrame(data.inputs, columns=feature_columns(data.input_dim))
    frame["label"] = data.labels
    frame["domain"] = data.domain
    return frame


def save_dataset(data: Dataset, path: str | Path) -> Path:
    """Write ``f0..f{D-1},label,domain`` with round-trip float formatting."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset_frame(data).to_csv(path, index=False, lineterminator="\n")
    logger.info("Dataset written", path=str(path), rows=len(data), domain=data.domain)
    return path


def _first_bad_row(columns: pd.DataFrame) -> int:
    numeric = columns.apply(lambda c: pd.to_numeric(c, errors="coerce"))
    return int(np.flatnonzero(numeric.isna().any(axis=1).to_numpy())[0])


def load_dataset(path: str | Path, num_classes: int | None = None) -> Dataset:
    """Read a dataset CSV.

    Args:
        path: CSV file written by :func:`save_dataset`.
        num_classes: Class count K. Labels at or above it are rejected. When
            omitted, K is one more than the largest label.

    Raises:
        FileNotFoundError: If the file does not exist.
        DatasetParseError: If the file is empty or malformed; ``line`` is the
            1-based file line of the offending row.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Dataset file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise DatasetParseError(f"{path}: file is empty", line=1) from e
    except pd.errors.ParserError as e:
        raise DatasetParseError(f"{path}: {e}") from e

    columns = list(frame.columns)
    if len(columns) < 3 or columns[-2:] != ["label", "domain"]:
        raise DatasetParseError(
            f"{path}: header must be f0,...,f{{D-1}},label,domain", line=1
        )
    dims = columns[:-2]
    if dims != feature_columns(len(dims)):
        raise DatasetParseError(f"{path}: feature columns must be f0..f{len(dims) - 1}", line=1)
    if frame.empty:
        raise DatasetParseError(f"{path}: no data rows", line=2)

    try:
        inputs = frame[dims].to_numpy(dtype=np.float64)
    except ValueError as e:
        row = _first_bad_row(frame[dims])
        raise DatasetParseError(
            f"{path}: non-numeric feature in row {row}", line=row + 2
        ) from e
    finite = np.isfinite(inputs).all(axis=1)
    if not finite.all():
        row = int(np.flatnonzero(~finite)[0])
        raise DatasetParseError(f"{path}: non-finite feature in row {row}", line=row + 2)

    label_numbers = pd.to_numeric(frame["label"], errors="coerce")
    integral = label_numbers.notna() & (label_numbers == label_numbers.round())
    if not integral.all():
        row = int(np.flatnonzero(~integral.to_numpy())[0])
        raise DatasetParseError(f"{path}: label in row {row} is not an integer", line=row + 2)
    labels = label_numbers.to_numpy(dtype=np.int64)
    k = num_classes if num_classes is not None else int(labels.max()) + 1
    out_of_range = (labels < 0) | (labels >= k)
    if out_of_range.any():
        row = int(np.flatnonzero(out_of_range)[0])
        raise DatasetParseError(
            f"{path}: label {labels[row]} in row {row} is outside [0, {k})",
            line=row + 2,
        )

    domains = frame["domain"].unique()
    if len(domains) != 1 or domains[0] not in DOMAINS:
        raise DatasetParseError(
            f"{path}: domain column must hold one of {DOMAINS}, found {list(domains)}"
        )
    return Dataset(inputs, labels, domains[0], k)
