"""Run manifests and evaluation reports written next to command outputs."""

import hashlib
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

from .. import __version__
from ..data import Dataset
from ..numerics import GENERATOR_ID
from ..utils.logging import get_logger

UTC = timezone.utc

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"


def file_digest(path: str | Path) -> str:
    """SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunManifest(BaseModel):
    """Resolved configuration and input digests of one command invocation."""

    command: str = Field(description="Subcommand that produced the outputs")
    config: dict[str, Any] = Field(description="Fully resolved configuration")
    inputs: dict[str, str] = Field(
        default_factory=dict, description="Input file name -> SHA-256 digest"
    )
    outputs: dict[str, str] = Field(
        default_factory=dict, description="Output file name -> SHA-256 digest"
    )
    seed: int | None = Field(None, description="Seed of the run")
    generator: str = Field(GENERATOR_ID, description="PRNG identifier")
    version: str = Field(__version__, description="sfda-lab version")
    created_at: str = Field(
        default_factory=lambda: datetime.now(UTC).isoformat(timespec="seconds"),
        description="UTC creation timestamp",
    )

    @classmethod
    def for_run(
        cls,
        command: str,
        config: BaseModel | dict[str, Any],
        inputs: dict[str, Path] | None = None,
        seed: int | None = None,
    ) -> "RunManifest":
        resolved = (
            config.model_dump(mode="json") if isinstance(config, BaseModel) else config
        )
        return cls(
            command=command,
            config=resolved,
            inputs={name: file_digest(p) for name, p in (inputs or {}).items()},
            seed=seed,
        )

    def record_outputs(self, outputs: dict[str, Path]) -> None:
        for name, path in outputs.items():
            self.outputs[name] = file_digest(path)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.info("Manifest written", path=str(path), command=self.command)
        return path


def load_manifest(path: str | Path) -> RunManifest:
    return RunManifest.model_validate_json(Path(path).read_text(encoding="utf-8"))


class EvalReport(BaseModel):
    """Accuracy of one checkpoint on a labelled dataset."""

    accuracy: float
    per_class: list[float | None] = Field(
        description="Per true class; null for classes without samples"
    )
    per_class_average: float = Field(description="Unweighted mean over present classes")
    n: int

    @classmethod
    def from_predictions(cls, predictions: np.ndarray, data: Dataset) -> "EvalReport":
        oracle = data.oracle()
        per_class = oracle.per_class_accuracy(predictions)
        return cls(
            accuracy=oracle.accuracy(predictions),
            per_class=[None if np.isnan(v) else float(v) for v in per_class],
            per_class_average=float(np.nanmean(per_class)),
            n=len(data),
        )

    def per_class_array(self) -> np.ndarray:
        return np.array(
            [np.nan if v is None else v for v in self.per_class], dtype=np.float64
        )
