"""Trustworthy / untrustworthy partition of the target domain."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ..errors import UsageError
from ..numerics import IntArray
from ..utils.logging import get_logger
from .prototypes import PseudoLabelSet

logger = get_logger(__name__)

SPLIT_COLUMNS = ["index", "hard", "refined", "entropy_norm", "subset"]


@dataclass(frozen=True, eq=False)
class SubsetSplit:
    """Index partition into ``D_tt`` and ``D_ut`` with ``r = |D_tt| / n``."""

    trustworthy: IntArray
    untrustworthy: IntArray
    r: float

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "SubsetSplit":
        n = int(mask.shape[0])
        if n == 0:
            raise UsageError("cannot split an empty target domain")
        tt = np.flatnonzero(mask).astype(np.int64)
        ut = np.flatnonzero(~mask).astype(np.int64)
        tt.setflags(write=False)
        ut.setflags(write=False)
        return cls(tt, ut, tt.size / n)

    def __len__(self) -> int:
        return int(self.trustworthy.size + self.untrustworthy.size)

    @property
    def tt_size(self) -> int:
        return int(self.trustworthy.size)

    @property
    def ut_size(self) -> int:
        return int(self.untrustworthy.size)

    def mask(self) -> np.ndarray:
        out = np.zeros(len(self), dtype=bool)
        out[self.trustworthy] = True
        return out


def split_trustworthy(pl: PseudoLabelSet, tau_norm: float) -> SubsetSplit:
    """``D_tt`` holds samples with normalized entropy below ``tau_norm`` whose
    classifier label equals their refined prototype label.

    Raises:
        UsageError: If ``tau_norm`` is outside (0, 1] or labels are unrefined.
    """
    if not 0.0 < tau_norm <= 1.0:
        raise UsageError(f"tau_norm must lie in (0, 1], got {tau_norm}")
    confident = pl.entropy_norm < tau_norm
    return SubsetSplit.from_mask(confident & pl.consistent())


def unfiltered_split(pl: PseudoLabelSet) -> SubsetSplit:
    """Every sample trusted, labelled by its raw pseudo-label."""
    return SubsetSplit.from_mask(np.ones(len(pl), dtype=bool))


def split_frame(pl: PseudoLabelSet, split: SubsetSplit) -> pd.DataFrame:
    refined = pl.refined if pl.refined is not None else np.full(len(pl), -1)
    return pd.DataFrame(
        {
            "index": np.arange(len(pl)),
            "hard": pl.hard,
            "refined": refined,
            "entropy_norm": pl.entropy_norm,
            "subset": np.where(split.mask(), "tt", "ut"),
        },
        columns=SPLIT_COLUMNS,
    )


def save_split_dump(pl: PseudoLabelSet, split: SubsetSplit, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    split_frame(pl, split).to_csv(path, index=False, lineterminator="\n")
    logger.debug("Split dump written", path=str(path), tt=split.tt_size)
    return path
