from __future__ import annotations

from pathlib import Path
from typing import List, Optional

import numpy as np

from peptide_modeler.app.models.sequences import CANONICAL_AMINO_ACIDS, PeptideDataset


def random_sequences(rng: np.random.Generator, n: int, lo: int = 4, hi: int = 12) -> List[str]:
    letters = np.array(list(CANONICAL_AMINO_ACIDS))
    return ["".join(rng.choice(letters, size=int(rng.integers(lo, hi + 1)))) for _ in range(n)]


def write_sequences(path: Path, sequences: List[str]) -> Path:
    path.write_text("sequence\n" + "".join(f"{s}\n" for s in sequences), encoding="utf-8")
    return path


def dataset(sequences: List[str], label: Optional[int] = None) -> PeptideDataset:
    return PeptideDataset.from_sequences(sequences, label=label)
