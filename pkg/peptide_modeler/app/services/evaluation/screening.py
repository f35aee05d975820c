from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from peptide_modeler.app.core.errors import EvaluationError
from peptide_modeler.app.models.evaluation import ScreenSummary


@dataclass(frozen=True)
class ScreenHit:
    sequence: str
    length: int
    score: float


def screen(
    sequences: Sequence[str], scores: Sequence[float], cutoff: float, min_length: int = 0
) -> Tuple[List[ScreenHit], ScreenSummary]:
    """Keep sequences of at least min_length residues scoring >= cutoff, best first."""
    if len(sequences) != len(scores):
        raise EvaluationError(f"{len(sequences)} sequences but {len(scores)} scores")
    values = np.asarray(scores, dtype=float)
    lengths = np.array([len(s) for s in sequences], dtype=int)
    eligible = lengths >= min_length
    keep = np.flatnonzero(eligible & (values >= cutoff))
    order = keep[np.argsort(-values[keep], kind="stable")]
    hits = [ScreenHit(sequences[i], int(lengths[i]), float(values[i])) for i in order]
    n_eligible = int(eligible.sum())
    summary = ScreenSummary(
        total=len(sequences),
        eligible=n_eligible,
        selected=len(hits),
        selected_fraction=len(hits) / n_eligible if n_eligible else 0.0,
        cutoff=cutoff,
        min_length=min_length,
    )
    return hits, summary
