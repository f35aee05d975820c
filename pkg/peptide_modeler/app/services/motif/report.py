from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from peptide_modeler.app.models.motif import MotifModel
from peptide_modeler.app.models.sequences import PeptideDataset
from peptide_modeler.app.services.motif.service import best_motifs, count_containing


@dataclass(frozen=True)
class MotifReportRow:
    motif: int
    consensus: str
    predict: int  # peptides for which this motif is the most likely class
    found: int  # peptides that literally contain the consensus string


def motif_report(model: MotifModel, data: PeptideDataset) -> List[MotifReportRow]:
    if model.motifs == 0:
        return []
    predicted = np.bincount(best_motifs(model, data), minlength=model.motifs)
    rows = []
    for m in range(model.motifs):
        consensus = model.consensus(m)
        rows.append(MotifReportRow(m, consensus, int(predicted[m]), count_containing(data, consensus)))
    return rows


def background_rows(model: MotifModel) -> List[Tuple[str, float]]:
    return list(zip(model.alphabet.symbols, model.background.tolist()))


def position_rows(model: MotifModel) -> List[Tuple[int, int, str, float]]:
    """(motif, 1-based position, symbol, probability) for every motif entry."""
    symbols = model.alphabet.symbols
    return [
        (m, j + 1, symbols[a], float(model.theta[m, j, a]))
        for m in range(model.motifs)
        for j in range(model.width)
        for a in range(model.alphabet.size)
    ]
