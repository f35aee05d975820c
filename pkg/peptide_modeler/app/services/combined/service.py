from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Mapping, Sequence, Tuple

import numpy as np

from peptide_modeler.app.core.errors import CalibrationError, DatasetFormatError, EvaluationError
from peptide_modeler.app.models.combined import CombinedModel, Normalizers
from peptide_modeler.app.models.evaluation import EvaluationResult
from peptide_modeler.app.models.mixture import MixtureModel
from peptide_modeler.app.models.motif import MotifModel
from peptide_modeler.app.models.sequences import DatasetEntry, Peptide, PeptideDataset
from peptide_modeler.app.services.evaluation.metrics import DEFAULT_CUTOFFS, evaluate_scores
from peptide_modeler.app.services.motif.service import sequence_log_likelihoods
from peptide_modeler.app.services.qspr.service import score_matrix

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 101


def weight_grid(size: int = DEFAULT_GRID_SIZE) -> List[float]:
    if size < 1:
        raise ValueError("weight grid needs at least one point")
    if size == 1:
        return [0.0]
    return np.linspace(0.0, 1.0, size).tolist()


def half_log_likelihoods(qspr: MixtureModel, motif: MotifModel, data: PeptideDataset) -> Tuple[np.ndarray, np.ndarray]:
    """Per-entry log-likelihood of each half: log P(active | ranks) and log P(sequence)."""
    X = data.descriptor_matrix(qspr.descriptors)
    with np.errstate(divide="ignore"):
        qspr_log = np.log(score_matrix(qspr, X))
    return qspr_log, sequence_log_likelihoods(motif, data)


def calibrate(qspr: MixtureModel, motif: MotifModel, reference: PeptideDataset) -> Normalizers:
    if len(reference) == 0:
        raise CalibrationError("calibration needs a nonempty reference dataset")
    qspr_log, motif_log = half_log_likelihoods(qspr, motif, reference)
    for half, values in (("QSPR", qspr_log), ("motif", motif_log)):
        if not np.any(np.isfinite(values)):
            raise CalibrationError(f"every {half} likelihood over '{reference.provenance}' is zero")
    normalizers = Normalizers(
        qspr_log_max=float(np.max(qspr_log)),
        motif_log_max=float(np.max(motif_log)),
        reference=reference.provenance,
        reference_size=len(reference),
    )
    logger.info(f"Calibrated on {len(reference)} reference entries from '{reference.provenance}'")
    return normalizers


def normalized_halves(model: CombinedModel, data: PeptideDataset) -> Tuple[np.ndarray, np.ndarray]:
    norms = model.require_normalizers()
    qspr_log, motif_log = half_log_likelihoods(model.qspr, model.motif_model(), data)
    return np.exp(qspr_log - norms.qspr_log_max), np.exp(motif_log - norms.motif_log_max)


def blend(qspr_part: np.ndarray, motif_part: np.ndarray, weight: float) -> np.ndarray:
    return (1.0 - weight) * qspr_part + weight * motif_part


def combined_scores(model: CombinedModel, data: PeptideDataset) -> np.ndarray:
    return blend(*normalized_halves(model, data), model.weight)


def combined_score(model: CombinedModel, p: Peptide, r: Mapping[str, float]) -> float:
    names = tuple(model.qspr.descriptors)
    missing = [n for n in names if n not in r]
    if missing:
        raise DatasetFormatError(f"rank vector lacks descriptors: {', '.join(missing)}")
    entry = PeptideDataset((DatasetEntry(p, None, {n: float(r[n]) for n in names}),), "query", names)
    return float(combined_scores(model, entry)[0])


@dataclass(frozen=True)
class WeightSweepPoint:
    weight: float
    result: EvaluationResult


def weight_sweep(
    model: CombinedModel,
    positives: PeptideDataset,
    negatives: PeptideDataset,
    grid: Sequence[float],
    n_cutoffs: int = DEFAULT_CUTOFFS,
    max_workers: int = 1,
) -> List[WeightSweepPoint]:
    """Evaluate the calibrated halves at every weight; rows follow the grid order."""
    if not grid:
        raise EvaluationError("weight grid is empty")
    if any(not 0.0 <= w <= 1.0 for w in grid):
        raise EvaluationError("weights must lie in [0, 1]")
    if len(positives) == 0 or len(negatives) == 0:
        raise EvaluationError("weight sweep needs positive and negative evaluation sets")
    pos_q, pos_m = normalized_halves(model, positives)
    neg_q, neg_m = normalized_halves(model, negatives)

    def evaluate(weight: float) -> WeightSweepPoint:
        scores = evaluate_scores(blend(pos_q, pos_m, weight), blend(neg_q, neg_m, weight), n_cutoffs)
        return WeightSweepPoint(float(weight), scores)

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as executor:
        points = list(executor.map(evaluate, grid))
    best = select_weight(points)
    logger.info(f"Weight sweep over {len(points)} points: best accuracy {best.result.confusion.accuracy:.3f} at W={best.weight:.2f}")
    return points


def select_weight(points: Sequence[WeightSweepPoint]) -> WeightSweepPoint:
    """Highest accuracy; ties go to the smaller motif weight."""
    return max(points, key=lambda p: (p.result.confusion.accuracy, -p.weight))
