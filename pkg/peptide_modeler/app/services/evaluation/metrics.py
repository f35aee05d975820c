from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from peptide_modeler.app.core.errors import EvaluationError
from peptide_modeler.app.models.evaluation import ConfusionSummary, CutoffChoice, EvaluationResult, RocCurve, RocPoint

DEFAULT_CUTOFFS = 1000


def _scores(values: Sequence[float], role: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise EvaluationError(f"{role} scores are empty")
    if not np.all(np.isfinite(arr)):
        raise EvaluationError(f"{role} scores contain non-finite values")
    return arr


def _rates(sorted_scores: np.ndarray, cutoffs: np.ndarray) -> np.ndarray:
    # fraction of scores >= cutoff
    return (sorted_scores.size - np.searchsorted(sorted_scores, cutoffs, side="left")) / sorted_scores.size


def roc(pos_scores: Sequence[float], neg_scores: Sequence[float], n_cutoffs: int = DEFAULT_CUTOFFS) -> RocCurve:
    """ROC over cutoffs evenly spaced on [min(0, lowest score), max score]; a score >= cutoff is called positive."""
    pos = np.sort(_scores(pos_scores, "positive"))
    neg = np.sort(_scores(neg_scores, "negative"))
    if n_cutoffs < 2:
        raise EvaluationError("an ROC needs at least 2 cutoffs")
    top = max(float(pos[-1]), float(neg[-1]))
    bottom = min(0.0, float(pos[0]), float(neg[0]))
    cutoffs = np.linspace(bottom, top, n_cutoffs)
    tpr = _rates(pos, cutoffs)
    fpr = _rates(neg, cutoffs)

    # area over the curve closed at (0, 0) and (1, 1)
    xs = np.concatenate(([0.0], fpr, [1.0]))
    ys = np.concatenate(([0.0], tpr, [1.0]))
    order = np.lexsort((ys, xs))
    auc = float(np.trapezoid(ys[order], xs[order]))
    points = [RocPoint(cutoff=float(c), fpr=float(f), tpr=float(t)) for c, f, t in zip(cutoffs, fpr, tpr)]
    return RocCurve(points=points, auc=min(max(auc, 0.0), 1.0))


def cutoff_objective(fpr: float | np.ndarray, tpr: float | np.ndarray) -> float | np.ndarray:
    """Distance to the ideal corner, with false positives weighted double."""
    return np.sqrt(2.0 * np.square(fpr) + np.square(1.0 - np.asarray(tpr)))


def best_cutoff(curve: RocCurve) -> CutoffChoice:
    cutoffs = np.array([p.cutoff for p in curve.points])
    fpr = np.array([p.fpr for p in curve.points])
    tpr = np.array([p.tpr for p in curve.points])
    objective = cutoff_objective(fpr, tpr)
    # lexsort keys run last-to-first: objective, then lower fpr, then higher cutoff
    i = int(np.lexsort((-cutoffs, fpr, objective))[0])
    return CutoffChoice(cutoff=float(cutoffs[i]), fpr=float(fpr[i]), tpr=float(tpr[i]), objective=float(objective[i]))


def matthews(tp: int, fp: int, tn: int, fn: int) -> float:
    denominator = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denominator == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denominator)


def confusion(pos_scores: Sequence[float], neg_scores: Sequence[float], cutoff: float) -> ConfusionSummary:
    pos = np.asarray(pos_scores, dtype=float)
    neg = np.asarray(neg_scores, dtype=float)
    tp = int(np.count_nonzero(pos >= cutoff))
    fp = int(np.count_nonzero(neg >= cutoff))
    fn = pos.size - tp
    tn = neg.size - fp
    total = tp + fp + tn + fn
    if total == 0:
        raise EvaluationError("confusion matrix needs at least one score")
    mcc = min(max(matthews(tp, fp, tn, fn), -1.0), 1.0)
    return ConfusionSummary(tp=tp, fp=fp, tn=tn, fn=fn, accuracy=(tp + tn) / total, mcc=mcc)


def evaluate_scores(
    pos_scores: Sequence[float], neg_scores: Sequence[float], n_cutoffs: int = DEFAULT_CUTOFFS
) -> EvaluationResult:
    curve = roc(pos_scores, neg_scores, n_cutoffs)
    choice = best_cutoff(curve)
    return EvaluationResult(roc=curve, cutoff=choice, confusion=confusion(pos_scores, neg_scores, choice.cutoff))
