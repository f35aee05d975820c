from __future__ import annotations

import logging
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from peptide_modeler.app.core.errors import DatasetFormatError, TrainingError
from peptide_modeler.app.models.evaluation import ConfusionSummary, SvmModel
from peptide_modeler.app.services.evaluation.metrics import DEFAULT_CUTOFFS, best_cutoff, confusion, roc

logger = logging.getLogger(__name__)

DEFAULT_EPOCHS = 3000
DEFAULT_REGULARIZATION = 1e-3

RankVector = Mapping[str, float]


def _matrix(vectors: Sequence[RankVector], names: Sequence[str], role: str) -> np.ndarray:
    rows = []
    for i, v in enumerate(vectors):
        if set(v) != set(names):
            raise DatasetFormatError(f"{role} vector {i} has descriptors {sorted(v)}, expected {sorted(names)}")
        rows.append([float(v[n]) for n in names])
    return np.array(rows, dtype=float).reshape(len(rows), len(names))


def _features(model: SvmModel, X: np.ndarray) -> np.ndarray:
    scaled = (X - np.asarray(model.feature_mean)) / np.asarray(model.feature_scale)
    return np.hstack([scaled, np.ones((len(X), 1))])


def decision_values(model: SvmModel, X: np.ndarray) -> np.ndarray:
    return _features(model, X) @ np.asarray(model.weights)


def svm_train(
    positives: Sequence[RankVector],
    negatives: Sequence[RankVector],
    epochs: int = DEFAULT_EPOCHS,
    regularization: float = DEFAULT_REGULARIZATION,
    seed: int = 0,
    names: Optional[Sequence[str]] = None,
) -> SvmModel:
    """Hinge loss with L2 penalty, one sampled example per step (learning rate 1/(lambda t))."""
    if not positives or not negatives:
        raise TrainingError("SVM training needs both positive and negative examples")
    if epochs < 1:
        raise TrainingError("epochs must be >= 1")
    names = list(names) if names is not None else list(positives[0])
    X = np.vstack([_matrix(positives, names, "positive"), _matrix(negatives, names, "negative")])
    y = np.concatenate([np.ones(len(positives)), -np.ones(len(negatives))])

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0.0] = 1.0
    model = SvmModel(
        descriptors=names,
        weights=[0.0] * (len(names) + 1),
        feature_mean=mean.tolist(),
        feature_scale=scale.tolist(),
        regularization=regularization,
        epochs=epochs,
        seed=seed,
    )
    F = _features(model, X)
    w = np.zeros(F.shape[1])
    radius = 1.0 / np.sqrt(regularization)
    rng = np.random.default_rng(seed)
    picks = rng.integers(len(y), size=epochs)
    for t, i in enumerate(picks, start=1):
        eta = 1.0 / (regularization * t)
        margin = y[i] * (F[i] @ w)
        w *= 1.0 - eta * regularization
        if margin < 1.0:
            w += eta * y[i] * F[i]
        norm = np.linalg.norm(w)
        if norm > radius:
            w *= radius / norm

    train = F @ w
    shift = float(train.min())
    trained = model.model_copy(update={"weights": w.tolist(), "decision_shift": shift})
    pos_train, neg_train = train[y > 0] - shift, train[y < 0] - shift
    cutoff = best_cutoff(roc(pos_train, neg_train, DEFAULT_CUTOFFS)).cutoff
    logger.info(f"Trained linear SVM on {len(y)} examples over {len(names)} descriptors")
    return trained.model_copy(update={"cutoff": cutoff})


def svm_scores(model: SvmModel, vectors: Sequence[RankVector]) -> np.ndarray:
    """Decision values shifted so training scores start at 0."""
    return decision_values(model, _matrix(vectors, model.descriptors, "scored")) - model.decision_shift


def svm_baseline(
    train_pos: Sequence[RankVector],
    train_neg: Sequence[RankVector],
    test_pos: Sequence[RankVector],
    test_neg: Sequence[RankVector],
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    regularization: float = DEFAULT_REGULARIZATION,
) -> Tuple[SvmModel, ConfusionSummary]:
    """Train on the training sets and score the test sets at the cutoff chosen on training data."""
    model = svm_train(train_pos, train_neg, epochs, regularization, seed)
    summary = confusion(svm_scores(model, test_pos), svm_scores(model, test_neg), model.cutoff)  # type: ignore[arg-type]
    return model, summary
