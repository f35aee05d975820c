from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np

from peptide_modeler.app.models.motif import SgdState

logger = logging.getLogger(__name__)

EPSILON = 1e-8


def project_simplex(x: np.ndarray) -> np.ndarray:
    """Clip negatives to 0 and renormalize; an all-zero result resets to uniform."""
    clipped = np.maximum(x, 0.0)
    total = clipped.sum()
    if not total > 0.0:
        logger.warning(f"Degenerate update over {x.size} coordinates; resetting the distribution to uniform")
        return np.full(x.size, 1.0 / x.size)
    return clipped / total


def sgd_loss(X: np.ndarray, m_obs: np.ndarray, N: float, l1_strength: float) -> float:
    """Squared count deviation plus the L1 penalty on the probabilities."""
    return float(np.sum((N * X - m_obs) ** 2) + l1_strength * np.sum(np.abs(X)))


def sgd_gradient(X: np.ndarray, m_obs: np.ndarray, N: float, l1_strength: float) -> np.ndarray:
    # valid on the simplex interior, where every coordinate is positive
    return 2.0 * N * (N * X - m_obs) + l1_strength


def sgd_update(
    X: np.ndarray,
    m_obs: np.ndarray,
    N: float,
    state: SgdState,
    rng: Optional[np.random.Generator] = None,
    epsilon: float = EPSILON,
) -> Tuple[np.ndarray, SgdState]:
    """One constrained per-coordinate step with the accumulated-gradient learning rate.

    With probability state.noise one uniformly chosen coordinate gains a
    pseudo-observation before the gradient is taken.
    """
    if N < 1:
        raise ValueError("an update needs at least one observation")
    X = np.asarray(X, dtype=float)
    m = np.array(m_obs, dtype=float)
    if state.noise > 0.0 and rng is not None and rng.random() < state.noise:
        m[rng.integers(m.size)] += 1.0

    g = sgd_gradient(X, m, N, state.l1_strength)
    G = state.G + g * g
    eta = 1.0 / np.sqrt(G + epsilon)
    return project_simplex(X - eta * g), SgdState(G, state.l1_strength, state.noise)
