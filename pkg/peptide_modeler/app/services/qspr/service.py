from __future__ import annotations

import logging
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from peptide_modeler.app.core.errors import DatasetFormatError, TrainingError
from peptide_modeler.app.models.mixture import MAX_KERNELS, GaussianKernel, MixtureModel, TrainingInfo
from peptide_modeler.app.services.qspr.sampler import metropolis

logger = logging.getLogger(__name__)

RankVector = Mapping[str, float]

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
SD_FLOOR = 0.1
MAX_INIT_DRAWS = 10

# random-walk proposal scales
MEAN_STEP = 2.0
LOG_SD_STEP = 0.1
LOG_WEIGHT_STEP = 0.1


def mixture_pdf(kernels: Sequence[GaussianKernel], x: float | np.ndarray) -> float | np.ndarray:
    means = np.array([k.mean for k in kernels])
    sds = np.array([k.sd for k in kernels])
    weights = np.array([k.weight for k in kernels])
    xs = np.asarray(x, dtype=float)
    density = np.sum(weights * norm.pdf(xs[..., None], loc=means, scale=sds), axis=-1)
    return float(density) if np.ndim(density) == 0 else density


def _log_mixture(x: np.ndarray, means: np.ndarray, sds: np.ndarray, log_weights: np.ndarray) -> np.ndarray:
    z = (x[:, None] - means) / sds
    comp = log_weights - np.log(sds) - LOG_SQRT_2PI - 0.5 * z * z
    top = comp.max(axis=1)
    return top + np.log(np.exp(comp - top[:, None]).sum(axis=1))


def init_mixture(k: int, names: Sequence[str], seed: int, quantiles: int = 100) -> MixtureModel:
    if not 1 <= k <= MAX_KERNELS:
        raise ValueError(f"kernel count must lie in [1, {MAX_KERNELS}], got {k}")
    if not names:
        raise ValueError("at least one descriptor name is required")
    rng = np.random.default_rng(seed)
    states: Dict[int, Dict[str, List[GaussianKernel]]] = {}
    for state in (0, 1):
        states[state] = {}
        for name in names:
            means, sds = _draw_kernels(rng, k, quantiles)
            states[state][name] = [GaussianKernel(mean=m, sd=s, weight=1.0 / k) for m, s in zip(means, sds)]
    return MixtureModel(kernels=k, quantiles=quantiles, descriptors=list(names), states=states, training=TrainingInfo(seed=seed))


def _draw_kernels(rng: np.random.Generator, k: int, quantiles: int) -> Tuple[np.ndarray, np.ndarray]:
    means = rng.uniform(0.0, quantiles, size=k)
    sds = quantiles * (1.0 - rng.random(k))
    return means, sds


def _rank_matrix(vectors: Sequence[RankVector], names: Sequence[str], role: str) -> np.ndarray:
    if not vectors:
        raise TrainingError(f"{role} dataset is empty")
    try:
        return np.array([[float(v[n]) for n in names] for v in vectors], dtype=float)
    except KeyError as e:
        raise DatasetFormatError(f"{role} rank vectors lack descriptor {e}") from None


class _ChainTarget:
    """Log-posterior of one (state, descriptor) mixture, over (means, log-sds, log-weights)."""

    def __init__(self, x: np.ndarray, k: int, quantiles: int):
        self.x = x
        self.k = k
        self.quantiles = quantiles
        self.log_sd_bounds = (np.log(SD_FLOOR), np.log(quantiles))

    def unpack(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = self.k
        means, log_sds, z = theta[:k], theta[k : 2 * k], theta[2 * k :]
        top = z.max()
        log_w = z - (top + np.log(np.exp(z - top).sum()))
        return means, np.exp(log_sds), np.exp(log_w)

    def __call__(self, theta: np.ndarray) -> float:
        k = self.k
        means, log_sds, z = theta[:k], theta[k : 2 * k], theta[2 * k :]
        if np.any(means < 0.0) or np.any(means > self.quantiles):
            return -np.inf
        lo, hi = self.log_sd_bounds
        if np.any(log_sds < lo) or np.any(log_sds > hi):
            return -np.inf
        top = z.max()
        log_w = z - (top + np.log(np.exp(z - top).sum()))
        # log-Gamma(1) coordinates make softmax(z) Dirichlet(1)
        prior = float(np.sum(z - np.exp(z))) if k > 1 else 0.0
        return prior + float(_log_mixture(self.x, means, np.exp(log_sds), log_w).sum())

    def pack(self, kernels: Sequence[GaussianKernel]) -> np.ndarray:
        means = [kn.mean for kn in kernels]
        log_sds = [np.log(kn.sd) for kn in kernels]
        z = [np.log(max(kn.weight, 1e-300)) for kn in kernels]
        return np.array(means + log_sds + z, dtype=float)

    def scales(self) -> np.ndarray:
        k = self.k
        weight_step = LOG_WEIGHT_STEP if k > 1 else 0.0
        return np.array([MEAN_STEP] * k + [LOG_SD_STEP] * k + [weight_step] * k)


def _posterior_mean(target: _ChainTarget, samples: np.ndarray) -> List[GaussianKernel]:
    k = target.k
    means = samples[:, :k]
    sds = np.exp(samples[:, k : 2 * k])
    z = samples[:, 2 * k :]
    weights = np.exp(z - z.max(axis=1, keepdims=True))
    weights /= weights.sum(axis=1, keepdims=True)
    # kernels are relabelled by mean in every sample before averaging
    order = np.argsort(means, axis=1, kind="stable")
    means = np.take_along_axis(means, order, axis=1).mean(axis=0)
    sds = np.take_along_axis(sds, order, axis=1).mean(axis=0)
    weights = np.take_along_axis(weights, order, axis=1).mean(axis=0)
    weights = weights / weights.sum()
    return [GaussianKernel(mean=float(m), sd=float(s), weight=float(w)) for m, s, w in zip(means, sds, weights)]


def mh_train(
    model: MixtureModel,
    positives: Sequence[RankVector],
    negatives: Sequence[RankVector],
    steps: int = 3000,
    seed: int = 0,
) -> MixtureModel:
    """Fit state 1 to positives and state 0 to negatives by Metropolis sampling.

    Each (state, descriptor) mixture is an independent chain; the returned
    kernels are posterior means over the second half of each chain.
    """
    names = model.descriptors
    data = {1: _rank_matrix(positives, names, "positive"), 0: _rank_matrix(negatives, names, "negative")}
    if steps == 0:
        return model

    k, Q = model.kernels, model.quantiles
    states: Dict[int, Dict[str, List[GaussianKernel]]] = {0: {}, 1: {}}
    acceptance: Dict[str, float] = {}
    accepted = proposed = 0
    burn_in = steps // 2
    for state in (1, 0):
        for d, name in enumerate(names):
            target = _ChainTarget(data[state][:, d], k, Q)
            rng = np.random.default_rng([seed, state, d])
            theta = target.pack(model.states[state][name])
            draws = 0
            while not np.isfinite(target(theta)):
                draws += 1
                if draws > MAX_INIT_DRAWS:
                    raise TrainingError(f"state {state}, {name}: no finite initialization after {MAX_INIT_DRAWS} draws")
                means, sds = _draw_kernels(rng, k, Q)
                theta = np.concatenate([means, np.log(sds), np.full(k, -np.log(k))])

            chain = metropolis(target, theta, target.scales(), steps, rng)
            states[state][name] = _posterior_mean(target, chain.samples[burn_in:])
            acceptance[f"{state}:{name}"] = chain.acceptance_rate
            accepted += chain.accepted
            proposed += chain.proposed
            logger.debug(f"Chain state={state} descriptor={name}: acceptance {chain.acceptance_rate:.3f}")

    info = TrainingInfo(
        steps=steps,
        seed=seed,
        burn_in=burn_in,
        acceptance_rate=accepted / proposed if proposed else 0.0,
        chain_acceptance=acceptance,
    )
    logger.info(f"Trained {k}-kernel mixture over {len(names)} descriptors: acceptance {info.acceptance_rate:.3f}")
    return model.model_copy(update={"states": states, "training": info})


def log_likelihood_matrix(model: MixtureModel, state: int, X: np.ndarray) -> np.ndarray:
    """Per-row log-likelihood of rank rows ordered as model.descriptors."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    total = np.zeros(X.shape[0])
    for d, name in enumerate(model.descriptors):
        means, sds, weights = model.kernel_arrays(state, name)
        with np.errstate(divide="ignore"):
            total += _log_mixture(X[:, d], means, sds, np.log(weights))
    return total


def rank_rows(model: MixtureModel, vectors: Sequence[RankVector]) -> np.ndarray:
    try:
        return np.array([[float(v[n]) for n in model.descriptors] for v in vectors], dtype=float).reshape(
            len(vectors), len(model.descriptors)
        )
    except KeyError as e:
        raise DatasetFormatError(f"rank vector lacks descriptor {e}") from None


def qspr_log_likelihood(model: MixtureModel, state: int, r: RankVector) -> float:
    return float(log_likelihood_matrix(model, state, rank_rows(model, [r]))[0])


def score_matrix(model: MixtureModel, X: np.ndarray) -> np.ndarray:
    return expit(log_likelihood_matrix(model, 1, X) - log_likelihood_matrix(model, 0, X))


def qspr_score(model: MixtureModel, r: RankVector) -> float:
    """P(state 1 | r) under equal state priors."""
    return float(score_matrix(model, rank_rows(model, [r]))[0])
