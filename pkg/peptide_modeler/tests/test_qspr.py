from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import truncnorm

from peptide_modeler.app.core.errors import DatasetFormatError, TrainingError
from peptide_modeler.app.models.mixture import GaussianKernel, MixtureModel
from peptide_modeler.app.services.evaluation.metrics import evaluate_scores
from peptide_modeler.app.services.qspr.sampler import metropolis
from peptide_modeler.app.services.qspr.service import (
    init_mixture,
    mh_train,
    mixture_pdf,
    qspr_log_likelihood,
    qspr_score,
    score_matrix,
)

NAMES = ["net_charge", "nonpolar"]


def _ranks(rng, mean, n, names=NAMES, sd=5.0):
    a, b = (1 - mean) / sd, (100 - mean) / sd
    draws = truncnorm.rvs(a, b, loc=mean, scale=sd, size=(n, len(names)), random_state=rng)
    return [dict(zip(names, row)) for row in np.round(draws)]


def _random_model(rng, k=3, names=NAMES):
    states = {}
    for s in (0, 1):
        states[s] = {}
        for name in names:
            w = rng.dirichlet(np.ones(k))
            states[s][name] = [
                GaussianKernel(mean=float(m), sd=float(sd), weight=float(x))
                for m, sd, x in zip(rng.uniform(0, 100, k), rng.uniform(10, 30, k), w / w.sum())
            ]
    return MixtureModel(kernels=k, descriptors=list(names), states=states)


# ---- densities -------------------------------------------------------------------


def test_standard_normal_peak():
    assert mixture_pdf([GaussianKernel(mean=0, sd=1, weight=1)], 0.0) == pytest.approx(0.39894, abs=1e-5)


def test_symmetric_pair():
    kernels = [GaussianKernel(mean=-1, sd=0.7, weight=0.5), GaussianKernel(mean=1, sd=0.7, weight=0.5)]
    xs = np.linspace(-5, 5, 41)
    assert np.allclose(mixture_pdf(kernels, xs), mixture_pdf(kernels, -xs))


def test_density_integrates_to_one():
    kernels = [GaussianKernel(mean=20, sd=3, weight=0.3), GaussianKernel(mean=30, sd=4, weight=0.7)]
    total, _ = quad(lambda x: mixture_pdf(kernels, x), 20 - 8 * 4, 30 + 8 * 4, limit=200)
    assert total == pytest.approx(1.0, abs=1e-3)


# ---- initialization ----------------------------------------------------------------


def test_init_uniform_weights():
    model = init_mixture(3, NAMES, seed=1)
    for state in (0, 1):
        for name in NAMES:
            kernels = model.states[state][name]
            assert len(kernels) == 3
            assert all(k.weight == pytest.approx(1 / 3) for k in kernels)
            assert all(0 < k.sd <= 100 and 0 <= k.mean <= 100 for k in kernels)


def test_init_deterministic():
    assert init_mixture(4, NAMES, seed=8) == init_mixture(4, NAMES, seed=8)


@pytest.mark.parametrize("k", [0, 11])
def test_init_rejects_kernel_count(k):
    with pytest.raises(ValueError):
        init_mixture(k, NAMES, seed=0)


# ---- likelihoods and scores ----------------------------------------------------------


def test_single_descriptor_log_likelihood():
    model = _random_model(np.random.default_rng(0), names=["mass"])
    expected = np.log(mixture_pdf(model.states[1]["mass"], 42.0))
    assert qspr_log_likelihood(model, 1, {"mass": 42.0}) == pytest.approx(expected, abs=1e-12)


def test_log_likelihood_matches_product_of_densities():
    rng = np.random.default_rng(3)
    model = _random_model(rng)
    for r in _ranks(rng, 50, 20, sd=20):
        product = np.prod([mixture_pdf(model.states[0][n], r[n]) for n in NAMES])
        assert qspr_log_likelihood(model, 0, r) == pytest.approx(np.log(product), abs=1e-12)


def test_duplicated_descriptor_doubles_contribution():
    rng = np.random.default_rng(4)
    single = _random_model(rng, names=["a"])
    kernels = single.states
    doubled = MixtureModel(
        kernels=single.kernels,
        descriptors=["a", "b"],
        states={s: {"a": kernels[s]["a"], "b": kernels[s]["a"]} for s in (0, 1)},
    )
    r = {"a": 33.0, "b": 33.0}
    assert qspr_log_likelihood(doubled, 1, r) == pytest.approx(2 * qspr_log_likelihood(single, 1, {"a": 33.0}))


def test_identical_states_score_half():
    model = _random_model(np.random.default_rng(5))
    tied = model.model_copy(update={"states": {0: model.states[1], 1: model.states[1]}})
    assert qspr_score(tied, {"net_charge": 12, "nonpolar": 80}) == 0.5


def test_score_matches_brute_force():
    rng = np.random.default_rng(6)
    for _ in range(5):
        model = _random_model(rng)
        r = {"net_charge": float(rng.uniform(0, 100)), "nonpolar": float(rng.uniform(0, 100))}
        l1 = np.prod([mixture_pdf(model.states[1][n], r[n]) for n in NAMES])
        l0 = np.prod([mixture_pdf(model.states[0][n], r[n]) for n in NAMES])
        assert qspr_score(model, r) == pytest.approx(l1 / (l0 + l1), abs=1e-12)


def test_score_tends_to_one_when_inactive_state_vanishes():
    near = [GaussianKernel(mean=50, sd=1, weight=1)]
    far = [GaussianKernel(mean=0, sd=0.1, weight=1)]
    model = MixtureModel(kernels=1, descriptors=["x"], states={1: {"x": near}, 0: {"x": far}})
    assert qspr_score(model, {"x": 50}) == pytest.approx(1.0)


def test_missing_descriptor():
    model = _random_model(np.random.default_rng(7))
    with pytest.raises(DatasetFormatError):
        qspr_score(model, {"net_charge": 1.0})


# ---- sampler and training ----------------------------------------------------------


def test_flat_posterior_accepts_everything():
    chain = metropolis(lambda x: 0.0, np.zeros(3), np.ones(3), 200, np.random.default_rng(0))
    assert chain.acceptance_rate == 1.0
    assert not np.allclose(chain.samples[-1], 0.0)


def test_zero_steps_returns_model_unchanged():
    rng = np.random.default_rng(8)
    start = init_mixture(2, NAMES, seed=0)
    assert mh_train(start, _ranks(rng, 30, 10), _ranks(rng, 70, 10), steps=0) is start


def test_empty_dataset_is_an_error():
    with pytest.raises(TrainingError):
        mh_train(init_mixture(1, NAMES, seed=0), [], [{"net_charge": 1, "nonpolar": 1}], steps=10)


def test_single_kernel_recovers_mean_and_sd():
    rng = np.random.default_rng(9)
    a, b = (1 - 50) / 5, (100 - 50) / 5
    x = truncnorm.rvs(a, b, loc=50, scale=5, size=2000, random_state=rng)
    vectors = [{"x": float(v)} for v in x]
    model = mh_train(init_mixture(1, ["x"], seed=2), vectors, vectors, steps=1000, seed=3)
    kernel = model.states[1]["x"][0]
    assert kernel.mean == pytest.approx(50, abs=2)
    assert kernel.sd == pytest.approx(5, abs=2)
    assert 0 < model.training.acceptance_rate < 1


def test_training_deterministic():
    rng = np.random.default_rng(10)
    pos, neg = _ranks(rng, 30, 40), _ranks(rng, 70, 40)
    start = init_mixture(2, NAMES, seed=4)
    assert mh_train(start, pos, neg, steps=100, seed=5) == mh_train(start, pos, neg, steps=100, seed=5)


def test_separable_classes():
    rng = np.random.default_rng(11)
    train_pos, train_neg = _ranks(rng, 75, 500), _ranks(rng, 25, 500)
    test_pos, test_neg = _ranks(rng, 75, 500), _ranks(rng, 25, 500)
    model = mh_train(init_mixture(2, NAMES, seed=12), train_pos, train_neg, steps=3000, seed=13)

    def scores(vectors):
        return score_matrix(model, np.array([[v[n] for n in NAMES] for v in vectors]))

    result = evaluate_scores(scores(test_pos), scores(test_neg))
    assert result.confusion.accuracy >= 0.95
    assert np.all(np.isfinite(scores(test_pos)))
