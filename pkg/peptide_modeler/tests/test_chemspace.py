from __future__ import annotations

import logging

import numpy as np
import pytest

from peptide_modeler.app.core.errors import CapacityError, DatasetFormatError, DegenerateDescriptorError
from peptide_modeler.app.models.distributions import DescriptorDistribution, DistributionSet
from peptide_modeler.app.services.chemspace.service import (
    cdf_distance,
    exact_distribution,
    normal_approx,
    prob_mass,
    quantile_boundaries,
    rank,
    rank_dataset,
    rank_histogram,
    rank_values,
    sample_distribution,
)
from peptide_modeler.app.services.chemspace.space import ChemicalSpace
from peptide_modeler.app.services.descriptors.service import annotate_dataset, component_moments
from peptide_modeler.tests.helpers import dataset


def _boundaries(values, Q):
    return DescriptorDistribution(
        descriptor="charged_groups",
        kind="exact",
        lengths=[1],
        support=sorted(set(values)),
        masses=[1.0 / len(set(values))] * len(set(values)),
        quantiles=Q,
        boundaries=list(values),
    )


# ---- space weights -------------------------------------------------------------


def test_uniform_partition():
    assert ChemicalSpace.single(3).partition() == 8000


def test_longest_two_lengths_carry_nearly_everything():
    space = ChemicalSpace.up_to(6)
    assert space.top_lengths_fraction(2) >= 1 - 1 / 20**2


def test_space_rejects_bad_weights():
    with pytest.raises(ValueError):
        ChemicalSpace((3,), residue_weights=(1.0,) * 19)


# ---- enumeration -----------------------------------------------------------------


def test_single_compound_indicator_mass(table):
    target = np.array([4, 5, 6])
    indicator = lambda idx: np.all(idx == target, axis=1).astype(float)
    assert prob_mass(ChemicalSpace.single(3), table, indicator, 1.0) == pytest.approx(1 / 8000)


def test_unit_length_net_charge(table):
    positive = sum(1 for row in table.rows.values() if row.charge == 1)
    assert prob_mass(ChemicalSpace.single(1), table, "net_charge", 1.0) == pytest.approx(positive / 20)


def test_constant_descriptor_has_one_atom(table):
    dist = exact_distribution(ChemicalSpace.single(2), table, lambda idx: np.zeros(len(idx)))
    assert dist.support == [0.0]
    assert dist.masses == [1.0]


def test_exact_moments_are_sums_of_residue_moments(table):
    dist = exact_distribution(ChemicalSpace.single(3), table, "mass")
    mu, sigma2 = component_moments(table, "mass")
    mean, variance = dist.moments()
    assert sum(dist.masses) == pytest.approx(1.0, abs=1e-9)
    assert mean == pytest.approx(3 * mu, rel=1e-9)
    assert variance == pytest.approx(3 * sigma2, rel=1e-9)


def test_enumeration_cap(table):
    with pytest.raises(CapacityError, match="sample_distribution"):
        exact_distribution(ChemicalSpace.single(3), table, "mass", cap=1000)


def test_weighted_enumeration(table):
    weights = tuple([1.0] + [0.0] * 19)
    space = ChemicalSpace((2,), residue_weights=weights)
    assert prob_mass(space, table, "mass", 2 * table.rows["A"].mass) == pytest.approx(1.0)


# ---- normal approximation --------------------------------------------------------


def test_normal_single_length(table):
    mu, sigma2 = component_moments(table, "net_charge")
    dist = normal_approx(ChemicalSpace.single(1), table, "net_charge")
    assert (dist.mean, dist.variance) == (pytest.approx(mu), pytest.approx(sigma2))


def test_normal_fits_mass_at_three(table):
    space = ChemicalSpace.single(3)
    distance = cdf_distance(normal_approx(space, table, "mass"), exact_distribution(space, table, "mass"))
    assert distance < 0.05


def test_normal_fails_aromatic_at_three(table, caplog):
    space = ChemicalSpace.single(3)
    with caplog.at_level(logging.WARNING):
        approx = normal_approx(space, table, "aromatic")
    assert approx.zero_fraction_warning
    assert "unreliable" in caplog.text
    assert cdf_distance(approx, exact_distribution(space, table, "aromatic")) > 0.10


def test_normal_degenerate(table):
    only_alanine = ChemicalSpace((2,), residue_weights=tuple([1.0] + [0.0] * 19))
    with pytest.raises(DegenerateDescriptorError):
        normal_approx(only_alanine, table, "mass")


# ---- sampling -------------------------------------------------------------------


def test_single_draw(table):
    dist = sample_distribution(ChemicalSpace.single(3), table, "mass", 1, seed=0)
    assert len(dist.support) == 1


def test_sampled_mean_within_three_standard_errors(table):
    n = 100_000
    mu, sigma2 = component_moments(table, "mass")
    mean, _ = sample_distribution(ChemicalSpace.single(3), table, "mass", n, seed=7).moments()
    assert abs(mean - 3 * mu) < 3 * np.sqrt(3 * sigma2 / n)


def test_sampling_deterministic(table):
    space = ChemicalSpace((2, 3))
    a = sample_distribution(space, table, "net_charge", 5000, seed=3)
    b = sample_distribution(space, table, "net_charge", 5000, seed=3)
    assert a == b


# ---- quantiles and ranks ---------------------------------------------------------


def test_rank_worked_example():
    dist = _boundaries([5, 6, 7, 15], 4)
    assert [rank(dist, x) for x in (3, 7, 13)] == [1, 3, 3]


def test_rank_above_top_boundary_is_q():
    assert rank(_boundaries([5, 6, 7, 15], 4), 99) == 4


def test_quantiles_of_uniform_hundred():
    values = list(range(1, 101))
    dist = DescriptorDistribution(descriptor="x", kind="exact", lengths=[1], support=values, masses=[0.01] * 100)
    assert quantile_boundaries(dist, 4).boundaries == [25, 50, 75, 100]
    assert quantile_boundaries(dist, 1).boundaries == [100]


def test_rank_counts_reached_boundaries():
    values = list(range(1, 101))
    dist = quantile_boundaries(
        DescriptorDistribution(descriptor="x", kind="exact", lengths=[1], support=values, masses=[0.01] * 100), 4
    )
    ranks = rank_values(dist, np.asarray(values, dtype=float))
    # below the second boundary everything shares rank 1; only the top atom reaches rank Q
    assert np.bincount(ranks, minlength=5)[1:].tolist() == [49, 25, 25, 1]


def test_boundaries_nondecreasing(table):
    for name in ("mass", "net_charge", "aromatic"):
        for dist in (exact_distribution(ChemicalSpace.single(2), table, name), normal_approx(ChemicalSpace.single(2), table, name)):
            b = np.asarray(quantile_boundaries(dist, 100).boundaries)
            assert np.all(np.diff(b) >= 0)


def test_ranks_nearly_uniform_over_enumerated_space(table):
    space = ChemicalSpace.single(3)
    dist = quantile_boundaries(exact_distribution(space, table, "mass"), 100)
    assert len(dist.support) >= 100
    idx = np.stack(np.unravel_index(np.arange(8000), (20, 20, 20)), axis=1)
    values = table.column("mass")[idx].sum(axis=1)
    freq = np.bincount(rank_values(dist, np.round(values, 9)), minlength=101)[1:] / 8000
    assert np.all(np.abs(freq - 0.01) <= 0.03)


def test_rank_dataset_by_length(table):
    data = annotate_dataset(dataset(["KK", "DDD", "AAA"]), table, ["net_charge"])
    dists = DistributionSet(
        quantiles=10,
        distributions=[
            quantile_boundaries(exact_distribution(ChemicalSpace.single(l), table, "net_charge"), 10) for l in (2, 3)
        ],
    )
    ranked = rank_dataset(data, dists)
    ranks = ranked.descriptor_matrix()[:, 0]
    assert ranks[0] == 10
    assert ranks[1] < ranks[2]
    assert all(1 <= r <= 10 for r in ranks)
    histogram = rank_histogram(ranked, 10)
    assert len(histogram) == 10
    assert sum(count for _, _, count in histogram) == 3


def test_rank_dataset_missing_length(table):
    data = annotate_dataset(dataset(["KKKK"]), table, ["net_charge"])
    dists = DistributionSet(quantiles=4, distributions=[quantile_boundaries(exact_distribution(ChemicalSpace.single(2), table, "net_charge"), 4)])
    with pytest.raises(DatasetFormatError, match="length 4"):
        rank_dataset(data, dists)


def test_mixed_length_lookup(table):
    mixed = quantile_boundaries(exact_distribution(ChemicalSpace((1, 2)), table, "net_charge"), 4)
    dists = DistributionSet(quantiles=4, distributions=[mixed])
    assert dists.find("net_charge", 2) is mixed
    assert dists.find("net_charge", 3) is None
