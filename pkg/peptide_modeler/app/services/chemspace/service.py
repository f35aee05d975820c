from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from peptide_modeler.app.core.errors import CapacityError, DatasetFormatError, DegenerateDescriptorError
from peptide_modeler.app.models.distributions import DescriptorDistribution, DistributionSet
from peptide_modeler.app.models.properties import ResiduePropertyTable
from peptide_modeler.app.models.sequences import PeptideDataset
from peptide_modeler.app.services.chemspace.space import (
    ChemicalSpace,
    Descriptor,
    descriptor_function,
    iter_compounds,
    sample_compounds,
)
from peptide_modeler.app.services.descriptors.service import component_moments

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 10**7
ZERO_FRACTION_THRESHOLD = 0.5
SAMPLE_BLOCK = 1 << 16
# descriptor sums are merged after rounding so that summation order does not split atoms
VALUE_DECIMALS = 9
# stands in for +inf as the top boundary of a normal approximation
TOP_BOUNDARY = float(np.finfo(float).max)


def _descriptor_label(descriptor: Descriptor) -> str:
    if isinstance(descriptor, str):
        return descriptor
    return getattr(descriptor, "__name__", "custom")


def _histogram(values: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    keys = np.round(values, VALUE_DECIMALS) + 0.0
    support, inverse = np.unique(keys, return_inverse=True)
    return support, np.bincount(inverse.ravel(), weights=weights, minlength=len(support))


def _enumerate(
    space: ChemicalSpace, table: ResiduePropertyTable, descriptor: Descriptor, cap: int
) -> Tuple[np.ndarray, np.ndarray]:
    if space.size() > cap:
        raise CapacityError(
            f"chemical space holds {space.size()} sequences, above the enumeration cap of {cap}; "
            f"use sample_distribution instead"
        )
    fn = descriptor_function(descriptor, table, space.alphabet)
    values: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    for _, idx, w in iter_compounds(space):
        values.append(np.asarray(fn(idx), dtype=float))
        weights.append(w)
    support, mass = _histogram(np.concatenate(values), np.concatenate(weights))
    return support, mass / float(space.partition())


def prob_mass(
    space: ChemicalSpace,
    table: ResiduePropertyTable,
    descriptor: Descriptor,
    x: float,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    support, mass = _enumerate(space, table, descriptor, cap)
    hit = np.isclose(support, round(float(x), VALUE_DECIMALS), rtol=0.0, atol=10.0**-VALUE_DECIMALS)
    return float(mass[hit].sum())


def exact_distribution(
    space: ChemicalSpace,
    table: ResiduePropertyTable,
    descriptor: Descriptor,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> DescriptorDistribution:
    support, mass = _enumerate(space, table, descriptor, cap)
    logger.debug(f"Enumerated {space.size()} sequences for {_descriptor_label(descriptor)}: {len(support)} distinct values")
    return DescriptorDistribution(
        descriptor=_descriptor_label(descriptor),
        kind="exact",
        lengths=list(space.lengths),
        support=support.tolist(),
        masses=mass.tolist(),
    )


def _residue_moments(space: ChemicalSpace, table: ResiduePropertyTable, name: str) -> Tuple[float, float]:
    if space.residue_weights is None:
        return component_moments(table, name, space.alphabet)
    p = space.residue_probabilities()
    v = table.column(name, space.alphabet)
    mu = float(np.dot(p, v))
    return mu, float(np.dot(p, (v - mu) ** 2))


def normal_approx(space: ChemicalSpace, table: ResiduePropertyTable, name: str) -> DescriptorDistribution:
    """Sum-of-l-normals approximation: mean l*mu, variance l*sigma^2."""
    if len(space.lengths) != 1:
        raise CapacityError("the normal approximation is built per length; pass a single-length space")
    length = space.lengths[0]
    mu, sigma2 = _residue_moments(space, table, name)
    if sigma2 <= 0.0:
        raise DegenerateDescriptorError(f"descriptor '{name}' has zero variance over the alphabet")

    column = table.column(name, space.alphabet)
    zero_fraction = float(np.dot(space.residue_probabilities(), column == 0.0))
    warn = zero_fraction >= ZERO_FRACTION_THRESHOLD
    if warn:
        logger.warning(
            f"{name}: {zero_fraction:.0%} of residues contribute 0; the normal approximation at length {length} is unreliable"
        )
    return DescriptorDistribution(
        descriptor=name,
        kind="normal_approx",
        lengths=[length],
        mean=length * mu,
        variance=length * sigma2,
        zero_fraction=zero_fraction,
        zero_fraction_warning=warn,
    )


def sample_distribution(
    space: ChemicalSpace,
    table: ResiduePropertyTable,
    descriptor: Descriptor,
    n: int,
    seed: int,
) -> DescriptorDistribution:
    """Empirical distribution of n weighted draws from the space.

    Draws are generated in fixed blocks, each with its own counter-derived
    stream, so the result depends only on (seed, n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    fn = descriptor_function(descriptor, table, space.alphabet)
    values = np.empty(n, dtype=float)
    for block, start in enumerate(range(0, n, SAMPLE_BLOCK)):
        size = min(SAMPLE_BLOCK, n - start)
        rng = np.random.default_rng([seed, block])
        for positions, idx in sample_compounds(space, size, rng):
            values[start + positions] = fn(idx)
    support, counts = _histogram(values, np.ones(n))
    return DescriptorDistribution(
        descriptor=_descriptor_label(descriptor),
        kind="sampled",
        lengths=list(space.lengths),
        support=support.tolist(),
        masses=(counts / n).tolist(),
        sample_size=n,
    )


def quantile_boundaries(dist: DescriptorDistribution, Q: int = 100) -> DescriptorDistribution:
    """b_q = smallest x with CDF(x) >= q/Q (analytic inverse for the normal kind)."""
    if Q < 1:
        raise ValueError("Q must be >= 1")
    levels = np.arange(1, Q + 1) / Q
    if dist.is_discrete:
        support = dist.support_array()
        cum = np.cumsum(dist.mass_array())
        idx = np.searchsorted(cum, levels - 1e-12, side="left")
        bounds = support[np.minimum(idx, len(support) - 1)]
    else:
        bounds = norm.ppf(levels, loc=dist.mean, scale=np.sqrt(dist.variance))
        bounds[~np.isfinite(bounds)] = TOP_BOUNDARY
    return dist.model_copy(update={"quantiles": Q, "boundaries": bounds.tolist()})


def rank_values(dist: DescriptorDistribution, xs: np.ndarray) -> np.ndarray:
    """A value's rank is how many quantile boundaries it reaches, kept within [1, Q]."""
    if not dist.boundaries:
        raise ValueError(f"distribution for '{dist.descriptor}' has no quantile boundaries")
    reached = np.searchsorted(np.asarray(dist.boundaries), np.asarray(xs, dtype=float), side="right")
    return np.clip(reached, 1, dist.quantiles).astype(int)


def rank(dist: DescriptorDistribution, x: float) -> int:
    return int(rank_values(dist, np.asarray([x]))[0])


def _cdf_limits(dist: DescriptorDistribution, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if not dist.is_discrete:
        right = np.asarray(dist.cdf(points), dtype=float)
        return right, right
    cum = np.concatenate(([0.0], np.cumsum(dist.mass_array())))
    support = dist.support_array()
    right = cum[np.searchsorted(support, points, side="right")]
    left = cum[np.searchsorted(support, points, side="left")]
    return right, left


def cdf_distance(a: DescriptorDistribution, b: DescriptorDistribution) -> float:
    """Sup distance between two CDFs, checked at both limits of every atom."""
    atoms = [d.support_array() for d in (a, b) if d.is_discrete]
    if not atoms:
        raise ValueError("cdf_distance needs at least one discrete distribution")
    points = np.unique(np.concatenate(atoms))
    a_right, a_left = _cdf_limits(a, points)
    b_right, b_left = _cdf_limits(b, points)
    return float(max(np.max(np.abs(a_right - b_right)), np.max(np.abs(a_left - b_left))))


def rank_dataset(data: PeptideDataset, distributions: DistributionSet, names: Optional[Sequence[str]] = None) -> PeptideDataset:
    """Replace each descriptor value with its rank under the distribution for the entry's length."""
    cols = list(names) if names is not None else list(data.descriptor_names)
    values = data.descriptor_matrix(cols)
    lengths = np.array([len(e.peptide) for e in data.entries], dtype=int)
    ranks = np.zeros(values.shape, dtype=int)
    for d, name in enumerate(cols):
        for length in np.unique(lengths):
            dist = distributions.find(name, int(length))
            if dist is None:
                raise DatasetFormatError(f"no distribution for descriptor '{name}' at length {length}")
            rows = lengths == length
            ranks[rows, d] = rank_values(dist, values[rows, d])
    rows_out = [{n: int(ranks[i, d]) for d, n in enumerate(cols)} for i in range(len(data))]
    logger.info(f"Ranked {len(data)} peptides over {len(cols)} descriptors (Q={distributions.quantiles})")
    return data.with_descriptors(rows_out, cols)


def rank_histogram(data: PeptideDataset, quantiles: int) -> List[Tuple[str, int, int]]:
    """(descriptor, rank, count) for every rank 1..Q of every ranked column."""
    out: List[Tuple[str, int, int]] = []
    for name in data.descriptor_names:
        column = data.descriptor_matrix([name])[:, 0].astype(int)
        counts = np.bincount(column, minlength=quantiles + 1)
        out.extend((name, q, int(counts[q])) for q in range(1, quantiles + 1))
    return out
