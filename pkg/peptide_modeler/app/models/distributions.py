from __future__ import annotations

from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import norm

DistributionKind = Literal["exact", "normal_approx", "sampled"]


class DescriptorDistribution(BaseModel):
    """Distribution of one descriptor over a chemical space.

    Discrete kinds (exact, sampled) keep a sorted support with masses; the normal
    kind keeps its two moments. Quantile boundaries are filled in by
    `quantile_boundaries` and are what ranking reads.
    """

    descriptor: str
    kind: DistributionKind
    lengths: List[int]
    support: List[float] = Field(default_factory=list)
    masses: List[float] = Field(default_factory=list)
    mean: Optional[float] = None
    variance: Optional[float] = None
    sample_size: Optional[int] = None
    zero_fraction: Optional[float] = None
    zero_fraction_warning: bool = False
    quantiles: int = 0
    boundaries: List[float] = Field(default_factory=list)

    model_config = ConfigDict(extra="ignore", frozen=True)

    @model_validator(mode="after")
    def _check(self) -> "DescriptorDistribution":
        if not self.lengths:
            raise ValueError("distribution needs at least one length")
        if self.kind == "normal_approx":
            if self.mean is None or self.variance is None:
                raise ValueError("normal approximation needs mean and variance")
            if not self.variance > 0:
                raise ValueError("normal approximation needs variance > 0")
        else:
            if not self.support or len(self.support) != len(self.masses):
                raise ValueError("discrete distribution needs matching support and masses")
            if any(b < a for a, b in zip(self.support, self.support[1:])):
                raise ValueError("support must be sorted")
            if abs(float(np.sum(self.masses)) - 1.0) > 1e-9:
                raise ValueError("probability masses must sum to 1")
        if self.boundaries:
            if len(self.boundaries) != self.quantiles or self.quantiles < 1:
                raise ValueError("boundaries must hold exactly Q values")
            if any(b < a for a, b in zip(self.boundaries, self.boundaries[1:])):
                raise ValueError("boundaries must be nondecreasing")
        return self

    @property
    def is_discrete(self) -> bool:
        return self.kind != "normal_approx"

    def support_array(self) -> np.ndarray:
        return np.asarray(self.support, dtype=float)

    def mass_array(self) -> np.ndarray:
        return np.asarray(self.masses, dtype=float)

    def moments(self) -> tuple[float, float]:
        if not self.is_discrete:
            return float(self.mean), float(self.variance)  # type: ignore[arg-type]
        x, p = self.support_array(), self.mass_array()
        mu = float(np.dot(p, x))
        return mu, float(np.dot(p, (x - mu) ** 2))

    def cdf(self, x: float | np.ndarray) -> float | np.ndarray:
        if not self.is_discrete:
            return norm.cdf(x, loc=self.mean, scale=np.sqrt(self.variance))
        cum = np.cumsum(self.mass_array())
        idx = np.searchsorted(self.support_array(), x, side="right")
        padded = np.concatenate(([0.0], cum))
        out = padded[idx]
        return float(out) if np.ndim(out) == 0 else out


class DistributionSet(BaseModel):
    """Distributions written by one `space` run, looked up by descriptor and length."""

    quantiles: int
    distributions: List[DescriptorDistribution] = Field(default_factory=list)

    model_config = ConfigDict(extra="ignore")

    def descriptors(self) -> List[str]:
        seen: Dict[str, None] = {}
        for d in self.distributions:
            seen.setdefault(d.descriptor, None)
        return list(seen)

    def find(self, descriptor: str, length: int) -> Optional[DescriptorDistribution]:
        mixed: Optional[DescriptorDistribution] = None
        for d in self.distributions:
            if d.descriptor != descriptor:
                continue
            if d.lengths == [length]:
                return d
            if mixed is None and len(d.lengths) > 1 and length in d.lengths:
                mixed = d
        return mixed
