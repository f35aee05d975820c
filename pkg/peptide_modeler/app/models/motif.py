from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from peptide_modeler.app.core.errors import ModelFileError
from peptide_modeler.app.models.sequences import DEFAULT_ALPHABET, Alphabet

SIMPLEX_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Assignment:
    """Latent placement of one peptide: motif class and 1-based start, or neither."""

    motif: Optional[int]
    start: Optional[int]

    def __post_init__(self) -> None:
        if (self.motif is None) != (self.start is None):
            raise ValueError("assignment carries a start position iff it carries a motif")


@dataclass(frozen=True)
class SgdState:
    G: np.ndarray
    l1_strength: float = 1.0
    noise: float = 0.05

    def __post_init__(self) -> None:
        if np.any(self.G < 0):
            raise ValueError("accumulated squared gradients must be nonnegative")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise probability must lie in [0, 1]")
        if self.l1_strength < 0:
            raise ValueError("l1 strength must be >= 0")

    @classmethod
    def fresh(cls, size: int, l1_strength: float = 1.0, noise: float = 0.05) -> "SgdState":
        return cls(np.zeros(size), l1_strength, noise)


def _is_simplex(x: np.ndarray, axis: int = -1) -> bool:
    return bool(np.all(x >= 0) and np.all(np.abs(x.sum(axis=axis) - 1.0) <= SIMPLEX_TOLERANCE))


@dataclass(frozen=True, eq=False)
class MotifModel:
    """k motifs of width w (theta: k x w x A), one tied background and a class prior.

    The G arrays are the per-coordinate squared-gradient accumulators, kept so
    training can resume where it stopped.
    """

    motifs: int
    width: int
    theta: np.ndarray
    background: np.ndarray
    prior: np.ndarray
    alphabet: Alphabet = DEFAULT_ALPHABET
    l1_strength: float = 1.0
    noise: float = 0.05
    train_prior: bool = True
    iterations: int = 0
    seed: Optional[int] = None
    theta_g: np.ndarray = field(default=None)  # type: ignore[assignment]
    background_g: np.ndarray = field(default=None)  # type: ignore[assignment]
    prior_g: np.ndarray = field(default=None)  # type: ignore[assignment]
    trace: tuple = ()

    def __post_init__(self) -> None:
        k, w, A = self.motifs, self.width, self.alphabet.size
        if k < 0 or w < 0:
            raise ValueError("motif count and width must be >= 0")
        if (k == 0) != (w == 0):
            raise ValueError("width must be 0 exactly when there are no motifs")
        if self.theta.shape != (k, w, A) or self.background.shape != (A,) or self.prior.shape != (k,):
            raise ValueError(f"parameter shapes do not match k={k}, w={w}, A={A}")
        if not _is_simplex(self.background) or (k and not (_is_simplex(self.theta) and _is_simplex(self.prior))):
            raise ValueError("every motif position, the background and the prior must be probability vectors")
        if self.theta_g is None:
            object.__setattr__(self, "theta_g", np.zeros_like(self.theta))
        if self.background_g is None:
            object.__setattr__(self, "background_g", np.zeros_like(self.background))
        if self.prior_g is None:
            object.__setattr__(self, "prior_g", np.zeros_like(self.prior))

    @property
    def distribution_count(self) -> int:
        """Trainable categorical distributions: k*w motif positions plus one background."""
        return self.motifs * self.width + 1

    def consensus(self, m: int) -> str:
        symbols = self.alphabet.symbols
        return "".join(symbols[i] for i in np.argmax(self.theta[m], axis=1))

    def to_document(self) -> "MotifModelDocument":
        return MotifModelDocument(
            alphabet="".join(self.alphabet.symbols),
            motifs=self.motifs,
            width=self.width,
            l1_strength=self.l1_strength,
            noise=self.noise,
            train_prior=self.train_prior,
            iterations=self.iterations,
            seed=self.seed,
            theta=self.theta.tolist(),
            background=self.background.tolist(),
            prior=self.prior.tolist(),
            accumulators=MotifAccumulators(
                theta=self.theta_g.tolist(), background=self.background_g.tolist(), prior=self.prior_g.tolist()
            ),
            trace=list(self.trace),
        )


class MotifAccumulators(BaseModel):
    theta: List[List[List[float]]]
    background: List[float]
    prior: List[float]


class MotifModelDocument(BaseModel):
    """On-disk form of a MotifModel."""

    model_type: Literal["motif"] = "motif"
    alphabet: str
    motifs: int = Field(ge=0)
    width: int = Field(ge=0)
    l1_strength: float = Field(ge=0)
    noise: float = Field(ge=0, le=1)
    train_prior: bool = True
    iterations: int = Field(default=0, ge=0)
    seed: Optional[int] = None
    theta: List[List[List[float]]]
    background: List[float]
    prior: List[float]
    accumulators: MotifAccumulators
    trace: List[float] = Field(default_factory=list)

    model_config = ConfigDict(extra="ignore", ser_json_inf_nan="constants")

    @model_validator(mode="after")
    def _check(self) -> "MotifModelDocument":
        if len(self.theta) != self.motifs or any(len(pos) != self.width for pos in self.theta):
            raise ValueError(f"theta does not hold {self.motifs} motifs of width {self.width}")
        return self

    def to_model(self) -> MotifModel:
        alphabet = Alphabet.from_letters(self.alphabet)
        k, w, A = self.motifs, self.width, alphabet.size
        try:
            return MotifModel(
                motifs=k,
                width=w,
                theta=np.asarray(self.theta, dtype=float).reshape(k, w, A),
                background=np.asarray(self.background, dtype=float),
                prior=np.asarray(self.prior, dtype=float).reshape(k),
                alphabet=alphabet,
                l1_strength=self.l1_strength,
                noise=self.noise,
                train_prior=self.train_prior,
                iterations=self.iterations,
                seed=self.seed,
                theta_g=np.asarray(self.accumulators.theta, dtype=float).reshape(k, w, A),
                background_g=np.asarray(self.accumulators.background, dtype=float),
                prior_g=np.asarray(self.accumulators.prior, dtype=float).reshape(k),
                trace=tuple(self.trace),
            )
        except ValueError as e:
            raise ModelFileError(f"invalid motif model: {e}") from e
