from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Iterator, Optional, Tuple, Union

import numpy as np

from peptide_modeler.app.models.properties import ResiduePropertyTable
from peptide_modeler.app.models.sequences import DEFAULT_ALPHABET, Alphabet

# f(residue index matrix of shape (n, l)) -> descriptor values of shape (n,)
DescriptorFn = Callable[[np.ndarray], np.ndarray]
Descriptor = Union[str, DescriptorFn]

ENUMERATION_CHUNK = 1 << 20


@dataclass(frozen=True)
class ChemicalSpace:
    """All sequences over `alphabet` with lengths in `lengths`.

    A compound's weight is the product of its residues' weights times its
    length's weight; with no weights given every sequence weighs 1, so a single
    length l has partition value A**l.
    """

    lengths: Tuple[int, ...]
    alphabet: Alphabet = DEFAULT_ALPHABET
    residue_weights: Optional[Tuple[float, ...]] = None
    length_weights: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if not self.lengths or any(l < 1 for l in self.lengths):
            raise ValueError("chemical space lengths must be >= 1")
        if len(set(self.lengths)) != len(self.lengths):
            raise ValueError("chemical space lengths must be distinct")
        if self.residue_weights is not None:
            if len(self.residue_weights) != self.alphabet.size:
                raise ValueError("residue_weights must have one entry per symbol")
            if any(w < 0 for w in self.residue_weights) or sum(self.residue_weights) <= 0:
                raise ValueError("residue weights must be nonnegative with a positive sum")
        if self.length_weights is not None:
            if len(self.length_weights) != len(self.lengths):
                raise ValueError("length_weights must have one entry per length")
            if any(w < 0 for w in self.length_weights) or sum(self.length_weights) <= 0:
                raise ValueError("length weights must be nonnegative with a positive sum")

    @classmethod
    def single(cls, length: int, alphabet: Alphabet = DEFAULT_ALPHABET) -> "ChemicalSpace":
        return cls((length,), alphabet)

    @classmethod
    def up_to(cls, max_length: int, alphabet: Alphabet = DEFAULT_ALPHABET) -> "ChemicalSpace":
        return cls(tuple(range(1, max_length + 1)), alphabet)

    @property
    def is_uniform(self) -> bool:
        return self.residue_weights is None and self.length_weights is None

    def residue_weight_array(self) -> np.ndarray:
        if self.residue_weights is None:
            return np.ones(self.alphabet.size)
        return np.asarray(self.residue_weights, dtype=float)

    def residue_probabilities(self) -> np.ndarray:
        w = self.residue_weight_array()
        return w / w.sum()

    def size(self) -> int:
        return sum(self.alphabet.size**l for l in self.lengths)

    def length_mass(self) -> Dict[int, float | int]:
        """Total compound weight carried by each length."""
        if self.is_uniform:
            return {l: self.alphabet.size**l for l in self.lengths}
        per_residue = float(self.residue_weight_array().sum())
        lw = self.length_weights or tuple(1.0 for _ in self.lengths)
        return {l: w * per_residue**l for l, w in zip(self.lengths, lw)}

    def partition(self) -> float | int:
        return sum(self.length_mass().values())

    def length_probabilities(self) -> np.ndarray:
        mass = self.length_mass()
        total = self.partition()
        return np.array([mass[l] / total for l in self.lengths], dtype=float)

    def top_lengths_fraction(self, n: int = 2) -> float:
        """Weight fraction carried by the n longest lengths."""
        mass = self.length_mass()
        top = sorted(self.lengths, reverse=True)[:n]
        return float(sum(mass[l] for l in top) / self.partition())


def descriptor_function(descriptor: Descriptor, table: ResiduePropertyTable, alphabet: Alphabet) -> DescriptorFn:
    if callable(descriptor):
        return descriptor
    column = table.column(descriptor, alphabet)
    return lambda idx: column[idx].sum(axis=1)


def iter_compounds(space: ChemicalSpace, chunk: int = ENUMERATION_CHUNK) -> Iterator[Tuple[int, np.ndarray, np.ndarray]]:
    """Yield (length, residue index block, compound weights) covering the whole space."""
    residue_w = space.residue_weight_array()
    A = space.alphabet.size
    lw = space.length_weights or tuple(1.0 for _ in space.lengths)
    for length, length_weight in zip(space.lengths, lw):
        total = A**length
        for start in range(0, total, chunk):
            flat = np.arange(start, min(start + chunk, total), dtype=np.int64)
            idx = np.stack(np.unravel_index(flat, (A,) * length), axis=1)
            if space.residue_weights is None:
                weights = np.full(len(flat), float(length_weight))
            else:
                weights = length_weight * np.prod(residue_w[idx], axis=1)
            yield length, idx, weights


def sample_compounds(space: ChemicalSpace, n: int, rng: np.random.Generator) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Draw n compounds by weight; yields (draw positions, residue index block) per length."""
    lengths = np.asarray(space.lengths)
    drawn_lengths = rng.choice(lengths, size=n, p=space.length_probabilities())
    probs = space.residue_probabilities()
    for length in space.lengths:
        positions = np.flatnonzero(drawn_lengths == length)
        if positions.size == 0:
            continue
        idx = rng.choice(space.alphabet.size, size=(positions.size, length), p=probs)
        yield positions, idx
