from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from peptide_modeler.app.core.errors import DatasetFormatError, SequenceValidationError

CANONICAL_AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"


@dataclass(frozen=True)
class Alphabet:
    symbols: Tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.symbols:
            raise ValueError("alphabet must contain at least one symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be unique")
        if any(len(s) != 1 for s in self.symbols):
            raise ValueError("alphabet symbols must be single letters")
        object.__setattr__(self, "_lookup", {s: i for i, s in enumerate(self.symbols)})

    @classmethod
    def from_letters(cls, letters: str) -> "Alphabet":
        return cls(tuple(letters))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, letter: object) -> bool:
        return letter in self._lookup  # type: ignore[attr-defined]

    def index(self, letter: str) -> int:
        try:
            return self._lookup[letter]  # type: ignore[attr-defined]
        except KeyError:
            raise SequenceValidationError(letter) from None


DEFAULT_ALPHABET = Alphabet.from_letters(CANONICAL_AMINO_ACIDS)


@dataclass(frozen=True)
class Peptide:
    residues: Tuple[int, ...]
    alphabet: Alphabet = DEFAULT_ALPHABET

    def __post_init__(self) -> None:
        if not self.residues:
            raise ValueError("peptide must contain at least one residue")
        size = self.alphabet.size
        for r in self.residues:
            if not 0 <= r < size:
                raise SequenceValidationError(str(r))

    @classmethod
    def from_string(cls, text: str, alphabet: Alphabet = DEFAULT_ALPHABET, line: Optional[int] = None) -> "Peptide":
        seq = text.strip().upper()
        if not seq:
            raise DatasetFormatError(f"line {line}: empty sequence" if line is not None else "empty sequence")
        residues = []
        for letter in seq:
            if letter not in alphabet:
                raise SequenceValidationError(letter, line=line, sequence=seq)
            residues.append(alphabet.index(letter))
        return cls(tuple(residues), alphabet)

    @property
    def sequence(self) -> str:
        symbols = self.alphabet.symbols
        return "".join(symbols[r] for r in self.residues)

    def indices(self) -> np.ndarray:
        return np.asarray(self.residues, dtype=np.intp)

    def __len__(self) -> int:
        return len(self.residues)

    def __str__(self) -> str:
        return self.sequence


@dataclass(frozen=True)
class DatasetEntry:
    peptide: Peptide
    label: Optional[int] = None
    descriptors: Mapping[str, float] = field(default_factory=dict)

    @property
    def sequence(self) -> str:
        return self.peptide.sequence


@dataclass(frozen=True)
class PeptideDataset:
    entries: Tuple[DatasetEntry, ...]
    provenance: str = "dataset"
    descriptor_names: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        names = set(self.descriptor_names)
        for i, entry in enumerate(self.entries):
            if set(entry.descriptors) != names:
                raise DatasetFormatError(
                    f"entry {i} ({entry.sequence}) has descriptor columns {sorted(entry.descriptors)}, "
                    f"expected {sorted(names)}"
                )

    @classmethod
    def from_sequences(cls, sequences: Sequence[str], provenance: str = "dataset", label: Optional[int] = None) -> "PeptideDataset":
        entries = tuple(DatasetEntry(Peptide.from_string(s), label) for s in sequences)
        return cls(entries, provenance)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[DatasetEntry]:
        return iter(self.entries)

    def __getitem__(self, i: int) -> DatasetEntry:
        return self.entries[i]

    def peptides(self) -> List[Peptide]:
        return [e.peptide for e in self.entries]

    def sequences(self) -> List[str]:
        return [e.sequence for e in self.entries]

    def replace_entries(self, entries: Sequence[DatasetEntry], provenance: Optional[str] = None) -> "PeptideDataset":
        return PeptideDataset(tuple(entries), provenance or self.provenance, self.descriptor_names)

    def with_descriptors(self, values: Sequence[Mapping[str, float]], names: Sequence[str]) -> "PeptideDataset":
        if len(values) != len(self.entries):
            raise DatasetFormatError("descriptor rows do not match dataset size")
        entries = tuple(
            DatasetEntry(e.peptide, e.label, {n: float(v[n]) for n in names})
            for e, v in zip(self.entries, values)
        )
        return PeptideDataset(entries, self.provenance, tuple(names))

    def with_label(self, label: Optional[int]) -> "PeptideDataset":
        entries = tuple(DatasetEntry(e.peptide, label, dict(e.descriptors)) for e in self.entries)
        return PeptideDataset(entries, self.provenance, self.descriptor_names)

    def rank_vectors(self, names: Optional[Sequence[str]] = None) -> List[Dict[str, float]]:
        cols = list(names) if names is not None else list(self.descriptor_names)
        missing = [n for n in cols if n not in self.descriptor_names]
        if missing:
            raise DatasetFormatError(f"dataset '{self.provenance}' lacks descriptor columns: {', '.join(missing)}")
        return [{n: e.descriptors[n] for n in cols} for e in self.entries]

    def descriptor_matrix(self, names: Optional[Sequence[str]] = None) -> np.ndarray:
        cols = list(names) if names is not None else list(self.descriptor_names)
        rows = self.rank_vectors(cols)
        return np.array([[row[n] for n in cols] for row in rows], dtype=float).reshape(len(rows), len(cols))


@dataclass(frozen=True)
class ResidueFrequency:
    probabilities: Tuple[float, ...]
    alphabet: Alphabet = DEFAULT_ALPHABET

    def __post_init__(self) -> None:
        if len(self.probabilities) != self.alphabet.size:
            raise DatasetFormatError(
                f"frequency table has {len(self.probabilities)} entries for an alphabet of {self.alphabet.size}"
            )
        if any(p < 0 for p in self.probabilities):
            raise DatasetFormatError("residue frequencies must be nonnegative")
        total = float(sum(self.probabilities))
        if abs(total - 1.0) > 1e-9:
            raise DatasetFormatError(f"residue frequencies sum to {total!r}, expected 1")

    @classmethod
    def uniform(cls, alphabet: Alphabet = DEFAULT_ALPHABET) -> "ResidueFrequency":
        return cls(tuple([1.0 / alphabet.size] * alphabet.size), alphabet)

    @classmethod
    def point_mass(cls, letter: str, alphabet: Alphabet = DEFAULT_ALPHABET) -> "ResidueFrequency":
        probs = [0.0] * alphabet.size
        probs[alphabet.index(letter)] = 1.0
        return cls(tuple(probs), alphabet)

    def as_array(self) -> np.ndarray:
        p = np.asarray(self.probabilities, dtype=float)
        return p / p.sum()
