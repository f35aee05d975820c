from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from peptide_modeler.app.models.sequences import DEFAULT_ALPHABET, Alphabet, DatasetEntry, Peptide, PeptideDataset

DEFAULT_IMPOSED_MOTIFS = ("ARND", "QAFR", "IEKG")


def generate_imposed_motif_dataset(
    motifs: Sequence[str] = DEFAULT_IMPOSED_MOTIFS,
    count: int = 200,
    flank: Tuple[int, int] = (0, 4),
    seed: int = 0,
    alphabet: Alphabet = DEFAULT_ALPHABET,
    label: int = 1,
) -> PeptideDataset:
    """Embed motifs (round-robin) between uniformly drawn flanking residues.

    Prefix and suffix lengths are drawn independently and uniformly from the
    inclusive range `flank`.
    """
    lo, hi = flank
    if not motifs:
        raise ValueError("at least one motif is required")
    if lo < 0 or hi < lo:
        raise ValueError(f"invalid flank range {flank}")
    if count < 1:
        raise ValueError("count must be >= 1")

    cores = [Peptide.from_string(m, alphabet).residues for m in motifs]
    rng = np.random.default_rng(seed)
    entries = []
    for i in range(count):
        core = cores[i % len(cores)]
        n_pre, n_post = rng.integers(lo, hi + 1, size=2)
        prefix = rng.integers(0, alphabet.size, size=int(n_pre))
        suffix = rng.integers(0, alphabet.size, size=int(n_post))
        residues = tuple(int(r) for r in prefix) + core + tuple(int(r) for r in suffix)
        entries.append(DatasetEntry(Peptide(residues, alphabet), label))
    return PeptideDataset(tuple(entries), "imposed_motifs")
