from __future__ import annotations

import logging
from typing import Dict, List, Tuple

import numpy as np

from peptide_modeler.app.core.errors import DatasetFormatError
from peptide_modeler.app.models.sequences import DatasetEntry, Peptide, PeptideDataset, ResidueFrequency

logger = logging.getLogger(__name__)


def dedup_similar(data: PeptideDataset, max_subs: int = 2) -> PeptideDataset:
    """Greedy first-wins removal of near-duplicates.

    Two peptides are similar when they have equal length and differ at no more
    than `max_subs` positions.
    """
    if max_subs < 0:
        raise ValueError("max_subs must be >= 0")

    kept_by_length: Dict[int, List[np.ndarray]] = {}
    kept: List[DatasetEntry] = []
    for entry in data.entries:
        seq = entry.peptide.indices()
        bucket = kept_by_length.setdefault(len(seq), [])
        if bucket:
            distances = np.count_nonzero(np.vstack(bucket) != seq, axis=1)
            if int(distances.min()) <= max_subs:
                continue
        bucket.append(seq)
        kept.append(entry)

    logger.info(f"Dedup kept {len(kept)}/{len(data)} entries (max_subs={max_subs})")
    return data.replace_entries(kept)


def make_decoys(data: PeptideDataset, freq: ResidueFrequency, seed: int) -> PeptideDataset:
    """One decoy per entry: same length, residues drawn i.i.d. from `freq`."""
    rng = np.random.default_rng(seed)
    probs = freq.as_array()
    entries = []
    for entry in data.entries:
        residues = rng.choice(len(probs), size=len(entry.peptide), p=probs)
        entries.append(DatasetEntry(Peptide(tuple(int(r) for r in residues), freq.alphabet), label=0))
    return PeptideDataset(tuple(entries), "decoys")


def split(data: PeptideDataset, test_fraction: float = 0.2, seed: int = 0) -> Tuple[PeptideDataset, PeptideDataset]:
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    n = len(data)
    if n < 2:
        raise DatasetFormatError(f"cannot split a dataset of {n} entries")

    n_test = int(round(test_fraction * n))
    order = np.random.default_rng(seed).permutation(n)
    test_idx = set(int(i) for i in order[:n_test])

    train = [e for i, e in enumerate(data.entries) if i not in test_idx]
    test = [e for i, e in enumerate(data.entries) if i in test_idx]
    return data.replace_entries(train, f"{data.provenance}_train"), data.replace_entries(test, f"{data.provenance}_test")
