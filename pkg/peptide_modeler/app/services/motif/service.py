from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from peptide_modeler.app.core.errors import DatasetFormatError, EvaluationError, TrainingError
from peptide_modeler.app.models.motif import Assignment, MotifModel, SgdState
from peptide_modeler.app.models.sequences import DEFAULT_ALPHABET, Alphabet, Peptide, PeptideDataset
from peptide_modeler.app.services.motif.sgd import sgd_update

logger = logging.getLogger(__name__)

# likelihoods read every probability as at least this floor; stored distributions keep their zeros
PROBABILITY_FLOOR = 1e-10

Peptides = Union[PeptideDataset, Sequence[Peptide]]


def init_motif(
    motifs: int,
    width: int,
    alphabet: Alphabet = DEFAULT_ALPHABET,
    l1_strength: float = 1.0,
    noise: float = 0.05,
    train_prior: bool = True,
) -> MotifModel:
    """Uniform motifs, background and prior; k = 0 gives the background-only model."""
    if motifs == 0:
        width = 0
    A = alphabet.size
    return MotifModel(
        motifs=motifs,
        width=width,
        theta=np.full((motifs, width, A), 1.0 / A),
        background=np.full(A, 1.0 / A),
        prior=np.full(motifs, 1.0 / motifs) if motifs else np.zeros(0),
        alphabet=alphabet,
        l1_strength=l1_strength,
        noise=noise,
        train_prior=train_prior,
    )


# ---- window layout ----------------------------------------------------------


@dataclass(frozen=True)
class WindowLayout:
    """Every full-width window of every peptide, flattened peptide by peptide."""

    residues: np.ndarray  # all residues, concatenated
    residue_owner: np.ndarray  # peptide index of each residue
    windows: np.ndarray  # (n_windows, w) residue indices
    owner: np.ndarray  # peptide index of each window
    starts: np.ndarray  # 1-based start of each window
    offsets: np.ndarray  # (n_peptides + 1,) window offsets
    width: int

    @property
    def size(self) -> int:
        return len(self.offsets) - 1

    @property
    def window_counts(self) -> np.ndarray:
        return np.diff(self.offsets)


def _peptide_list(data: Peptides) -> List[Peptide]:
    return data.peptides() if isinstance(data, PeptideDataset) else list(data)


def build_layout(peptides: Sequence[Peptide], width: int) -> WindowLayout:
    seqs = [p.indices() for p in peptides]
    residues = np.concatenate(seqs) if seqs else np.zeros(0, dtype=np.intp)
    residue_owner = np.repeat(np.arange(len(seqs)), [len(s) for s in seqs])
    if width == 0:
        empty = np.zeros(0, dtype=np.intp)
        return WindowLayout(residues, residue_owner, np.zeros((0, 0), dtype=np.intp), empty, empty,
                            np.zeros(len(seqs) + 1, dtype=np.intp), 0)
    for p, s in zip(peptides, seqs):
        if len(s) < width:
            raise DatasetFormatError(f"sequence {p.sequence} is shorter than the motif width {width}")
    blocks = [sliding_window_view(s, width) for s in seqs]
    counts = np.array([len(b) for b in blocks], dtype=np.intp)
    return WindowLayout(
        residues=residues,
        residue_owner=residue_owner,
        windows=np.concatenate(blocks),
        owner=np.repeat(np.arange(len(seqs)), counts),
        starts=np.concatenate([np.arange(1, c + 1) for c in counts]),
        offsets=np.concatenate(([0], np.cumsum(counts))),
        width=width,
    )


# ---- likelihood terms -------------------------------------------------------


def _log(x: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(x, PROBABILITY_FLOOR))


def _background_outside(model: MotifModel, layout: WindowLayout) -> np.ndarray:
    """Background log-probability of each peptide's residues outside each window."""
    log_phi = _log(model.background)
    total = np.bincount(layout.residue_owner, weights=log_phi[layout.residues], minlength=layout.size)
    return total[layout.owner] - log_phi[layout.windows].sum(axis=1)


def window_terms(model: MotifModel, layout: WindowLayout) -> np.ndarray:
    """(n_windows, k) log-terms log pi_m - log n_starts + background outside + motif inside."""
    w = model.width
    log_theta = _log(model.theta)
    inside = log_theta[:, np.arange(w), layout.windows].sum(axis=-1).T
    starts = np.log(layout.window_counts)[layout.owner]
    return (_background_outside(model, layout) - starts)[:, None] + inside + _log(model.prior)[None, :]


def _segment_logsumexp(values: np.ndarray, starts: np.ndarray) -> np.ndarray:
    top = np.maximum.reduceat(values, starts)
    safe = np.where(np.isfinite(top), top, 0.0)
    lengths = np.diff(np.append(starts, len(values)))
    total = np.add.reduceat(np.exp(values - np.repeat(safe, lengths)), starts)
    with np.errstate(divide="ignore"):
        return safe + np.log(total)


def sequence_log_likelihoods(model: MotifModel, data: Peptides, layout: Optional[WindowLayout] = None) -> np.ndarray:
    peptides = _peptide_list(data)
    if not peptides:
        return np.zeros(0)
    layout = layout or build_layout(peptides, model.width)
    if model.motifs == 0:
        return np.bincount(layout.residue_owner, weights=_log(model.background)[layout.residues], minlength=layout.size)
    terms = window_terms(model, layout)
    return _segment_logsumexp(terms.ravel(), layout.offsets[:-1] * model.motifs)


def seq_log_likelihood(model: MotifModel, p: Peptide) -> float:
    """Log-probability of p: a mixture over motif classes and uniform start positions."""
    if model.motifs == 0:
        return float(np.sum(_log(model.background)[p.indices()]))
    return float(sequence_log_likelihoods(model, [p])[0])


# ---- Gibbs assignment -------------------------------------------------------


def _sample_assignments(model: MotifModel, layout: WindowLayout, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw one (window, motif) per peptide proportional to its likelihood term."""
    k = model.motifs
    flat = window_terms(model, layout).ravel()
    seg_starts = layout.offsets[:-1] * k
    seg_lengths = layout.window_counts * k
    top = np.maximum.reduceat(flat, seg_starts)
    weights = np.exp(flat - np.repeat(top, seg_lengths))
    cum = np.cumsum(weights)
    before = np.concatenate(([0.0], cum))[seg_starts]
    totals = cum[seg_starts + seg_lengths - 1] - before
    u = rng.random(layout.size)
    picks = np.searchsorted(cum, before + u * totals, side="right")
    picks = np.clip(picks, seg_starts, seg_starts + seg_lengths - 1)
    local = picks - seg_starts
    return layout.offsets[:-1] + local // k, local % k


def gibbs_assign(model: MotifModel, p: Peptide, rng: np.random.Generator) -> Assignment:
    if model.motifs == 0:
        return Assignment(None, None)
    layout = build_layout([p], model.width)
    window, motif = _sample_assignments(model, layout, rng)
    return Assignment(int(motif[0]), int(layout.starts[window[0]]))


# ---- training ---------------------------------------------------------------


def train_motif(model: MotifModel, data: Peptides, iterations: int, seed: int) -> MotifModel:
    """Alternate a Gibbs sweep over all peptides with one SGD step per distribution.

    Iteration t draws assignments from stream (seed, t, 0) and update noise
    from (seed, t, 1), counting t across resumed training.
    """
    peptides = _peptide_list(data)
    if not peptides:
        raise TrainingError("cannot train a motif model on an empty dataset")
    if iterations < 0:
        raise TrainingError("iterations must be >= 0")
    try:
        layout = build_layout(peptides, model.width)
    except DatasetFormatError as e:
        raise TrainingError(str(e)) from e
    if iterations == 0:
        return model

    k, w, A = model.motifs, model.width, model.alphabet.size
    theta, phi, pi = model.theta.copy(), model.background.copy(), model.prior.copy()
    theta_g, phi_g, pi_g = model.theta_g.copy(), model.background_g.copy(), model.prior_g.copy()
    residue_counts = np.bincount(layout.residues, minlength=A).astype(float)
    trace = list(model.trace)
    positions = np.arange(w)

    for step in range(iterations):
        t = model.iterations + step
        current = replace(model, theta=theta, background=phi, prior=pi)
        if k:
            window, motif = _sample_assignments(current, layout, np.random.default_rng([seed, t, 0]))
            motif_counts = np.zeros((k, w, A))
            np.add.at(motif_counts, (motif[:, None], positions[None, :], layout.windows[window]), 1.0)
            background_counts = residue_counts - np.bincount(layout.windows[window].ravel(), minlength=A)
            class_counts = np.bincount(motif, minlength=k).astype(float)
        else:
            background_counts = residue_counts

        noise_rng = np.random.default_rng([seed, t, 1])
        for m in range(k):
            n_m = class_counts[m]
            if n_m == 0:
                continue
            for j in range(w):
                state = SgdState(theta_g[m, j], model.l1_strength, model.noise)
                theta[m, j], state = sgd_update(theta[m, j], motif_counts[m, j], n_m, state, noise_rng)
                theta_g[m, j] = state.G
        n_bg = background_counts.sum()
        if n_bg > 0:
            phi, state = sgd_update(phi, background_counts, n_bg, SgdState(phi_g, model.l1_strength, model.noise), noise_rng)
            phi_g = state.G
        if k > 1 and model.train_prior:
            pi, state = sgd_update(pi, class_counts, len(peptides), SgdState(pi_g, model.l1_strength, model.noise), noise_rng)
            pi_g = state.G

        trained = replace(model, theta=theta, background=phi, prior=pi)
        trace.append(-float(sequence_log_likelihoods(trained, peptides, layout).sum()))

    result = replace(
        model,
        theta=theta,
        background=phi,
        prior=pi,
        theta_g=theta_g,
        background_g=phi_g,
        prior_g=pi_g,
        iterations=model.iterations + iterations,
        seed=seed,
        trace=tuple(trace),
    )
    logger.info(f"Trained motif model k={k} w={w} for {iterations} iterations on {len(peptides)} peptides: loss {trace[-1]:.4f}")
    return result


def fit_motif(
    data: Peptides,
    motifs: int,
    width: int,
    iterations: int,
    seed: int,
    restarts: int = 1,
    alphabet: Alphabet = DEFAULT_ALPHABET,
    l1_strength: float = 1.0,
    noise: float = 0.05,
    train_prior: bool = True,
) -> MotifModel:
    """Train `restarts` independently seeded runs and keep the lowest final loss."""
    if restarts < 1:
        raise TrainingError("restarts must be >= 1")
    best: Optional[MotifModel] = None
    for r in range(restarts):
        start = init_motif(motifs, width, alphabet, l1_strength, noise, train_prior)
        run_seed = seed if r == 0 else int(np.random.SeedSequence([seed, r]).generate_state(1)[0])
        model = train_motif(start, data, iterations, run_seed)
        loss = model.trace[-1] if model.trace else np.inf
        if best is None or loss < (best.trace[-1] if best.trace else np.inf):
            best = model
        logger.debug(f"Restart {r}: final loss {loss}")
    return best  # type: ignore[return-value]


# ---- queries ----------------------------------------------------------------


def class_log_likelihoods(model: MotifModel, data: Peptides) -> np.ndarray:
    """(n_peptides, k) per-class log-terms, each summed over start positions."""
    peptides = _peptide_list(data)
    layout = build_layout(peptides, model.width)
    terms = window_terms(model, layout)
    starts = layout.offsets[:-1]
    return np.stack([_segment_logsumexp(terms[:, m], starts) for m in range(model.motifs)], axis=1)


def best_motifs(model: MotifModel, data: Peptides) -> np.ndarray:
    if model.motifs == 0:
        raise EvaluationError("a background-only model has no motif to choose")
    return np.argmax(class_log_likelihoods(model, data), axis=1)


def best_motif(model: MotifModel, p: Peptide) -> int:
    """Most likely motif class for p; ties go to the lowest index."""
    return int(best_motifs(model, [p])[0])


def count_containing(data: Peptides, motif_string: Union[Peptide, str]) -> int:
    motif = motif_string.sequence if isinstance(motif_string, Peptide) else str(motif_string).upper()
    if not motif:
        raise ValueError("motif string must not be empty")
    return sum(1 for p in _peptide_list(data) if motif in p.sequence)
