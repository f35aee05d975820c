from __future__ import annotations

import json
import logging
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from peptide_modeler.app.core.errors import DatasetFormatError, EvaluationError, ModelFileError
from peptide_modeler.app.core.seeding import stage_seed
from peptide_modeler.app.core.settings import Settings
from peptide_modeler.app.models.combined import CombinedModel
from peptide_modeler.app.models.distributions import DescriptorDistribution, DistributionSet
from peptide_modeler.app.models.evaluation import EvaluationResult, SvmModel
from peptide_modeler.app.models.mixture import MixtureModel
from peptide_modeler.app.models.model_file import ModelFile, read_model_file
from peptide_modeler.app.models.motif import MotifModel, MotifModelDocument
from peptide_modeler.app.models.properties import ResiduePropertyTable
from peptide_modeler.app.models.run import RunConfig, RunLogEntry
from peptide_modeler.app.models.sequences import PeptideDataset
from peptide_modeler.app.services.chemspace.service import (
    cdf_distance,
    exact_distribution,
    normal_approx,
    quantile_boundaries,
    rank_dataset,
    rank_histogram,
    sample_distribution,
)
from peptide_modeler.app.services.chemspace.space import ChemicalSpace
from peptide_modeler.app.services.combined.service import calibrate, combined_scores, select_weight, weight_sweep
from peptide_modeler.app.services.descriptors.service import annotate_dataset, load_property_table
from peptide_modeler.app.services.evaluation.metrics import evaluate_scores
from peptide_modeler.app.services.evaluation.screening import screen as screen_scores
from peptide_modeler.app.services.evaluation.svm import svm_baseline, svm_scores
from peptide_modeler.app.services.motif.report import background_rows, motif_report, position_rows
from peptide_modeler.app.services.motif.service import fit_motif, sequence_log_likelihoods
from peptide_modeler.app.services.qspr.service import init_mixture, mh_train, score_matrix
from peptide_modeler.app.services.sequences.io import format_dataset, read_dataset, read_frequencies, read_scores
from peptide_modeler.app.services.sequences.service import dedup_similar, make_decoys, split as split_dataset
from peptide_modeler.app.services.sequences.synthetic import generate_imposed_motif_dataset
from peptide_modeler.app.services.storage.json_store import FileArtifactStore

logger = logging.getLogger(__name__)

EVALUATION_HEADER = ["auc", "cutoff", "fpr", "tpr", "accuracy", "mcc"]


def evaluation_row(result: EvaluationResult) -> List[float]:
    c = result.confusion
    return [result.roc.auc, result.cutoff.cutoff, result.cutoff.fpr, result.cutoff.tpr, c.accuracy, c.mcc]


def relative_scores(log_likelihoods: Sequence[np.ndarray]) -> List[np.ndarray]:
    """exp(ll - max ll), the max taken jointly over every given set."""
    finite = [x[np.isfinite(x)] for x in log_likelihoods]
    top = max((float(x.max()) for x in finite if x.size), default=None)
    if top is None:
        raise EvaluationError("every sequence has zero likelihood under the motif model")
    return [np.exp(x - top) for x in log_likelihoods]


class ModelingPipeline:
    """Runs one subcommand from a resolved RunConfig and writes its artifacts."""

    def __init__(self, config: RunConfig, settings: Settings):
        self.config = config
        self.settings = settings
        self.run_id = str(uuid.uuid4())
        self.store = FileArtifactStore(Path(config.out_dir))
        self.store.write_document("run_config.json", config)

    def _log(self, step: str, message: str, status: str = "success", details: Optional[Dict[str, Any]] = None) -> None:
        entry = RunLogEntry(run_id=self.run_id, step=step, status=status, message=message, details=details or {})  # type: ignore[arg-type]
        self.store.log(entry)

    def run(self) -> Dict[str, Any]:
        handlers: Dict[str, Callable[[], Dict[str, Any]]] = {
            "ingest": self.ingest,
            "dedup": self.dedup,
            "decoy": self.decoy,
            "split": self.split,
            "descriptors": self.descriptors,
            "rank": self.rank,
            "space": self.space,
            "train-qspr": self.train_qspr,
            "train-motif": self.train_motif,
            "combine": self.combine,
            "evaluate": self.evaluate,
            "screen": self.screen,
            "baseline-svm": self.baseline_svm,
            "report-motifs": self.report_motifs,
            "synth-motifs": self.synth_motifs,
        }
        command = self.config.command
        self._log(command, "Starting", details={"seed": self.config.seed})
        try:
            details = handlers[command]()
        except Exception as e:
            self._log(command, f"Failed: {e}", status="error", details={"error": type(e).__name__})
            raise
        self._log(command, "Finished", details=details)
        return {"status": "ok", "command": command, "out_dir": self.config.out_dir, "outputs": list(self.store.written), **details}

    # ---- inputs -----------------------------------------------------------

    def _path(self, role: str, required: bool = True) -> Optional[Path]:
        value = self.config.input(role)
        if value is None:
            if required:
                raise DatasetFormatError(f"'{self.config.command}' needs an input for '{role}'")
            return None
        return Path(value)

    def _dataset(self, role: str, schema: str = "descriptors", required: bool = True) -> Optional[PeptideDataset]:
        path = self._path(role, required)
        if path is None:
            return None
        data = read_dataset(path, schema)  # type: ignore[arg-type]
        self._log("read_dataset", f"Read {len(data)} entries for {role}", details={"path": str(path)})
        return data

    def _model(self, role: str = "model") -> ModelFile:
        return read_model_file(self._path(role))  # type: ignore[arg-type]

    def _property_table(self) -> ResiduePropertyTable:
        path = self._path("property_table", required=False) or self.settings.property_table_path()
        return load_property_table(path, self.config.histidine_charge)

    def _executor(self) -> ThreadPoolExecutor:
        return ThreadPoolExecutor(max_workers=self.config.max_workers)

    def _write_dataset(self, name: str, data: PeptideDataset) -> None:
        self.store.write_text(name, format_dataset(data))

    # ---- dataset preparation ---------------------------------------------

    def ingest(self) -> Dict[str, Any]:
        data = self._dataset("input")
        if self.config.label is not None:
            data = data.with_label(self.config.label)
        self._write_dataset("ingested.csv", data)
        return {"entries": len(data)}

    def dedup(self) -> Dict[str, Any]:
        data = self._dataset("input")
        kept = dedup_similar(data, self.config.max_subs)
        self._write_dataset("dedup.csv", kept)
        return {"entries": len(data), "kept": len(kept)}

    def decoy(self) -> Dict[str, Any]:
        data = self._dataset("input", "sequences")
        path = self._path("frequencies", required=False) or self.settings.frequency_table_path()
        decoys = make_decoys(data, read_frequencies(path), stage_seed(self.config.seed, "decoy"))
        self._write_dataset("decoys.csv", decoys)
        return {"decoys": len(decoys)}

    def split(self) -> Dict[str, Any]:
        data = self._dataset("input")
        train, test = split_dataset(data, self.config.test_fraction, stage_seed(self.config.seed, "split"))
        self._write_dataset("train.csv", train)
        self._write_dataset("test.csv", test)
        return {"train": len(train), "test": len(test)}

    def synth_motifs(self) -> Dict[str, Any]:
        cfg = self.config
        data = generate_imposed_motif_dataset(cfg.imposed, cfg.count, (cfg.flank[0], cfg.flank[1]), stage_seed(cfg.seed, "synth"))
        self._write_dataset("synthetic.csv", data)
        return {"entries": len(data)}

    # ---- descriptors and ranks -------------------------------------------

    def descriptors(self) -> Dict[str, Any]:
        data = self._dataset("input", "sequences")
        annotated = annotate_dataset(data, self._property_table(), self.config.descriptors)
        self._write_dataset("descriptors.csv", annotated)
        return {"entries": len(annotated), "descriptors": list(self.config.descriptors)}

    def _build_distribution(self, table: ResiduePropertyTable, name: str, space: ChemicalSpace, index: int) -> Tuple[DescriptorDistribution, Optional[float]]:
        cfg = self.config
        fidelity: Optional[float] = None
        if cfg.space_kind == "exact":
            dist = exact_distribution(space, table, name, cfg.enumeration_cap)
        elif cfg.space_kind == "sampled":
            seed = stage_seed(cfg.seed, "space", index, *space.lengths)
            dist = sample_distribution(space, table, name, cfg.sample_size, seed)
        else:
            dist = normal_approx(space, table, name)
            if space.size() <= cfg.fidelity_cap:
                fidelity = cdf_distance(dist, exact_distribution(space, table, name, cfg.enumeration_cap))
        return quantile_boundaries(dist, cfg.quantiles), fidelity

    def space(self) -> Dict[str, Any]:
        cfg = self.config
        table = self._property_table()
        spaces = [ChemicalSpace(tuple(cfg.lengths))] if cfg.mixed else [ChemicalSpace.single(l) for l in cfg.lengths]
        jobs = [(i, name, s) for i, name in enumerate(cfg.descriptors) for s in spaces]
        with self._executor() as executor:
            built = list(executor.map(lambda job: self._build_distribution(table, job[1], job[2], job[0]), jobs))

        dists = DistributionSet(quantiles=cfg.quantiles, distributions=[d for d, _ in built])
        self.store.write_document("distributions.json", dists)
        rows = []
        for (_, name, s), (dist, fidelity) in zip(jobs, built):
            lengths = f"{min(s.lengths)}-{max(s.lengths)}" if len(s.lengths) > 1 else str(s.lengths[0])
            mean, variance = dist.moments()
            rows.append([
                name,
                lengths,
                dist.kind,
                mean,
                variance,
                "" if dist.zero_fraction is None else dist.zero_fraction,
                dist.zero_fraction_warning,
                "" if fidelity is None else fidelity,
            ])
            if dist.zero_fraction_warning:
                self._log("space", f"{name} at length {lengths}: normal approximation flagged", status="warning",
                          details={"zero_fraction": dist.zero_fraction})
        header = ["descriptor", "lengths", "kind", "mean", "variance", "zero_fraction", "zero_fraction_warning", "cdf_distance"]
        self.store.write_csv("space_summary.csv", header, rows)
        return {"distributions": len(dists.distributions)}

    def rank(self) -> Dict[str, Any]:
        data = self._dataset("input")
        path = self._path("distributions")
        try:
            dists = DistributionSet.model_validate_json(path.read_text(encoding="utf-8"))  # type: ignore[union-attr]
        except ValueError as e:
            raise ModelFileError(f"{path}: not a valid distribution file: {e}") from e
        ranked = rank_dataset(data, dists)
        self._write_dataset("ranks.csv", ranked)
        self.store.write_csv("rank_histogram.csv", ["descriptor", "rank", "count"], rank_histogram(ranked, dists.quantiles))
        return {"entries": len(ranked), "quantiles": dists.quantiles}

    # ---- training ----------------------------------------------------------

    def _held_out(self, fallback: Tuple[PeptideDataset, PeptideDataset]) -> Tuple[PeptideDataset, PeptideDataset, bool]:
        pos = self._dataset("test_positives", required=False)
        neg = self._dataset("test_negatives", required=False)
        if pos is None or neg is None:
            self._log("evaluate", "No held-out sets given; sweep points are scored on the training data", status="warning")
            return fallback[0], fallback[1], False
        return pos, neg, True

    def train_qspr(self) -> Dict[str, Any]:
        cfg = self.config
        positives = self._dataset("positives")
        negatives = self._dataset("negatives")
        names = list(positives.descriptor_names)
        if not names:
            raise DatasetFormatError("positive rank table has no descriptor columns")
        test_pos, test_neg, held_out = self._held_out((positives, negatives))
        pos_vectors, neg_vectors = positives.rank_vectors(names), negatives.rank_vectors(names)

        def train(k: int) -> Tuple[int, MixtureModel, EvaluationResult]:
            start = init_mixture(k, names, stage_seed(cfg.seed, "qspr-init", k), cfg.quantiles)
            model = mh_train(start, pos_vectors, neg_vectors, cfg.steps, stage_seed(cfg.seed, "qspr-train", k))
            self.store.write_document(f"qspr_k{k}.json", model)
            result = evaluate_scores(
                score_matrix(model, test_pos.descriptor_matrix(names)),
                score_matrix(model, test_neg.descriptor_matrix(names)),
                cfg.n_cutoffs,
            )
            self._log("train_qspr", f"k={k}: accuracy {result.confusion.accuracy:.3f}", details={"kernels": k, "auc": result.roc.auc})
            return k, model, result

        with self._executor() as executor:
            trained = list(executor.map(train, cfg.kernels))
        self.store.write_csv("qspr_sweep.csv", ["kernels"] + EVALUATION_HEADER, [[k] + evaluation_row(r) for k, _, r in trained])
        best_k, best, result = max(trained, key=lambda t: (t[2].confusion.accuracy, -t[0]))
        self.store.write_document("qspr_model.json", best)
        return {"kernels": best_k, "accuracy": result.confusion.accuracy, "held_out": held_out}

    def train_motif(self) -> Dict[str, Any]:
        cfg = self.config
        positives = self._dataset("positives", "sequences")
        test_pos = self._dataset("test_positives", "sequences", required=False)
        test_neg = self._dataset("test_negatives", "sequences", required=False)
        evaluated = test_pos is not None and test_neg is not None

        def train(pair: Tuple[int, int]) -> Tuple[Tuple[int, int], MotifModel, Optional[EvaluationResult]]:
            k, w = pair
            model = fit_motif(
                positives, k, w, cfg.iterations, stage_seed(cfg.seed, "motif", k, w), cfg.restarts,
                l1_strength=cfg.l1_strength, noise=cfg.noise, train_prior=cfg.train_prior,
            )
            self.store.write_document(f"motif_k{k}_w{w}.json", model.to_document())
            self.store.write_csv(f"motif_k{k}_w{w}_trace.csv", ["iteration", "loss"], enumerate(model.trace, start=1))
            result = None
            if evaluated:
                pos_s, neg_s = relative_scores([sequence_log_likelihoods(model, test_pos), sequence_log_likelihoods(model, test_neg)])
                result = evaluate_scores(pos_s, neg_s, cfg.n_cutoffs)
            self._log("train_motif", f"k={k} w={w}: final loss {model.trace[-1] if model.trace else float('nan'):.4f}",
                      details={"motifs": k, "width": w})
            return pair, model, result

        with self._executor() as executor:
            trained = list(executor.map(train, cfg.motif_grid()))
        if evaluated:
            rows = [[k, w] + evaluation_row(r) for (k, w), _, r in trained]  # type: ignore[arg-type]
            self.store.write_csv("motif_sweep.csv", ["motifs", "width"] + EVALUATION_HEADER, rows)
            (k, w), best, _ = max(trained, key=lambda t: t[2].confusion.accuracy)  # type: ignore[union-attr]
        else:
            (k, w), best, _ = min(trained, key=lambda t: t[1].trace[-1] if t[1].trace else np.inf)
        self.store.write_document("motif_model.json", best.to_document())
        self.store.write_csv("motif_trace.csv", ["iteration", "loss"], enumerate(best.trace, start=1))
        return {"motifs": k, "width": w, "held_out": evaluated}

    # ---- combination, evaluation, screening ------------------------------

    def combine(self) -> Dict[str, Any]:
        cfg = self.config
        qspr = self._model("qspr_model")
        motif_doc = self._model("motif_model")
        if not isinstance(qspr, MixtureModel) or not isinstance(motif_doc, MotifModelDocument):
            raise ModelFileError("combine needs a qspr model and a motif model")
        motif = motif_doc.to_model()
        reference = self._dataset("reference")
        positives = self._dataset("positives")
        negatives = self._dataset("negatives")

        normalizers = calibrate(qspr, motif, reference)
        model = CombinedModel.from_halves(qspr, motif, 0.0, normalizers)
        points = weight_sweep(model, positives, negatives, cfg.weight_grid, cfg.n_cutoffs, cfg.max_workers)
        rows = []
        for p in points:
            r = p.result
            rows.append([p.weight, r.cutoff.cutoff, r.cutoff.fpr, r.cutoff.tpr, r.confusion.accuracy, r.confusion.mcc])
        self.store.write_csv("combined_sweep.csv", ["weight", "cutoff", "fpr", "tpr", "accuracy", "mcc"], rows)
        best = select_weight(points)
        self.store.write_document("combined_model.json", model.model_copy(update={"weight": best.weight}))
        return {"weight": best.weight, "accuracy": best.result.confusion.accuracy}

    def _model_scores(self, model: ModelFile, datasets: Sequence[PeptideDataset]) -> List[np.ndarray]:
        if isinstance(model, MixtureModel):
            return [score_matrix(model, d.descriptor_matrix(model.descriptors)) for d in datasets]
        if isinstance(model, MotifModelDocument):
            motif = model.to_model()
            return relative_scores([sequence_log_likelihoods(motif, d) for d in datasets])
        if isinstance(model, CombinedModel):
            return [combined_scores(model, d) for d in datasets]
        if isinstance(model, SvmModel):
            return [svm_scores(model, d.rank_vectors(model.descriptors)) for d in datasets]
        raise ModelFileError(f"unsupported model type {type(model).__name__}")

    def evaluate(self) -> Dict[str, Any]:
        cfg = self.config
        scores_path = self._path("scores", required=False)
        if scores_path is not None:
            pos, neg = read_scores(scores_path)
            score_rows = [[1, s] for s in pos] + [[0, s] for s in neg]
            score_header = ["label", "score"]
        else:
            model = self._model()
            positives = self._dataset("positives")
            negatives = self._dataset("negatives")
            pos_arr, neg_arr = self._model_scores(model, [positives, negatives])
            pos, neg = pos_arr.tolist(), neg_arr.tolist()
            score_rows = [[e.sequence, 1, s] for e, s in zip(positives, pos)] + [[e.sequence, 0, s] for e, s in zip(negatives, neg)]
            score_header = ["sequence", "label", "score"]

        result = evaluate_scores(pos, neg, cfg.n_cutoffs)
        points = [[p.cutoff, p.fpr, p.tpr] for p in result.roc.points]
        self.store.write_csv("roc.csv", ["cutoff", "fpr", "tpr"], points, footer=f"auc={result.roc.auc!r}")
        c = result.confusion
        self.store.write_csv("confusion.csv", ["tp", "fp", "tn", "fn", "accuracy", "mcc"], [[c.tp, c.fp, c.tn, c.fn, c.accuracy, c.mcc]])
        self.store.write_document("cutoff.json", result.cutoff)
        self.store.write_csv("scores.csv", score_header, score_rows)
        return {"auc": result.roc.auc, "accuracy": c.accuracy, "mcc": c.mcc, "cutoff": result.cutoff.cutoff}

    def _cutoff(self) -> float:
        path = self._path("cutoff", required=False)
        if path is None:
            raise DatasetFormatError("screen needs a cutoff: pass --cutoff with a value or a cutoff.json file")
        if path.is_file():
            try:
                return float(json.loads(path.read_text(encoding="utf-8"))["cutoff"])
            except (ValueError, KeyError, TypeError) as e:
                raise DatasetFormatError(f"{path}: no cutoff value found") from e
        try:
            return float(str(path))
        except ValueError:
            raise DatasetFormatError(f"cutoff '{path}' is neither a number nor a readable file") from None

    def screen(self) -> Dict[str, Any]:
        cfg = self.config
        model = self._model()
        data = self._dataset("input")
        cutoff = self._cutoff()
        (scores,) = self._model_scores(model, [data])
        hits, summary = screen_scores(data.sequences(), scores.tolist(), cutoff, cfg.min_length)
        self.store.write_csv("screened.csv", ["sequence", "length", "score"], [[h.sequence, h.length, h.score] for h in hits])
        self.store.write_document("screen_summary.json", summary)
        return {"selected": summary.selected, "eligible": summary.eligible}

    def baseline_svm(self) -> Dict[str, Any]:
        cfg = self.config
        positives, negatives = self._dataset("positives"), self._dataset("negatives")
        test_pos, test_neg = self._dataset("test_positives"), self._dataset("test_negatives")
        names = list(positives.descriptor_names)
        model, summary = svm_baseline(
            positives.rank_vectors(names),
            negatives.rank_vectors(names),
            test_pos.rank_vectors(names),
            test_neg.rank_vectors(names),
            epochs=cfg.epochs,
            seed=stage_seed(cfg.seed, "svm"),
            regularization=cfg.svm_lambda,
        )
        self.store.write_document("svm_model.json", model)
        c = summary
        self.store.write_csv("svm_confusion.csv", ["tp", "fp", "tn", "fn", "accuracy", "mcc"], [[c.tp, c.fp, c.tn, c.fn, c.accuracy, c.mcc]])
        return {"accuracy": c.accuracy, "mcc": c.mcc}

    def report_motifs(self) -> Dict[str, Any]:
        doc = self._model()
        if not isinstance(doc, MotifModelDocument):
            raise ModelFileError("report-motifs needs a motif model")
        model = doc.to_model()
        data = self._dataset("input", "sequences")
        rows = motif_report(model, data)
        self.store.write_csv("motif_report.csv", ["motif", "consensus", "predict", "found"],
                             [[r.motif, r.consensus, r.predict, r.found] for r in rows])
        self.store.write_csv("background.csv", ["symbol", "probability"], background_rows(model))
        self.store.write_csv("motif_positions.csv", ["motif", "position", "symbol", "probability"], position_rows(model))
        return {"motifs": model.motifs}
