from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from peptide_modeler.app.core.errors import PeptideModelerError
from peptide_modeler.app.core.settings import Settings, get_settings
from peptide_modeler.app.models.run import RunConfig
from peptide_modeler.app.services.combined.service import weight_grid
from peptide_modeler.app.services.pipeline import ModelingPipeline

logger = logging.getLogger(__name__)

COMMANDS = {
    "ingest": "validate and normalize a dataset file",
    "dedup": "drop sequences within --max-subs substitutions of a kept one",
    "decoy": "resample every residue from a reference frequency table",
    "split": "hold out a random --test-fraction of a dataset",
    "descriptors": "compute descriptor columns for a sequence file",
    "rank": "turn descriptor values into ranks using a distribution file",
    "space": "build descriptor distributions over a chemical space",
    "train-qspr": "train the two-state mixture model (kernel sweep with --kernels 1-10)",
    "train-motif": "train the motif model (grid sweep over --motifs and --width)",
    "combine": "calibrate the combined model and sweep the motif weight",
    "evaluate": "ROC, best cutoff and confusion metrics for scores or a model",
    "screen": "select sequences scoring at or above a cutoff",
    "baseline-svm": "linear SVM baseline on descriptor ranks",
    "report-motifs": "consensus, predicted and found counts for each motif",
    "synth-motifs": "generate peptides with imposed motifs",
}

# flag dest -> input role
INPUT_ROLES = {
    "input": "input",
    "positives": "positives",
    "negatives": "negatives",
    "test_positives": "test_positives",
    "test_negatives": "test_negatives",
    "distributions": "distributions",
    "reference": "reference",
    "model": "model",
    "qspr_model": "qspr_model",
    "motif_model": "motif_model",
    "scores": "scores",
    "frequencies": "frequencies",
    "property_table": "property_table",
    "cutoff": "cutoff",
}


# -------------------------------------------------------------------------
# Argument types
# -------------------------------------------------------------------------

def int_list(text: str) -> List[int]:
    """'3', '1,2,5' or an inclusive range '1-10'."""
    try:
        if "-" in text.strip("-"):
            lo, hi = text.split("-", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, a list or a range, got '{text}'") from None


def int_pair(text: str) -> List[int]:
    parts = text.replace("-", ",").split(",")
    try:
        values = [int(p) for p in parts if p.strip()]
    except ValueError:
        values = []
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected two integers 'lo,hi', got '{text}'")
    return values


def weight_grid_arg(text: str) -> List[float]:
    """A grid size ('101') or explicit weights ('0,0.21,1')."""
    try:
        if "," in text or "." in text:
            return [float(x) for x in text.split(",") if x.strip()]
        return weight_grid(int(text))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid weight grid '{text}': {e}") from None


def str_list(text: str) -> List[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


# -------------------------------------------------------------------------
# Parser
# -------------------------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    # SUPPRESS keeps unset flags out of the namespace, so only explicit values override
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="replay a saved run_config.json")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    p.add_argument("--workers", dest="max_workers", type=int)

    data = p.add_argument_group("datasets")
    data.add_argument("--positives")
    data.add_argument("--negatives")
    data.add_argument("--test-positives", dest="test_positives")
    data.add_argument("--test-negatives", dest="test_negatives")
    data.add_argument("--reference", help="calibration set for combine")
    data.add_argument("--distributions", help="distributions.json written by space")
    data.add_argument("--model", help="model file (qspr, motif, combined or svm)")
    data.add_argument("--qspr-model", dest="qspr_model")
    data.add_argument("--motif-model", dest="motif_model")
    data.add_argument("--scores", help="label,score table for evaluate")
    data.add_argument("--frequencies", help="symbol,probability table for decoy")
    data.add_argument("--property-table", dest="property_table")
    data.add_argument("--cutoff", help="cutoff value or cutoff.json for screen")
    data.add_argument("--label", type=int, choices=[0, 1])
    data.add_argument("--test-fraction", dest="test_fraction", type=float)
    data.add_argument("--max-subs", dest="max_subs", type=int)
    data.add_argument("--min-length", dest="min_length", type=int)
    data.add_argument("--count", type=int)
    data.add_argument("--flank", type=int_pair)
    data.add_argument("--imposed", type=str_list, help="comma-separated motifs for synth-motifs")

    space = p.add_argument_group("descriptors and ranks")
    space.add_argument("--descriptors", type=str_list)
    space.add_argument("--histidine-charge", dest="histidine_charge", type=float)
    space.add_argument("--quantiles", type=int)
    space.add_argument("--kind", dest="space_kind", choices=["exact", "normal", "sampled"])
    space.add_argument("--lengths", type=int_list)
    space.add_argument("--mixed", action="store_true")
    space.add_argument("--sample-size", dest="sample_size", type=int)
    space.add_argument("--enumeration-cap", dest="enumeration_cap", type=int)
    space.add_argument("--fidelity-cap", dest="fidelity_cap", type=int)

    models = p.add_argument_group("models")
    models.add_argument("--kernels", type=int_list)
    models.add_argument("--steps", type=int, help="Metropolis sweeps per chain")
    models.add_argument("--motifs", type=int_list)
    models.add_argument("--width", type=int_list)
    models.add_argument("--lambda", dest="l1_strength", type=float, help="L1 strength of the motif updates")
    models.add_argument("--noise", type=float)
    models.add_argument("--iterations", type=int)
    models.add_argument("--restarts", type=int)
    models.add_argument("--uniform-prior", dest="train_prior", action="store_false")
    models.add_argument("--weight-grid", dest="weight_grid", type=weight_grid_arg)
    models.add_argument("--n-cutoffs", dest="n_cutoffs", type=int)
    models.add_argument("--svm-lambda", dest="svm_lambda", type=float)
    models.add_argument("--epochs", type=int)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="peptide-modeler", description="Peptide activity modeling toolkit", parents=[common])
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, help_text in COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text, parents=[common], argument_default=argparse.SUPPRESS)
        cmd.add_argument("input", nargs="?", help="input file")
    return parser


def settings_defaults(settings: Settings) -> Dict[str, Any]:
    return {
        "seed": settings.seed,
        "out_dir": str(settings.out_dir),
        "descriptors": list(settings.descriptors),
        "histidine_charge": settings.histidine_charge,
        "quantiles": settings.quantiles,
        "sample_size": settings.sample_size,
        "enumeration_cap": settings.enumeration_cap,
        "fidelity_cap": settings.fidelity_cap,
        "kernels": [settings.kernels],
        "steps": settings.mh_steps,
        "motifs": [settings.motifs],
        "width": [settings.width],
        "l1_strength": settings.l1_strength,
        "noise": settings.noise,
        "iterations": settings.iterations,
        "restarts": settings.restarts,
        "train_prior": settings.train_prior,
        "weight_grid": weight_grid(settings.weight_grid_size),
        "n_cutoffs": settings.n_cutoffs,
        "svm_lambda": settings.svm_lambda,
        "test_fraction": settings.test_fraction,
        "max_subs": settings.max_subs,
        "min_length": settings.min_length,
        "max_workers": settings.max_workers,
        "log_level": settings.log_level,
    }


def _input_path(role: str, value: str) -> str:
    if role == "cutoff":
        try:
            float(value)
            return value
        except ValueError:
            pass
    return str(Path(value).resolve())


def resolve_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    """Settings (or a replayed config) overlaid with the flags given on the command line."""
    given = vars(args).copy()
    command = given.pop("command", None)
    config_path = given.pop("config", None)
    if config_path:
        try:
            base = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise ValueError(f"cannot read config {config_path}: {e}") from e
    else:
        base = settings_defaults(settings)
    if command is None:
        command = base.get("command")
    if command is None:
        raise ValueError("a command is required")

    inputs = dict(base.get("inputs", {}))
    for dest, role in INPUT_ROLES.items():
        if dest in given:
            inputs[role] = _input_path(role, str(given.pop(dest)))
    return RunConfig.model_validate({**base, **given, "command": command, "inputs": inputs})


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    settings = get_settings()
    try:
        config = resolve_config(args, settings)
    except (ValueError, ValidationError) as e:
        parser.print_usage(sys.stderr)
        print(f"peptide-modeler: error: {e}", file=sys.stderr)
        return 2

    logging.basicConfig(level=config.log_level, format="%(asctime)s - %(levelname)s - %(message)s")
    try:
        pipeline = ModelingPipeline(config, settings)
        result = pipeline.run()
    except (PeptideModelerError, OSError) as e:
        logger.error(f"{config.command} failed: {e}")
        print(f"peptide-modeler: error: {e}", file=sys.stderr)
        print(json.dumps({"status": "error", "command": config.command, "error": str(e)}, indent=2))
        return 1
    print(json.dumps(result, ensure_ascii=False, indent=2))
    return 0


def cli() -> None:
    load_dotenv()
    sys.exit(main())


if __name__ == "__main__":
    cli()
