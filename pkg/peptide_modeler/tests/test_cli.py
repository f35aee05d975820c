from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from peptide_modeler.app.main import build_parser, int_list, main, resolve_config
from peptide_modeler.app.core.settings import Settings
from peptide_modeler.app.services.storage.json_store import RUN_LOG
from peptide_modeler.tests.helpers import random_sequences, write_sequences

# run-specific: timestamps, run ids and absolute paths
VOLATILE = {RUN_LOG, "run_config.json"}


@pytest.fixture(autouse=True)
def _isolated(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for key in ("PEPMOD_SEED", "PEPMOD_OUT_DIR", "PEPMOD_QUANTILES", "PEPMOD_DESCRIPTORS"):
        monkeypatch.delenv(key, raising=False)


def _run(capsys, *argv: str) -> dict:
    code = main(list(argv))
    out = capsys.readouterr().out
    assert code == 0, out
    return json.loads(out)


def _rows(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(line for line in f if not line.startswith("#")))


def _smoke(root: Path, positives: Path, capsys) -> Path:
    common = ["--seed", "17", "--descriptors", "net_charge,nonpolar", "--quantiles", "20"]
    _run(capsys, "ingest", str(positives), "--label", "1", "--out-dir", str(root / "ingest"), *common)
    ingested = str(root / "ingest" / "ingested.csv")
    _run(capsys, "decoy", ingested, "--out-dir", str(root / "decoy"), *common)
    _run(capsys, "descriptors", ingested, "--out-dir", str(root / "desc_pos"), *common)
    _run(capsys, "descriptors", str(root / "decoy" / "decoys.csv"), "--out-dir", str(root / "desc_neg"), *common)
    _run(capsys, "space", "--kind", "normal", "--lengths", "4-6", "--out-dir", str(root / "space"), *common)
    dists = str(root / "space" / "distributions.json")
    _run(capsys, "rank", str(root / "desc_pos" / "descriptors.csv"), "--distributions", dists, "--out-dir", str(root / "rank_pos"), *common)
    _run(capsys, "rank", str(root / "desc_neg" / "descriptors.csv"), "--distributions", dists, "--out-dir", str(root / "rank_neg"), *common)
    ranks = ["--positives", str(root / "rank_pos" / "ranks.csv"), "--negatives", str(root / "rank_neg" / "ranks.csv")]
    _run(capsys, "train-qspr", *ranks, "--kernels", "1", "--steps", "40", "--out-dir", str(root / "qspr"), *common)
    _run(capsys, "evaluate", "--model", str(root / "qspr" / "qspr_model.json"), *ranks, "--out-dir", str(root / "eval"), *common)
    return root


def _artifacts(root: Path) -> dict:
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name not in VOLATILE
    }


@pytest.fixture
def positives(tmp_path) -> Path:
    rng = np.random.default_rng(5)
    return write_sequences(tmp_path / "positives.csv", random_sequences(rng, 50, lo=4, hi=6))


def test_smoke_pipeline_is_reproducible(tmp_path, positives, capsys):
    first = _artifacts(_smoke(tmp_path / "a", positives, capsys))
    second = _artifacts(_smoke(tmp_path / "b", positives, capsys))
    assert "eval/roc.csv" in first
    assert "qspr/qspr_model.json" in first
    assert first == second


def test_rank_keeps_rows_and_bounds(tmp_path, positives, capsys):
    root = _smoke(tmp_path / "run", positives, capsys)
    ranked = _rows(root / "rank_pos" / "ranks.csv")
    assert len(ranked) == 50
    for row in ranked:
        for name in ("net_charge", "nonpolar"):
            assert 1 <= float(row[name]) <= 20
    histogram = _rows(root / "rank_pos" / "rank_histogram.csv")
    assert sum(int(r["count"]) for r in histogram) == 2 * 50


def test_run_config_is_written(tmp_path, positives, capsys):
    out = tmp_path / "ingest"
    result = _run(capsys, "ingest", str(positives), "--label", "1", "--seed", "3", "--out-dir", str(out))
    assert result["status"] == "ok"
    config = json.loads((out / "run_config.json").read_text())
    assert config["command"] == "ingest"
    assert config["seed"] == 3
    assert config["inputs"]["input"] == str(positives.resolve())
    assert all(r["label"] == "1" for r in _rows(out / "ingested.csv"))
    assert (out / RUN_LOG).exists()


def test_evaluate_separated_scores(tmp_path, capsys):
    scores = tmp_path / "scores.csv"
    scores.write_text("label,score\n1,0.9\n1,0.8\n1,0.85\n0,0.1\n0,0.2\n0,0.15\n")
    result = _run(capsys, "evaluate", "--scores", str(scores), "--out-dir", str(tmp_path / "eval"))
    assert result["accuracy"] == 1.0
    assert result["auc"] == pytest.approx(1.0)
    assert (tmp_path / "eval" / "cutoff.json").exists()


def test_config_replay_reproduces_outputs(tmp_path, capsys):
    scores = tmp_path / "scores.csv"
    scores.write_text("label,score\n1,0.9\n1,0.3\n0,0.4\n0,0.2\n")
    _run(capsys, "evaluate", "--scores", str(scores), "--n-cutoffs", "50", "--out-dir", str(tmp_path / "first"))
    _run(capsys, "--config", str(tmp_path / "first" / "run_config.json"), "--out-dir", str(tmp_path / "replay"))
    assert (tmp_path / "first" / "roc.csv").read_bytes() == (tmp_path / "replay" / "roc.csv").read_bytes()


def test_replay_from_another_directory(tmp_path, monkeypatch, capsys):
    work, elsewhere = tmp_path / "work", tmp_path / "elsewhere"
    work.mkdir()
    elsewhere.mkdir()
    (work / "scores.csv").write_text("label,score\n1,0.9\n1,0.3\n0,0.4\n0,0.2\n")
    monkeypatch.chdir(work)
    _run(capsys, "evaluate", "--scores", "scores.csv", "--out-dir", "first")
    config = json.loads((work / "first" / "run_config.json").read_text())
    assert config["inputs"]["scores"] == str((work / "scores.csv").resolve())

    monkeypatch.chdir(elsewhere)
    _run(capsys, "--config", str(work / "first" / "run_config.json"), "--out-dir", "replay")
    assert (work / "first" / "roc.csv").read_bytes() == (elsewhere / "replay" / "roc.csv").read_bytes()


def test_numeric_cutoff_is_not_a_path():
    args = build_parser().parse_args(["screen", "peptides.csv", "--cutoff", "0.25"])
    config = resolve_config(args, Settings())
    assert config.inputs["cutoff"] == "0.25"
    assert Path(config.inputs["input"]).is_absolute()


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2


def test_missing_command_is_usage_error(capsys):
    assert main([]) == 2
    assert "command is required" in capsys.readouterr().err


def test_invalid_value_is_usage_error(tmp_path, capsys):
    assert main(["train-qspr", "--kernels", "11", "--out-dir", str(tmp_path)]) == 2


def test_missing_file_is_module_error(tmp_path, capsys):
    code = main(["ingest", str(tmp_path / "absent.csv"), "--out-dir", str(tmp_path / "out")])
    captured = capsys.readouterr()
    assert code == 1
    assert json.loads(captured.out)["status"] == "error"
    assert "absent.csv" in captured.err


def test_bad_sequence_is_module_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("sequence\nACDE\nACBZ\n")
    assert main(["ingest", str(bad), "--out-dir", str(tmp_path / "out")]) == 1
    assert "line 3" in capsys.readouterr().err


def test_synth_motifs_writes_requested_count(tmp_path, capsys):
    out = tmp_path / "synth"
    result = _run(capsys, "synth-motifs", "--count", "30", "--imposed", "ARND,QAFR", "--flank", "1,3", "--out-dir", str(out))
    assert result["entries"] == 30
    sequences = [r["sequence"] for r in _rows(out / "synthetic.csv")]
    assert all("ARND" in s or "QAFR" in s for s in sequences)


def test_flags_override_settings():
    args = build_parser().parse_args(["train-motif", "--motifs", "0-2", "--uniform-prior"])
    config = resolve_config(args, Settings())
    assert config.motifs == [0, 1, 2]
    assert config.train_prior is False
    assert config.iterations == Settings().iterations


def test_int_list_forms():
    assert int_list("3") == [3]
    assert int_list("1,2,5") == [1, 2, 5]
    assert int_list("4-6") == [4, 5, 6]
