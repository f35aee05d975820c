from __future__ import annotations

import csv
import io
import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple

from peptide_modeler.app.core.errors import DatasetFormatError
from peptide_modeler.app.models.sequences import (
    DEFAULT_ALPHABET,
    Alphabet,
    DatasetEntry,
    Peptide,
    PeptideDataset,
    ResidueFrequency,
)

logger = logging.getLogger(__name__)

DatasetSchema = Literal["sequences", "descriptors"]

SEQUENCE_COLUMN = "sequence"
LABEL_COLUMN = "label"


def format_number(value: float) -> str:
    v = float(value)
    if v.is_integer():
        return str(int(v))
    return repr(v)


def _parse_label(raw: str, line: int) -> Optional[int]:
    raw = raw.strip()
    if raw == "":
        return None
    try:
        value = float(raw)
    except ValueError:
        raise DatasetFormatError(f"line {line}: label '{raw}' is not a number") from None
    if value not in (0.0, 1.0):
        raise DatasetFormatError(f"line {line}: label must be 0 or 1, got '{raw}'")
    return int(value)


def parse_dataset(
    text: str,
    schema: DatasetSchema = "descriptors",
    alphabet: Alphabet = DEFAULT_ALPHABET,
    provenance: str = "dataset",
) -> PeptideDataset:
    """Parse a comma-separated dataset whose first header column is `sequence`.

    A `label` column, when present, holds 0/1 activity labels; every other column
    is a descriptor. With schema="sequences" descriptor columns are ignored.
    """
    lines = text.splitlines()
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetFormatError("dataset is empty; expected a header line") from None

    header = [h.strip() for h in header]
    if not header or header[0].lower() != SEQUENCE_COLUMN:
        raise DatasetFormatError(f"line 1: first header column must be '{SEQUENCE_COLUMN}', got '{header[0] if header else ''}'")
    if len(set(header)) != len(header):
        raise DatasetFormatError("line 1: duplicate header columns")

    label_idx = header.index(LABEL_COLUMN) if LABEL_COLUMN in header else None
    desc_cols = [(i, h) for i, h in enumerate(header) if i != 0 and i != label_idx]
    if schema == "sequences":
        names: List[str] = []
    else:
        names = [h for _, h in desc_cols]

    entries: List[DatasetEntry] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DatasetFormatError(f"line {line_no}: expected {len(header)} fields, found {len(row)}")
        peptide = Peptide.from_string(row[0], alphabet, line=line_no)
        label = _parse_label(row[label_idx], line_no) if label_idx is not None else None
        values: Dict[str, float] = {}
        if schema == "descriptors":
            for i, name in desc_cols:
                raw = row[i].strip()
                try:
                    values[name] = float(raw)
                except ValueError:
                    raise DatasetFormatError(f"line {line_no}: descriptor '{name}' value '{raw}' is not a number") from None
        entries.append(DatasetEntry(peptide, label, values))

    logger.debug(f"Parsed {len(entries)} entries ({len(names)} descriptor columns) from {provenance}")
    return PeptideDataset(tuple(entries), provenance, tuple(names))


def read_dataset(path: Path, schema: DatasetSchema = "descriptors", alphabet: Alphabet = DEFAULT_ALPHABET) -> PeptideDataset:
    try:
        text = Path(path).read_text(encoding="utf-8-sig")
    except OSError as e:
        raise DatasetFormatError(f"cannot read dataset {path}: {e}") from e
    return parse_dataset(text, schema, alphabet, provenance=Path(path).stem)


def format_dataset(data: PeptideDataset, names: Optional[Sequence[str]] = None) -> str:
    cols = list(names) if names is not None else list(data.descriptor_names)
    with_label = any(e.label is not None for e in data.entries)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([SEQUENCE_COLUMN] + ([LABEL_COLUMN] if with_label else []) + cols)
    for e in data.entries:
        row = [e.sequence]
        if with_label:
            row.append("" if e.label is None else str(e.label))
        row.extend(format_number(e.descriptors[c]) for c in cols)
        writer.writerow(row)
    return buf.getvalue()


def parse_frequencies(text: str, alphabet: Alphabet = DEFAULT_ALPHABET) -> ResidueFrequency:
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["symbol", "probability"]:
        raise DatasetFormatError("frequency table header must be 'symbol,probability'")
    probs: Dict[str, float] = {}
    for line_no, row in enumerate(reader, start=2):
        symbol = (row["symbol"] or "").strip().upper()
        if symbol not in alphabet:
            raise DatasetFormatError(f"line {line_no}: unknown symbol '{symbol}'")
        if symbol in probs:
            raise DatasetFormatError(f"line {line_no}: duplicate symbol '{symbol}'")
        try:
            probs[symbol] = float(row["probability"])
        except (TypeError, ValueError):
            raise DatasetFormatError(f"line {line_no}: probability '{row['probability']}' is not a number") from None
    missing = [s for s in alphabet.symbols if s not in probs]
    if missing:
        raise DatasetFormatError(f"frequency table lacks symbols: {''.join(missing)}")
    return ResidueFrequency(tuple(probs[s] for s in alphabet.symbols), alphabet)


def read_frequencies(path: Path, alphabet: Alphabet = DEFAULT_ALPHABET) -> ResidueFrequency:
    try:
        text = Path(path).read_text(encoding="utf-8-sig")
    except OSError as e:
        raise DatasetFormatError(f"cannot read frequency table {path}: {e}") from e
    return parse_frequencies(text, alphabet)


def parse_scores(text: str) -> Tuple[List[float], List[float]]:
    """Split a `label,score` table into positive and negative scores."""
    reader = csv.DictReader(text.splitlines())
    fields = [f.strip() for f in reader.fieldnames or []]
    if LABEL_COLUMN not in fields or "score" not in fields:
        raise DatasetFormatError("score table header must contain 'label' and 'score'")
    reader.fieldnames = fields
    pos: List[float] = []
    neg: List[float] = []
    for line_no, row in enumerate(reader, start=2):
        label = _parse_label(row[LABEL_COLUMN] or "", line_no)
        if label is None:
            raise DatasetFormatError(f"line {line_no}: missing label")
        try:
            score = float(row["score"])
        except (TypeError, ValueError):
            raise DatasetFormatError(f"line {line_no}: score '{row['score']}' is not a number") from None
        (pos if label == 1 else neg).append(score)
    return pos, neg


def read_scores(path: Path) -> Tuple[List[float], List[float]]:
    try:
        text = Path(path).read_text(encoding="utf-8-sig")
    except OSError as e:
        raise DatasetFormatError(f"cannot read score table {path}: {e}") from e
    return parse_scores(text)
