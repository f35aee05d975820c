from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from peptide_modeler.app.core.errors import DatasetFormatError
from peptide_modeler.app.models.properties import TABLE_COLUMNS, ResidueProperties, ResiduePropertyTable, check_descriptor
from peptide_modeler.app.models.sequences import DEFAULT_ALPHABET, Alphabet, Peptide, PeptideDataset

logger = logging.getLogger(__name__)

DescriptorVector = Dict[str, float]


def _number(raw: Optional[str], line: int) -> float | int:
    text = (raw or "").strip()
    try:
        value = float(text)
    except ValueError:
        raise DatasetFormatError(f"line {line}: '{text}' is not a number") from None
    return int(value) if value.is_integer() else value


def parse_property_table(text: str, histidine_charge: Optional[float] = None) -> ResiduePropertyTable:
    reader = csv.DictReader(text.splitlines())
    expected = ["symbol", *TABLE_COLUMNS]
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
        raise DatasetFormatError(f"property table header must be '{','.join(expected)}'")

    rows: Dict[str, ResidueProperties] = {}
    for line_no, raw in enumerate(reader, start=2):
        symbol = (raw.pop("symbol") or "").strip().upper()
        if symbol in rows:
            raise DatasetFormatError(f"line {line_no}: duplicate residue '{symbol}'")
        try:
            rows[symbol] = ResidueProperties.model_validate({k.strip(): _number(v, line_no) for k, v in raw.items()})
        except ValidationError as e:
            raise DatasetFormatError(f"line {line_no}: invalid row for '{symbol}': {e.errors()[0]['msg']}") from None

    if histidine_charge is not None and "H" in rows:
        rows["H"] = rows["H"].model_copy(update={"charge": float(histidine_charge)})

    try:
        return ResiduePropertyTable(rows=rows)
    except ValidationError as e:
        raise DatasetFormatError(f"invalid property table: {e.errors()[0]['msg']}") from None


def load_property_table(path: Path, histidine_charge: Optional[float] = None) -> ResiduePropertyTable:
    try:
        text = Path(path).read_text(encoding="utf-8-sig")
    except OSError as e:
        raise DatasetFormatError(f"cannot read property table {path}: {e}") from e
    return parse_property_table(text, histidine_charge)


def compute_descriptors(p: Peptide, table: ResiduePropertyTable, names: Sequence[str]) -> DescriptorVector:
    """Sum each residue's table contribution, in sequence order."""
    symbols = p.alphabet.symbols
    out: DescriptorVector = {}
    for name in names:
        check_descriptor(name)
        total = 0.0
        for r in p.residues:
            total += table.rows[symbols[r]].value(name)
        out[name] = total
    return out


def component_moments(table: ResiduePropertyTable, name: str, alphabet: Alphabet = DEFAULT_ALPHABET) -> Tuple[float, float]:
    values = table.column(name, alphabet)
    return float(np.mean(values)), float(np.var(values))


def annotate_dataset(data: PeptideDataset, table: ResiduePropertyTable, names: Sequence[str]) -> PeptideDataset:
    for name in names:
        check_descriptor(name)
    values: List[DescriptorVector] = [compute_descriptors(e.peptide, table, names) for e in data.entries]
    logger.info(f"Computed {len(names)} descriptors for {len(data)} peptides")
    return data.with_descriptors(values, names)
