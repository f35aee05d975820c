from __future__ import annotations

from typing import Dict, List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveFloat, model_validator

from peptide_modeler.app.core.errors import UnknownDescriptorError, UnsupportedDescriptorError
from peptide_modeler.app.models.sequences import DEFAULT_ALPHABET, Alphabet

# -------------------------------------------------------------------------
# Descriptor names
# -------------------------------------------------------------------------

TABLE_COLUMNS = ("charge", "polar", "nonpolar", "aromatic", "hb_donors", "hb_acceptors", "mass")
DERIVED_DESCRIPTORS = ("net_charge", "n_charged")
UNSUPPORTED_DESCRIPTORS = ("alogp",)


def available_descriptors() -> List[str]:
    return list(TABLE_COLUMNS) + list(DERIVED_DESCRIPTORS)


class ResidueProperties(BaseModel):
    charge: float
    polar: Literal[0, 1]
    nonpolar: Literal[0, 1]
    aromatic: Literal[0, 1]
    hb_donors: NonNegativeInt
    hb_acceptors: NonNegativeInt
    mass: PositiveFloat

    model_config = ConfigDict(extra="forbid", frozen=True)

    def value(self, name: str) -> float:
        if name == "net_charge":
            return float(self.charge)
        if name == "n_charged":
            return 1.0 if self.charge != 0 else 0.0
        return float(getattr(self, name))


class ResiduePropertyTable(BaseModel):
    """Per-residue additive descriptor contributions keyed by one-letter symbol."""

    rows: Dict[str, ResidueProperties] = Field(default_factory=dict)

    model_config = ConfigDict(extra="ignore", frozen=True)

    @model_validator(mode="after")
    def _covers_alphabet(self) -> "ResiduePropertyTable":
        missing = [s for s in DEFAULT_ALPHABET.symbols if s not in self.rows]
        if missing:
            raise ValueError(f"property table lacks rows for: {''.join(missing)}")
        return self

    def column(self, name: str, alphabet: Alphabet = DEFAULT_ALPHABET) -> np.ndarray:
        check_descriptor(name)
        return np.array([self.rows[s].value(name) for s in alphabet.symbols], dtype=float)


def check_descriptor(name: str) -> None:
    if name.lower() in UNSUPPORTED_DESCRIPTORS:
        raise UnsupportedDescriptorError(name, available_descriptors())
    if name not in TABLE_COLUMNS and name not in DERIVED_DESCRIPTORS:
        raise UnknownDescriptorError(name, available_descriptors())
