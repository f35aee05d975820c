from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from peptide_modeler.app.core.errors import CalibrationError
from peptide_modeler.app.models.mixture import MixtureModel
from peptide_modeler.app.models.motif import MotifModel, MotifModelDocument


class Normalizers(BaseModel):
    """Log of the highest likelihood each half assigns to a reference entry."""

    qspr_log_max: float
    motif_log_max: float
    reference: str = "reference"
    reference_size: int = Field(ge=1)


class CombinedModel(BaseModel):
    """(1 - weight) x normalized QSPR likelihood + weight x normalized motif likelihood."""

    model_type: Literal["combined"] = "combined"
    weight: float = Field(ge=0, le=1)
    qspr: MixtureModel
    motif: MotifModelDocument
    normalizers: Optional[Normalizers] = None

    model_config = ConfigDict(extra="ignore")

    @classmethod
    def from_halves(cls, qspr: MixtureModel, motif: MotifModel, weight: float, normalizers: Optional[Normalizers] = None) -> "CombinedModel":
        return cls(weight=weight, qspr=qspr, motif=motif.to_document(), normalizers=normalizers)

    def motif_model(self) -> MotifModel:
        return self.motif.to_model()

    def require_normalizers(self) -> Normalizers:
        if self.normalizers is None:
            raise CalibrationError("combined model is not calibrated")
        return self.normalizers
