from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, model_validator


class RocPoint(BaseModel):
    cutoff: float
    fpr: float = Field(ge=0, le=1)
    tpr: float = Field(ge=0, le=1)


class RocCurve(BaseModel):
    points: List[RocPoint]
    auc: float = Field(ge=0, le=1)

    @model_validator(mode="after")
    def _check(self) -> "RocCurve":
        if not self.points:
            raise ValueError("ROC curve needs at least one point")
        return self


class CutoffChoice(BaseModel):
    cutoff: float
    fpr: float
    tpr: float
    objective: float


class ConfusionSummary(BaseModel):
    tp: NonNegativeInt
    fp: NonNegativeInt
    tn: NonNegativeInt
    fn: NonNegativeInt
    accuracy: float = Field(ge=0, le=1)
    mcc: float = Field(ge=-1, le=1)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class EvaluationResult(BaseModel):
    roc: RocCurve
    cutoff: CutoffChoice
    confusion: ConfusionSummary


class SvmModel(BaseModel):
    """Linear classifier over standardized descriptor ranks; the bias is the last weight."""

    model_type: Literal["svm"] = "svm"
    descriptors: List[str]
    weights: List[float]
    feature_mean: List[float]
    feature_scale: List[float]
    regularization: float = Field(gt=0)
    epochs: int = Field(ge=1)
    seed: Optional[int] = None
    decision_shift: float = 0.0
    cutoff: Optional[float] = None

    model_config = ConfigDict(extra="ignore")

    @model_validator(mode="after")
    def _check(self) -> "SvmModel":
        d = len(self.descriptors)
        if len(self.weights) != d + 1 or len(self.feature_mean) != d or len(self.feature_scale) != d:
            raise ValueError("weights and feature scaling must match the descriptor list")
        return self


class ScreenSummary(BaseModel):
    total: int
    eligible: int
    selected: int
    selected_fraction: float
    cutoff: float
    min_length: int
