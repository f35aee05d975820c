from __future__ import annotations

from datetime import datetime, timezone
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from peptide_modeler.app.models.mixture import MAX_KERNELS

Command = Literal[
    "ingest",
    "dedup",
    "decoy",
    "split",
    "descriptors",
    "rank",
    "space",
    "train-qspr",
    "train-motif",
    "combine",
    "evaluate",
    "screen",
    "baseline-svm",
    "report-motifs",
    "synth-motifs",
]
SpaceKind = Literal["exact", "normal", "sampled"]
LogStatus = Literal["success", "warning", "error", "skipped"]


class RunConfig(BaseModel):
    """Fully resolved run: the only thing the pipeline reads."""

    command: Command
    seed: int = Field(default=0, ge=0)
    out_dir: str = "out"
    inputs: Dict[str, str] = Field(default_factory=dict)

    # descriptors and ranking
    descriptors: List[str] = Field(default_factory=lambda: ["net_charge", "nonpolar", "n_charged"])
    histidine_charge: float = 0.0
    quantiles: int = Field(default=100, ge=1)
    space_kind: SpaceKind = "exact"
    lengths: List[int] = Field(default_factory=lambda: [3])
    mixed: bool = False
    sample_size: int = Field(default=100_000, ge=1)
    enumeration_cap: int = Field(default=10**7, ge=1)
    fidelity_cap: int = Field(default=10**5, ge=0)

    # QSPR mixture
    kernels: List[int] = Field(default_factory=lambda: [3])
    steps: int = Field(default=3000, ge=0)

    # motif model
    motifs: List[int] = Field(default_factory=lambda: [8])
    width: List[int] = Field(default_factory=lambda: [3])
    l1_strength: float = Field(default=1.0, ge=0)
    noise: float = Field(default=0.05, ge=0, le=1)
    iterations: int = Field(default=1000, ge=0)
    restarts: int = Field(default=1, ge=1)
    train_prior: bool = True

    # combination and evaluation
    weight_grid: List[float] = Field(default_factory=lambda: [i / 100 for i in range(101)])
    n_cutoffs: int = Field(default=1000, ge=2)
    svm_lambda: float = Field(default=1e-3, gt=0)
    epochs: int = Field(default=3000, ge=1)
    min_length: int = Field(default=0, ge=0)

    # dataset preparation
    test_fraction: float = Field(default=0.2, gt=0, lt=1)
    max_subs: int = Field(default=2, ge=0)
    label: Optional[Literal[0, 1]] = None
    count: int = Field(default=200, ge=1)
    flank: List[int] = Field(default_factory=lambda: [0, 4])
    imposed: List[str] = Field(default_factory=lambda: ["ARND", "QAFR", "IEKG"])

    max_workers: int = Field(default=1, ge=1)
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    model_config = ConfigDict(extra="ignore")

    @field_validator("kernels")
    @classmethod
    def _kernels_in_range(cls, v: List[int]) -> List[int]:
        if not v or any(not 1 <= k <= MAX_KERNELS for k in v):
            raise ValueError(f"kernel counts must lie in [1, {MAX_KERNELS}]")
        return v

    @field_validator("motifs")
    @classmethod
    def _motifs_nonnegative(cls, v: List[int]) -> List[int]:
        if not v or any(k < 0 for k in v):
            raise ValueError("motif counts must be >= 0")
        return v

    @field_validator("width", "lengths")
    @classmethod
    def _positive(cls, v: List[int]) -> List[int]:
        if not v or any(x < 1 for x in v):
            raise ValueError("values must be >= 1")
        return v

    @field_validator("weight_grid")
    @classmethod
    def _weights_in_unit_interval(cls, v: List[float]) -> List[float]:
        if not v or any(not 0.0 <= w <= 1.0 for w in v):
            raise ValueError("weights must lie in [0, 1]")
        return v

    @field_validator("descriptors", "imposed")
    @classmethod
    def _nonempty(cls, v: List[str]) -> List[str]:
        if not v:
            raise ValueError("at least one value is required")
        return v

    @model_validator(mode="after")
    def _flank_range(self) -> "RunConfig":
        if len(self.flank) != 2 or self.flank[0] < 0 or self.flank[1] < self.flank[0]:
            raise ValueError("flank must be two lengths lo <= hi")
        return self

    def input(self, role: str) -> Optional[str]:
        return self.inputs.get(role)

    def motif_grid(self) -> List[tuple[int, int]]:
        """(k, w) pairs to train; k = 0 ignores the width and appears once."""
        pairs: List[tuple[int, int]] = []
        for k in self.motifs:
            for w in ([0] if k == 0 else self.width):
                if (k, w) not in pairs:
                    pairs.append((k, w))
        return pairs


class RunLogEntry(BaseModel):
    run_id: str
    ts: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    step: str
    status: LogStatus = "success"
    message: str
    details: Dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(extra="ignore")
