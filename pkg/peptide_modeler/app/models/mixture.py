from __future__ import annotations

from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

ActivityState = Literal[0, 1]
MAX_KERNELS = 10


class GaussianKernel(BaseModel):
    mean: float
    sd: float = Field(gt=0)
    weight: float = Field(ge=0, le=1)

    model_config = ConfigDict(frozen=True)


class TrainingInfo(BaseModel):
    steps: int = 0
    seed: Optional[int] = None
    burn_in: int = 0
    acceptance_rate: Optional[float] = None
    chain_acceptance: Dict[str, float] = Field(default_factory=dict)


class MixtureModel(BaseModel):
    """Two-state mixture classifier: per state and descriptor, k Gaussian kernels over ranks."""

    model_type: Literal["qspr"] = "qspr"
    kernels: int = Field(ge=1, le=MAX_KERNELS)
    quantiles: int = Field(default=100, ge=1)
    descriptors: List[str]
    states: Dict[int, Dict[str, List[GaussianKernel]]]
    training: TrainingInfo = Field(default_factory=TrainingInfo)

    model_config = ConfigDict(extra="ignore")

    @model_validator(mode="after")
    def _check(self) -> "MixtureModel":
        if set(self.states) != {0, 1}:
            raise ValueError("mixture model needs kernels for states 0 and 1")
        names = set(self.descriptors)
        for state, per_desc in self.states.items():
            if set(per_desc) != names:
                raise ValueError(f"state {state} descriptors {sorted(per_desc)} differ from {sorted(names)}")
            for name, kernels in per_desc.items():
                if len(kernels) != self.kernels:
                    raise ValueError(f"state {state}, {name}: expected {self.kernels} kernels, found {len(kernels)}")
                total = sum(k.weight for k in kernels)
                if abs(total - 1.0) > 1e-9:
                    raise ValueError(f"state {state}, {name}: kernel weights sum to {total!r}")
        return self

    def kernel_arrays(self, state: int, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ks = self.states[state][name]
        return (
            np.array([k.mean for k in ks]),
            np.array([k.sd for k in ks]),
            np.array([k.weight for k in ks]),
        )
