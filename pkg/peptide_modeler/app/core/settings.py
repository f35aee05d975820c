from __future__ import annotations

from pathlib import Path
from typing import List, Literal, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR"]


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_prefix="PEPMOD_", extra="ignore")

    # Paths
    # shipped tables live next to the package unless overridden in env
    data_dir: Path = Path(__file__).resolve().parents[1] / "data"
    out_dir: Path = Path("out")
    property_table: Optional[Path] = None
    frequency_table: Optional[Path] = None

    # Residue table conventions
    histidine_charge: float = 0.0

    # Randomness
    seed: int = 0

    # Chemical space / ranking
    quantiles: int = 100
    enumeration_cap: int = 10**7
    fidelity_cap: int = 10**5
    sample_size: int = 100_000
    descriptors: List[str] = ["net_charge", "nonpolar", "n_charged"]

    # QSPR mixture
    kernels: int = 3
    mh_steps: int = 3000

    # Motif model
    motifs: int = 8
    width: int = 3
    l1_strength: float = 1.0
    noise: float = 0.05
    iterations: int = 1000
    restarts: int = 1
    train_prior: bool = True

    # Evaluation
    weight_grid_size: int = 101
    n_cutoffs: int = 1000
    svm_lambda: float = 1e-3

    # Dataset preparation
    test_fraction: float = 0.2
    max_subs: int = 2
    min_length: int = 0

    # Execution
    max_workers: int = 1
    log_level: LogLevel = "INFO"

    def property_table_path(self) -> Path:
        return self.property_table or self.data_dir / "residue_properties.csv"

    def frequency_table_path(self) -> Path:
        return self.frequency_table or self.data_dir / "pdb_frequencies.csv"


def get_settings() -> Settings:
    return Settings()
