from __future__ import annotations

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from pydantic import BaseModel

from peptide_modeler.app.models.run import RunLogEntry


class ArtifactStore(ABC):
    """Destination for a run's outputs and its run log."""

    @abstractmethod
    def path(self, name: str) -> Path:
        ...

    @abstractmethod
    def write_text(self, name: str, text: str) -> Path:
        ...

    @abstractmethod
    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]], footer: Optional[str] = None) -> Path:
        ...

    @abstractmethod
    def write_document(self, name: str, document: BaseModel) -> Path:
        ...

    @abstractmethod
    def log(self, record: RunLogEntry) -> None:
        ...
