from __future__ import annotations

from typing import Iterable, Optional


class PeptideModelerError(Exception):
    """Base class for every error the CLI reports with exit status 1."""


class SequenceValidationError(PeptideModelerError, ValueError):
    def __init__(self, letter: str, line: Optional[int] = None, sequence: Optional[str] = None):
        self.letter = letter
        self.line = line
        self.sequence = sequence
        where = f"line {line}: " if line is not None else ""
        seq = f" in sequence '{sequence}'" if sequence else ""
        super().__init__(f"{where}invalid residue '{letter}'{seq}")


class DatasetFormatError(PeptideModelerError, ValueError):
    pass


class UnknownDescriptorError(PeptideModelerError, KeyError):
    def __init__(self, name: str, available: Iterable[str]):
        self.name = name
        self.available = sorted(available)
        super().__init__(f"unknown descriptor '{name}'; available: {', '.join(self.available)}")

    def __str__(self) -> str:
        return self.args[0]


class UnsupportedDescriptorError(UnknownDescriptorError):
    def __init__(self, name: str, available: Iterable[str]):
        super().__init__(name, available)
        self.args = (f"unsupported descriptor '{name}' (not additive over residues); available: {', '.join(self.available)}",)


class CapacityError(PeptideModelerError, ValueError):
    pass


class DegenerateDescriptorError(PeptideModelerError, ValueError):
    pass


class TrainingError(PeptideModelerError, ValueError):
    pass


class CalibrationError(PeptideModelerError, ValueError):
    pass


class EvaluationError(PeptideModelerError, ValueError):
    pass


class ModelFileError(PeptideModelerError, ValueError):
    pass
