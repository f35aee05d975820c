from __future__ import annotations

from pathlib import Path
from typing import Annotated, Union

from pydantic import Field, TypeAdapter, ValidationError

from peptide_modeler.app.core.errors import ModelFileError
from peptide_modeler.app.models.combined import CombinedModel
from peptide_modeler.app.models.evaluation import SvmModel
from peptide_modeler.app.models.mixture import MixtureModel
from peptide_modeler.app.models.motif import MotifModelDocument

ModelFile = Annotated[
    Union[MixtureModel, MotifModelDocument, CombinedModel, SvmModel],
    Field(discriminator="model_type"),
]

_adapter: TypeAdapter[ModelFile] = TypeAdapter(ModelFile)


def parse_model_file(text: str, source: str = "model") -> ModelFile:
    try:
        return _adapter.validate_json(text)
    except ValidationError as e:
        raise ModelFileError(f"{source}: not a valid model file ({e.error_count()} errors): {e.errors()[0]['msg']}") from e


def read_model_file(path: Path) -> ModelFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ModelFileError(f"cannot read model file {path}: {e}") from e
    return parse_model_file(text, str(path))
