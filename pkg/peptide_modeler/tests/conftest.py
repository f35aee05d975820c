from __future__ import annotations

import numpy as np
import pytest

from peptide_modeler.app.core.settings import Settings
from peptide_modeler.app.models.properties import ResiduePropertyTable
from peptide_modeler.app.services.descriptors.service import load_property_table


@pytest.fixture(scope="session")
def table() -> ResiduePropertyTable:
    return load_property_table(Settings().property_table_path())


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
