from __future__ import annotations

import numpy as np
import pytest

from peptide_modeler.app.core.errors import DatasetFormatError, UnknownDescriptorError, UnsupportedDescriptorError
from peptide_modeler.app.models.properties import TABLE_COLUMNS, available_descriptors
from peptide_modeler.app.models.sequences import CANONICAL_AMINO_ACIDS, Peptide
from peptide_modeler.app.services.descriptors.service import (
    annotate_dataset,
    component_moments,
    compute_descriptors,
    parse_property_table,
)
from peptide_modeler.tests.helpers import dataset, random_sequences

ALL = available_descriptors()


def _table_text(aromatic: str = "FWY", mass: float | None = None) -> str:
    lines = ["symbol," + ",".join(TABLE_COLUMNS)]
    for s in CANONICAL_AMINO_ACIDS:
        m = mass if mass is not None else 100 + CANONICAL_AMINO_ACIDS.index(s)
        lines.append(f"{s},0,0,1,{int(s in aromatic)},0,0,{m}")
    return "\n".join(lines) + "\n"


def test_single_residue_equals_table_row(table):
    vector = compute_descriptors(Peptide.from_string("K"), table, ALL)
    row = table.rows["K"]
    for name in TABLE_COLUMNS:
        assert vector[name] == float(getattr(row, name))
    assert vector["net_charge"] == row.charge
    assert vector["n_charged"] == 1.0


def test_kk_charges(table):
    vector = compute_descriptors(Peptide.from_string("KK"), table, ["net_charge", "n_charged"])
    assert vector["net_charge"] == 2 * table.rows["K"].charge
    assert vector["n_charged"] == 2


def test_additive_over_concatenation(table, rng):
    for a, b in zip(random_sequences(rng, 20), random_sequences(rng, 20)):
        whole = compute_descriptors(Peptide.from_string(a + b), table, ALL)
        left = compute_descriptors(Peptide.from_string(a), table, ALL)
        right = compute_descriptors(Peptide.from_string(b), table, ALL)
        for name in ALL:
            assert whole[name] == pytest.approx(left[name] + right[name], abs=1e-9)


def test_permutation_invariant_and_charge_bound(table, rng):
    for seq in random_sequences(rng, 30):
        shuffled = "".join(rng.permutation(list(seq)))
        a = compute_descriptors(Peptide.from_string(seq), table, ALL)
        b = compute_descriptors(Peptide.from_string(shuffled), table, ALL)
        for name in ALL:
            assert a[name] == pytest.approx(b[name], abs=1e-9)
        assert a["n_charged"] >= abs(a["net_charge"])


def test_unknown_descriptor_lists_available(table):
    with pytest.raises(UnknownDescriptorError) as exc:
        compute_descriptors(Peptide.from_string("A"), table, ["hydrophobicity"])
    assert "net_charge" in str(exc.value)


def test_alogp_is_unsupported(table):
    with pytest.raises(UnsupportedDescriptorError):
        compute_descriptors(Peptide.from_string("A"), table, ["alogp"])


def test_component_moments_indicator_with_five_ones():
    table = parse_property_table(_table_text(aromatic="ACDEF"))
    assert component_moments(table, "aromatic") == (pytest.approx(0.25), pytest.approx(0.1875))


def test_component_moments_constant_column():
    table = parse_property_table(_table_text(mass=110.0))
    assert component_moments(table, "mass") == (110.0, 0.0)


def test_mass_moments_match_brute_force(table):
    masses = [table.rows[s].mass for s in CANONICAL_AMINO_ACIDS]
    mu, sigma2 = component_moments(table, "mass")
    mean = sum(masses) / 20
    assert mu == pytest.approx(mean, abs=1e-12)
    assert sigma2 == pytest.approx(sum((m - mean) ** 2 for m in masses) / 20, abs=1e-9)


def test_histidine_alternate_charge():
    text = _table_text()
    table = parse_property_table(text, histidine_charge=1.0)
    assert table.rows["H"].charge == 1.0
    assert table.rows["H"].value("n_charged") == 1.0


def test_property_table_errors():
    with pytest.raises(DatasetFormatError, match="header"):
        parse_property_table("symbol,charge\nA,0\n")
    with pytest.raises(DatasetFormatError, match="lacks rows"):
        parse_property_table("\n".join(_table_text().splitlines()[:-1]) + "\n")


def test_annotate_dataset_adds_columns(table):
    data = annotate_dataset(dataset(["KK", "DE", "AW"]), table, ["net_charge", "aromatic"])
    assert data.descriptor_names == ("net_charge", "aromatic")
    assert np.array_equal(data.descriptor_matrix(), [[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0]])
