import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from extmle import fixtures
from extmle.tables import (ContingencyTable, FactorGrid, ModelSpec, ModelSpecError, TableFormatError,
                           parse_model, parse_table, serialize_table, table_from_zero_pattern)

levels_st = st.lists(st.integers(2, 4), min_size=1, max_size=4)


@st.composite
def tables(draw):
    levels = draw(levels_st)
    grid = FactorGrid.from_levels(levels)
    counts = draw(st.lists(st.integers(0, 50), min_size=grid.cell_count, max_size=grid.cell_count))
    return ContingencyTable(grid, np.array(counts))


@given(tables(), st.booleans())
def test_round_trip(table, sparse):
    doc = serialize_table(table, sparse=sparse)
    assert parse_table(json.dumps(doc)) == table


@given(levels_st, st.data())
def test_linear_multi_inverse(levels, data):
    grid = FactorGrid.from_levels(levels)
    i = data.draw(st.integers(0, grid.cell_count - 1))
    assert grid.to_linear(grid.to_multi(i)) == i


def test_c_order():
    grid = FactorGrid.from_levels([2, 3])
    assert [grid.to_multi(i) for i in range(6)] == list(grid.cells())
    assert grid.to_multi(1) == (0, 1)


def test_corner_zeros_document():
    doc = json.loads(fixtures.path("corner_zeros_2x2x2").read_text())
    table = parse_table(doc)
    assert table.counts.tolist() == [0, 1, 1, 1, 1, 1, 1, 0]
    assert len(doc["cells"]) == 6


@pytest.mark.parametrize("doc, message", [
    ({"factors": [{"levels": 2}], "counts": [1, -1]}, "nonnegative"),
    ({"factors": [{"levels": 2}], "counts": [1, 1.5]}, "integer"),
    ({"factors": [{"levels": 2}], "counts": [1]}, "expected 2"),
    ({"factors": [{"levels": 2}], "cells": [{"index": [1], "count": 1}, {"index": [1], "count": 2}]},
     "duplicate"),
    ({"factors": [{"levels": 2}], "cells": [{"index": [3], "count": 1}]}, "out of range"),
    ({"factors": [{"levels": 2}], "counts": [1, 1], "cells": []}, "exactly one"),
    ({"factors": [{"levels": 1}], "counts": [1]}, ">= 2"),
    ({"counts": [1]}, "factors"),
])
def test_invalid_documents(doc, message):
    with pytest.raises(TableFormatError, match=message):
        parse_table(doc)


def test_invalid_json():
    with pytest.raises(TableFormatError, match="invalid JSON"):
        parse_table("{nope")


def test_parse_model_forms():
    grid = FactorGrid(("A", "B", "C"), (2, 2, 2))
    expected = parse_model("[12][13][23]", grid)
    assert parse_model("[A B][A,C][B C]", grid) == expected
    assert parse_model("[AB][AC][BC]", grid) == expected
    assert parse_model(" [23] [12][13] ", grid) == expected
    assert expected.label(grid) == "[AB][AC][BC]"


@pytest.mark.parametrize("spec, message", [
    ("[9]", "unknown factor label"),
    ("[12][]", "empty term"),
    ("", "empty model"),
    ("[12] x", "cannot parse"),
])
def test_parse_model_errors(spec, message):
    with pytest.raises(ModelSpecError, match=message):
        parse_model(spec, FactorGrid.from_levels([2, 2, 2]))


atoms = st.frozensets(st.integers(0, 3), min_size=1, max_size=4)


@given(st.lists(atoms, min_size=1, max_size=6))
def test_normalization_idempotent(terms):
    spec = ModelSpec(tuple(terms), 4)
    assert ModelSpec(spec.terms, 4) == spec
    assert all(not (a < b) for a in spec.terms for b in spec.terms)
    assert ModelSpec(tuple(reversed(terms)), 4) == spec


def test_dominated_terms_dropped():
    spec = ModelSpec((frozenset({0}), frozenset({0, 1}), frozenset({0, 1})), 2)
    assert spec.terms == (frozenset({0, 1}),)
    assert spec.saturated


def test_zero_pattern_helper():
    grid = FactorGrid.from_levels([2, 2])
    t = table_from_zero_pattern(grid, [(1, 0)], fill=3)
    assert t.counts.tolist() == [3, 3, 0, 3]
    assert t.support() == frozenset({0, 1, 3})


def test_counts_read_only():
    t = ContingencyTable(FactorGrid.from_levels([2, 2]), np.array([1, 2, 3, 4]))
    with pytest.raises(ValueError):
        t.counts[0] = 5


def test_fixture_names():
    assert {"corner_zeros_2x2x2", "nine_zeros_3x3x3", "eight_zeros_3x3x3", "sparse_exists_3x3x3",
            "four_cycle_3x3x3x3"} <= set(fixtures.names())
    with pytest.raises(FileNotFoundError):
        fixtures.path("nope")
