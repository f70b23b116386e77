"""Regenerate the bundled example tables in src/extmle/fixtures/.

Positive cells are filled with 1; only the zero pattern matters for the
facial set.  Zero patterns below are written as one string per displayed
slice, rows separated by commas, '0' marking a sampling zero.
"""

import json
from pathlib import Path

from extmle.tables import FactorGrid, serialize_table, table_from_zero_pattern

OUT = Path(__file__).resolve().parents[1] / "src" / "extmle" / "fixtures"


def slices_3d(slices):
    # slice s, row r, column c -> cell (r, c, s)
    return [(r, c, s) for s, sl in enumerate(slices)
            for r, row in enumerate(sl.split(",")) for c, ch in enumerate(row) if ch == "0"]


def blocks_4d(groups):
    # group g, table h, row r, column c -> cell (g, h, c, r)
    return [(g, h, c, r) for g, tables in enumerate(groups) for h, sl in enumerate(tables)
            for r, row in enumerate(sl.split(",")) for c, ch in enumerate(row) if ch == "0"]


FIXTURES = {
    "corner_zeros_2x2x2": dict(
        levels=(2, 2, 2), model="[12][13][23]", sparse=True,
        zeros=[(0, 0, 0), (1, 1, 1)],
        description="2x2x2 table, two zeros on the diagonal corners; nonexistent MLE with positive margins",
    ),
    "nine_zeros_3x3x3": dict(
        levels=(3, 3, 3), model="[12][13][23]",
        zeros=slices_3d(["0..,...,00.", "...,.00,.0.", "0.0,..0,..."]),
        description="3x3x3 table, nine likelihood zeros exposing a facet (facial set of 18 cells)",
    ),
    "eight_zeros_3x3x3": dict(
        levels=(3, 3, 3), model="[12][13][23]",
        zeros=slices_3d(["0..,0..,...", "...,..0,.00", "0.0,0..,..."]),
        description="3x3x3 table, eight zeros of which two are not likelihood zeros; 3 adjusted df",
    ),
    "sparse_exists_3x3x3": dict(
        levels=(3, 3, 3), model="[12][13][23]",
        zeros=slices_3d([".00,0.0,00.", "00.,.00,0.0", "0.0,00.,.00"]),
        description="3x3x3 table with 18 zeros whose MLE nevertheless exists",
    ),
    "facet_4x4x4": dict(
        levels=(4, 4, 4), model="[12][13][23]",
        zeros=slices_3d(["000.,00..,0...,....", ".00.,.0..,....,.000",
                         "..0.,....,0.00,..00", "....,00.0,0..0,...0"]),
        description="4x4x4 table, 24 zeros exposing a facet of the marginal cone",
    ),
    "four_cycle_3x3x3x3": dict(
        levels=(3, 3, 3, 3), model="[12][14][23][34]",
        zeros=blocks_4d([
            ["0.0,..0,...", "000,000,00.", "000,.00,.0."],
            ["0.0,000,000", "0..,000,00.", "...,.00,.0."],
            ["0.0,..0,000", "0..,...,00.", "000,.00,000"],
        ]),
        description="3^4 table under the 4-cycle model, 51 zeros exposing a facet",
    ),
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, spec in FIXTURES.items():
        grid = FactorGrid.from_levels(spec["levels"])
        table = table_from_zero_pattern(grid, spec["zeros"])
        doc = {"description": spec["description"], "model": spec["model"]}
        doc.update(serialize_table(table, sparse=spec.get("sparse", False)))
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")
    indep = {"description": "2x2 table for the independence model", "model": "[1][2]",
             "factors": [{"name": "1", "levels": 2}, {"name": "2", "levels": 2}],
             "counts": [2, 3, 1, 4]}
    (OUT / "independence_2x2.json").write_text(json.dumps(indep, indent=1) + "\n")
    print(f"wrote {len(FIXTURES) + 1} fixtures to {OUT}")


if __name__ == "__main__":
    main()
