"""Facet censuses of marginal cones.

    python scripts/facet_census.py                 # quick presets
    python scripts/facet_census.py --long --budget 1800

``--long`` adds the 4x4x4 no-three-way model (113,740 facets), which is
far beyond desk-scale double description; the budget caps it and the
partial count is reported.
"""

import argparse
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

from extmle.design import build_design_matrix
from extmle.polyhedra import enumerate_facets
from extmle.tables import FactorGrid, parse_model


@dataclass
class CensusJob:
    levels: tuple[int, ...]
    model: str
    expected_facets: int | None = None
    expected_zero_margin: int | None = None


QUICK = [
    CensusJob((2, 2), "[1][2]", 4, 4),
    CensusJob((2, 2, 2), "[12][13][23]", 16, 12),
    CensusJob((3, 3, 3), "[12][13][23]", 207, 27),
    CensusJob((3, 3, 3, 3), "[12][14][23][34]", 1116, 36),
]
LONG = [CensusJob((4, 4, 4), "[12][13][23]", 113740)]


def run_job(job: CensusJob, budget: float | None) -> dict:
    grid = FactorGrid.from_levels(job.levels)
    census = enumerate_facets(build_design_matrix(grid, parse_model(job.model, grid)), budget)
    return dict(asdict(job), rank=census.rank, facets=census.n_facets,
                zero_margin=census.zero_margin_count, complete=census.complete,
                seconds=round(census.elapsed, 2), peak_rays=census.stats.get("peak_rays"))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--long", action="store_true")
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--out", type=Path)
    p.add_argument("--verbose", action="store_true")
    args = p.parse_args()
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    rows = []
    for job in QUICK + (LONG if args.long else []):
        r = run_job(job, args.budget)
        rows.append(r)
        ok = "" if r["expected_facets"] is None or not r["complete"] else (
            "ok" if r["facets"] == r["expected_facets"] else "MISMATCH")
        state = "" if r["complete"] else " (partial)"
        print(f"{'x'.join(map(str, job.levels)):<9}{job.model:<20} rank {r['rank']:>3}  "
              f"facets {r['facets']:>7}{state}  zero-margin {r['zero_margin']:>4}  "
              f"{r['seconds']:>8.2f} s  {ok}")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(rows, indent=2) + "\n")


if __name__ == "__main__":
    main()
