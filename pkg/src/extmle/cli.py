"""Batch front end: ``extmle analyze | census | check``.

Exit status: 0 verified (or census complete), 1 input error, 2
nonconvergence or failed verification, 3 census budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .design import (POISSON_MULTINOMIAL, SamplingScheme, SchemeError, build_design_matrix,
                     build_sampling_matrix, sufficient_statistics)
from .fitting import METHODS, FitOptions, NonConvergenceError, fit_extended_mle
from .inference import (VERIFIED, adjusted_df, estimable_directions, goodness_of_fit, verify_fit)
from .polyhedra import FacialSet, enumerate_facets, facial_set, rational_str
from .tables import (ContingencyTable, FactorGrid, ModelSpecError, TableFormatError, load_table,
                     parse_model)

log = logging.getLogger("extmle")

EXIT_OK, EXIT_INPUT, EXIT_FIT, EXIT_BUDGET = 0, 1, 2, 3
BUDGET_ENV = "EXTMLE_BUDGET_SECS"
INPUT_ERRORS = (TableFormatError, ModelSpecError, SchemeError, OSError, ValueError)


@dataclass
class AnalysisRequest:
    table: str | None
    model: str
    scheme: str = "poisson"
    method: str = "both"
    tol_moment: float = 1e-8
    max_iter: int | None = None
    verbose: bool = False
    census: bool = False
    budget_secs: float | None = None
    levels: tuple[int, ...] | None = None  # census without a table
    expect_facets: int | None = None
    expect_zero_margin: int | None = None
    existence_only: bool = False

    def echo(self) -> dict:
        d = asdict(self)
        if d["levels"] is not None:
            d["levels"] = list(d["levels"])
        return d


@dataclass
class AnalysisReport:
    document: dict
    exit_status: int = EXIT_OK

    @property
    def mle_exists(self) -> bool | None:
        return self.document.get("mle_exists")

    def to_json(self) -> str:
        return json.dumps(self.document, indent=2) + "\n"


def sig12(x) -> float:
    return float(f"{float(x):.12g}")


def _floats(xs) -> list[float]:
    return [sig12(x) for x in np.asarray(xs, dtype=float).ravel()]


def parse_scheme(descriptor: str, table: ContingencyTable) -> SamplingScheme:
    """``poisson``, ``multinomial`` or ``product-multinomial:FACTOR``.

    ``poisson-multinomial:FACTOR`` fixes the totals of every level of
    FACTOR except the last one.
    """
    kind, _, factor = descriptor.partition(":")
    if kind == "poisson" and not factor:
        return SamplingScheme.poisson()
    if kind == "multinomial" and not factor:
        return SamplingScheme.multinomial(table.total)
    if kind in ("product-multinomial", POISSON_MULTINOMIAL) and factor:
        prod = SamplingScheme.by_factor(table, factor)
        if kind == POISSON_MULTINOMIAL:
            return SamplingScheme.poisson_multinomial(prod.blocks, prod.totals[:-1])
        return prod
    raise SchemeError(f"cannot parse scheme {descriptor!r}")


def _cell_label(grid: FactorGrid, i: int) -> list[int]:
    return [int(x) + 1 for x in grid.to_multi(i)]


def _facial_doc(grid: FactorGrid, F: FacialSet) -> dict:
    return {
        "size": len(F.cells),
        "is_full": F.is_full,
        "cells": [_cell_label(grid, i) for i in F.sorted_cells()],
        "certificate": F.certificate_strings(),
    }


def _design_doc(design, verbose: bool) -> dict:
    doc = {
        "cells": design.n_cells,
        "columns": design.n_columns,
        "rank": design.rank,
        "column_labels": [
            {"term": [design.grid.factor_names[j] for j in term], "levels": [int(x) + 1 for x in marg]}
            for term, marg in design.labels
        ],
    }
    if verbose:
        doc["matrix"] = design.A.tolist()
    return doc


def _budget(request: AnalysisRequest) -> float | None:
    if request.budget_secs is not None:
        return request.budget_secs
    env = os.environ.get(BUDGET_ENV)
    if env:
        try:
            return float(env)
        except ValueError:
            raise ValueError(f"{BUDGET_ENV} must be a number of seconds, got {env!r}") from None
    return None


def _grid_for(request: AnalysisRequest) -> tuple[FactorGrid, ContingencyTable | None]:
    if request.table is not None:
        table = load_table(request.table)
        return table.grid, table
    if request.levels is None:
        raise ValueError("a table or a list of levels is required")
    return FactorGrid.from_levels(request.levels), None


def run_facet_census(request: AnalysisRequest) -> AnalysisReport:
    t0 = time.perf_counter()
    grid, _ = _grid_for(request)
    design = build_design_matrix(grid, parse_model(request.model, grid))
    census = enumerate_facets(design, _budget(request))
    doc = {
        "request": request.echo(),
        "model": design.model.label(grid),
        "levels": list(grid.levels),
        "rank": census.rank,
        "complete": census.complete,
        "n_facets": census.n_facets,
        "zero_margin_count": census.zero_margin_count,
    }
    status = EXIT_OK if census.complete else EXIT_BUDGET
    expected = {}
    if request.expect_facets is not None:
        expected["n_facets"] = request.expect_facets
    if request.expect_zero_margin is not None:
        expected["zero_margin_count"] = request.expect_zero_margin
    if expected:
        match = all(doc[k] == v for k, v in expected.items())
        doc["expected"] = dict(expected, match=match)
        if census.complete and not match:
            status = EXIT_FIT
    if request.verbose:
        doc["facets"] = [dict(_facial_doc(grid, f), zero_margin=z)
                         for f, z in zip(census.facets, census.zero_margin)]
    doc["timing"] = {"seconds": round(time.perf_counter() - t0, 3),
                     "census_seconds": round(census.elapsed, 3)}
    return AnalysisReport(doc, status)


def run_analysis(request: AnalysisRequest) -> AnalysisReport:
    """parse -> design -> facial set -> verdict -> fit on F -> inference -> verify."""
    t0 = time.perf_counter()
    if request.method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if request.table is None:
        raise ValueError("analysis needs a table")
    table = load_table(request.table)
    grid = table.grid
    design = build_design_matrix(grid, parse_model(request.model, grid))
    scheme = parse_scheme(request.scheme, table)
    sampling = build_sampling_matrix(scheme, grid, table, design)
    support = table.support()
    if not support:
        raise ValueError("the table has no positive counts")
    F = facial_set(design, support)

    doc: dict = {
        "request": request.echo(),
        "table": {"levels": list(grid.levels), "factors": list(grid.factor_names),
                  "total": table.total, "support_size": len(support)},
        "model": design.model.label(grid),
        "design": _design_doc(design, request.verbose),
        "scheme": {"kind": scheme.kind, "constraints": sampling.m},
        "sufficient_statistics": [int(x) for x in sufficient_statistics(design, table)],
        "mle_exists": F.is_full,
        "facial_set": _facial_doc(grid, F),
        "likelihood_zeros": [_cell_label(grid, i) for i in sorted(F.complement)],
        "sampling_zeros": [_cell_label(grid, int(i)) for i in np.flatnonzero(table.counts == 0)],
    }
    status = EXIT_OK
    if not request.existence_only:
        max_iter = {} if request.max_iter is None else {
            "max_ipf_iter": request.max_iter, "max_newton_iter": request.max_iter}
        options = FitOptions(method=request.method, tol_moment=request.tol_moment, **max_iter)
        df = adjusted_df(F, design, sampling)
        doc["df_adjusted"] = df
        doc["df_classical"] = design.n_cells - design.rank
        try:
            fit = fit_extended_mle(design, table, scheme, options, F=F)
        except NonConvergenceError as exc:
            doc["fit"] = {"status": "NONCONVERGENCE", "message": str(exc),
                          "residual": sig12(exc.residual), "iterations": exc.iterations}
            doc["verification"] = {"status": "NONCONVERGENCE"}
            status = EXIT_FIT
        else:
            doc["fit"] = {
                "method": fit.method,
                "iterations": fit.iterations,
                "m_hat": _floats(fit.m_hat),
                "moment_residual": sig12(fit.moment_residual),
                "loglik": sig12(fit.loglik),
            }
            if "method_gap" in fit.diagnostics:
                doc["fit"]["method_gap"] = sig12(fit.diagnostics["method_gap"])
            gof = goodness_of_fit(table, fit, df)
            doc["goodness_of_fit"] = {
                "G2": sig12(gof.G2), "X2": sig12(gof.X2), "df": gof.df,
                "p_G2": None if gof.p_G2 is None else sig12(gof.p_G2),
                "p_X2": None if gof.p_X2 is None else sig12(gof.p_X2),
                "warnings": gof.warnings,
            }
            est = estimable_directions(design, sampling, F)
            doc["estimability"] = {
                "rank_on_facial_set": est.rank_face,
                "sampling_constraints": est.m,
                "estimable_parameters": est.width,
                "nonestimable_dimension": est.nonestimable_dimension,
                "normal_cone_dimension": est.normal_dimension,
                "recession_direction": [rational_str(x) for x in est.recession_direction],
            }
            if request.verbose:
                doc["estimability"]["basis"] = [_floats(row) for row in est.basis]
            ver = verify_fit(fit, design, sampling, table, tol_moment=request.tol_moment)
            doc["verification"] = {
                "status": ver.status,
                "checks": {k: {"value": v["value"] if isinstance(v["value"], int) else sig12(v["value"]),
                               "limit": v["limit"] if isinstance(v["limit"], int) else sig12(v["limit"]),
                               "passed": v["passed"]}
                           for k, v in ver.checks.items()},
            }
            if ver.status != VERIFIED:
                status = EXIT_FIT
    if request.census:
        doc["census"] = {k: v for k, v in run_facet_census(request).document.items()
                         if k not in ("request", "timing")}
        if not doc["census"]["complete"] and status == EXIT_OK:
            status = EXIT_BUDGET
    doc["timing"] = {"seconds": round(time.perf_counter() - t0, 3)}
    return AnalysisReport(doc, status)


# ------------------------------------------------------------------ #
# Human-readable summary (rendered from the report document)
# ------------------------------------------------------------------ #

def _fmt_cells(cells, limit=12) -> str:
    shown = ["".join(map(str, c)) if all(x < 10 for x in c) else ",".join(map(str, c))
             for c in cells[:limit]]
    more = f" ... (+{len(cells) - limit})" if len(cells) > limit else ""
    return " ".join(shown) + more if shown else "none"


def render_summary(doc: dict) -> str:
    lines = []
    if "n_facets" in doc:
        lines.append(f"model {doc['model']} on levels {doc['levels']} (rank {doc['rank']})")
        state = "complete" if doc["complete"] else "PARTIAL (budget exhausted)"
        lines.append(f"facets: {doc['n_facets']} ({doc['zero_margin_count']} zero-margin), {state}")
        if "expected" in doc:
            lines.append(f"expected counts match: {doc['expected']['match']}")
        lines.append(f"time: {doc['timing']['seconds']} s")
        return "\n".join(lines) + "\n"
    t = doc["table"]
    lines.append(f"model {doc['model']} on levels {t['levels']}, N = {t['total']}, "
                 f"{t['support_size']} positive cells, scheme {doc['scheme']['kind']}")
    F = doc["facial_set"]
    verdict = "exists" if doc["mle_exists"] else "does NOT exist"
    lines.append(f"MLE {verdict}; facial set has {F['size']} of {doc['design']['cells']} cells")
    if not doc["mle_exists"]:
        lines.append(f"likelihood zeros: {_fmt_cells(doc['likelihood_zeros'])}")
    if "df_adjusted" in doc:
        lines.append(f"adjusted df: {doc['df_adjusted']} (unadjusted {doc['df_classical']})")
    if "goodness_of_fit" in doc:
        g = doc["goodness_of_fit"]
        p = lambda v: "n/a" if v is None else f"{v:.4g}"
        lines.append(f"G2 = {g['G2']:.6g} (p {p(g['p_G2'])}), X2 = {g['X2']:.6g} (p {p(g['p_X2'])})")
        lines.extend(f"warning: {w}" for w in g["warnings"])
        e = doc["estimability"]
        lines.append(f"estimable parameters: {e['estimable_parameters']}, "
                     f"non-estimable dimension: {e['nonestimable_dimension']}")
    if "verification" in doc:
        v = doc["verification"]
        failed = [k for k, c in v.get("checks", {}).items() if not c["passed"]]
        lines.append(f"verification: {v['status']}" + (f" ({', '.join(failed)})" if failed else ""))
    if "census" in doc:
        c = doc["census"]
        lines.append(f"facets: {c['n_facets']} ({c['zero_margin_count']} zero-margin)"
                     + ("" if c["complete"] else ", PARTIAL"))
    lines.append(f"time: {doc['timing']['seconds']} s")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ #
# Argument parsing
# ------------------------------------------------------------------ #

def _levels(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace("x", ",").split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels must look like 3,3,3 (got {text!r})") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="extmle", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, table_required=True):
        sp.add_argument("--table", required=table_required, help="table document (JSON)")
        sp.add_argument("--model", required=True, help="generating class, e.g. [12][13][23]")
        sp.add_argument("--report", help="write the JSON report here")
        sp.add_argument("--verbose", action="store_true")

    a = sub.add_parser("analyze", help="existence, extended MLE, inference, verification")
    common(a)
    a.add_argument("--scheme", default="poisson",
                   help="poisson | multinomial | product-multinomial:FACTOR")
    a.add_argument("--method", choices=METHODS, default="both")
    a.add_argument("--tol-moment", type=float, default=1e-8)
    a.add_argument("--max-iter", type=int)
    a.add_argument("--census", action="store_true", help="also enumerate facets")
    a.add_argument("--budget", type=float, help=f"census budget in seconds (default ${BUDGET_ENV})")

    c = sub.add_parser("census", help="enumerate the facets of the marginal cone")
    common(c, table_required=False)
    c.add_argument("--levels", type=_levels, help="grid levels instead of a table, e.g. 3,3,3")
    c.add_argument("--budget", type=float, help=f"budget in seconds (default ${BUDGET_ENV})")
    c.add_argument("--expect-facets", type=int)
    c.add_argument("--expect-zero-margin", type=int)

    k = sub.add_parser("check", help="existence of the MLE only")
    common(k)
    return p


def request_from_args(args) -> AnalysisRequest:
    base = dict(table=args.table, model=args.model, verbose=args.verbose)
    if args.verb == "analyze":
        return AnalysisRequest(**base, scheme=args.scheme, method=args.method,
                               tol_moment=args.tol_moment, max_iter=args.max_iter,
                               census=args.census, budget_secs=args.budget)
    if args.verb == "census":
        return AnalysisRequest(**base, census=True, budget_secs=args.budget, levels=args.levels,
                               expect_facets=args.expect_facets,
                               expect_zero_margin=args.expect_zero_margin)
    return AnalysisRequest(**base, existence_only=True)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        request = request_from_args(args)
        log.debug("request: %s", request)
        if args.verb == "census":
            if request.table is None and request.levels is None:
                raise ValueError("census needs --table or --levels")
            report = run_facet_census(request)
        else:
            report = run_analysis(request)
    except INPUT_ERRORS as exc:
        print(f"extmle: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.report:
        Path(args.report).write_text(report.to_json())
    sys.stdout.write(render_summary(report.document))
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())
