"""Exact polyhedral computations on the marginal cone."""

from .census import FacetCensus, enumerate_facets
from .faces import (FacialSet, FacialSetError, certificate_values, facial_set, mle_exists,
                    rational_str, verify_certificate)
from .lp import LPResult, LPStatus, RationalLP, solve_rational_lp

__all__ = [
    "FacetCensus", "FacialSet", "FacialSetError", "LPResult", "LPStatus", "RationalLP",
    "certificate_values", "enumerate_facets", "facial_set", "mle_exists", "rational_str",
    "solve_rational_lp", "verify_certificate",
]
