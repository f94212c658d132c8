"""Classification of binary orthogonal arrays on the Friedman bound.

Such an array OA(N, n, 2, t) with N = 2^n (1 - n/(2(t+1))) is the same
thing as a completely regular code with intersection array {n; c},
c = 2(t+1) - n.  Codes are classified by growing local codes weight layer by
weight layer, solving each layer as an exact cover problem, and rejecting
isomorphs with canonical forms.
"""

from .core import Code, CRParams, IntersectionArray, intersection_array, intersection_array_for, params_from_c, strength
from .localcode import LocalCode, check_local, continuations, seed
from .pipeline import Classification, Strategy, classify, count_labeled

__version__ = "0.1.0"

__all__ = [
    "Code",
    "CRParams",
    "IntersectionArray",
    "intersection_array",
    "intersection_array_for",
    "params_from_c",
    "strength",
    "LocalCode",
    "check_local",
    "continuations",
    "seed",
    "Classification",
    "Strategy",
    "classify",
    "count_labeled",
]
