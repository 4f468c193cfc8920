"""Continuous multifacility ordered-median location toolkit.

Exact conic formulations (SOCP / mixed-binary SOCP) solved by an embedded
operator-splitting solver plus branch-and-bound, and moment-relaxation
generators (dense, correlatively sparse, symmetry-reduced) emitting SDPA
files.
"""

from ordloc.model import (
    DemandSet,
    NIWeights,
    NormExponent,
    OrderedMedianInstance,
    SAWeights,
    bound_M,
    compute_UB,
    lambda_preset,
    validate,
)

__all__ = [
    "DemandSet",
    "NIWeights",
    "NormExponent",
    "OrderedMedianInstance",
    "SAWeights",
    "bound_M",
    "compute_UB",
    "lambda_preset",
    "validate",
]

__version__ = "0.1.0"
