"""Osborne matrix balancing with the StrictBalance variant."""

from .core import (
    ScaledWeights,
    ScalingRangeError,
    SparseNonnegMatrix,
    StructuralError,
    contracted_f,
    contracted_gradient_norm,
    f_value,
    gradient,
)
from .diagnostics import (
    ImbalanceReport,
    TraceAuditor,
    cycle_product_check,
    lp_imbalance,
    similarity_invariants,
    strict_imbalance,
)
from .preprocessing import (
    CanonicalInstance,
    SccDecomposition,
    canonical_epsilon,
    canonicalize,
    scc_decompose,
    uncanonicalize_scaling,
)
from .report import RunReport, StepRecord
from .steps import VariantPolicy, run_classic, select_index
from .strict import FrozenSetState, StrictBalance, run_strict

__version__ = "0.1.0"
