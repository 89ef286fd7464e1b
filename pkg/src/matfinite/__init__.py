"""Desk-scale toolkit for uniformly sparse operators on a fixed basis window.

Operators carry exact sparsity-profile certificates through all algebra;
the subpackages cover named block constructions, expander-graph spectral
projections, ghost-tail diagnostics with the invertibility extraction,
coarse-geometry embeddings, and certified contraction paths for
invertibles.  See the README for the CLI and the acceptance suite.
"""

from .errors import (
    ApproximationBudgetError,
    ContractViolationError,
    ConvergenceError,
    DimensionMismatchError,
    InsufficientDataError,
    MatfiniteError,
    RetryExhaustedError,
    WindowTooSmallError,
)
from .sparse_core import (
    LineDecomposition,
    SparseOp,
    SparsityProfile,
    add,
    adjoint,
    best_k_sparse_column_error,
    dense_norm,
    embed_block,
    embed_blocks,
    line_decompose,
    mul,
    norm_upper_bound,
    operator_norm,
    read_coordinate,
    scale,
    sub,
    truncate_compact,
    write_coordinate,
)

__version__ = "0.1.0"
