"""Tail diagnostics and the constructive extraction procedure.

The tail profile ``s(t) = max |a_ij| over i, j >= t`` is the window
surrogate for "entries vanish uniformly down the diagonal direction": ops
whose tail decays to zero are ghost-like, and multiplying a ghost-like
operator by anything profile-bounded keeps the far corner small
(:func:`ideal_product_bound` checks the quantitative estimate entry by
entry).

For a self-adjoint operator that is *not* ghost-like, a witness of
invertibility can be extracted: either enough large diagonal entries or
enough large off-diagonal 2x2 blocks survive, and a greedy support-disjoint
selection compresses the operator onto a subspace where its smallest
singular value exceeds ``delta/2``.  The emitted
:class:`ExtractionCertificate` carries the selection, the index-packing
isometry, and the certified singular value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ApproximationBudgetError,
    InsufficientDataError,
    MatfiniteError,
)
from .sparse_core import SparseOp, dense_norm, mul

__all__ = [
    "TailProfile",
    "ExtractionCertificate",
    "tail_profile",
    "ideal_product_bound",
    "l1_bound",
    "sparse_approximant",
    "extract_diagonal_case",
    "extract_offdiagonal_case",
]


@dataclass(frozen=True)
class TailProfile:
    """Suffix maxima ``values[t-1] = max |a_ij| over i, j >= t``."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = self.values
        if any(vals[i] < vals[i + 1] for i in range(len(vals) - 1)):
            raise ValueError("tail profile must be non-increasing")

    def __call__(self, t: int) -> float:
        return self.values[t - 1]

    def __len__(self) -> int:
        return len(self.values)


def tail_profile(a: SparseOp) -> TailProfile:
    """Exact suffix maxima of entry moduli over the corner ``i, j >= t``."""
    n = a.window
    by_min = [0.0] * (n + 1)
    for i, row in a._rows.items():
        for j, v in row.items():
            t = i if i < j else j
            m = abs(v)
            if m > by_min[t]:
                by_min[t] = m
    out = [0.0] * n
    running = 0.0
    for t in range(n, 0, -1):
        if by_min[t] > running:
            running = by_min[t]
        out[t - 1] = running
    return TailProfile(tuple(out))


def ideal_product_bound(a: SparseOp, b: SparseOp, n_split: int) -> float:
    """Far-corner bound ``eps * k * |b|`` for the product ``a b``.

    ``eps`` is the tail profile of ``a`` at ``n_split`` and ``k`` the
    tracked profile bound of ``b``.  Every product entry with row beyond
    ``n_split`` and column beyond the reach of b's early rows is verified
    against the bound (within 1e-12); a violation would falsify the tracked
    metadata, so it raises.
    """
    if not (1 <= n_split <= a.window):
        raise ValueError("n_split outside window")
    eps = tail_profile(a)(n_split)
    k = b.profile.k
    bound = eps * k * dense_norm(b)
    # columns reachable from rows <= n_split of b
    m_reach = 0
    for j, row in b._rows.items():
        if j <= n_split:
            mr = max(row)
            if mr > m_reach:
                m_reach = mr
    c = mul(a, b)
    for i, row in c._rows.items():
        if i <= n_split:
            continue
        for l, v in row.items():
            if l > m_reach and abs(v) > bound + 1e-12:
                raise MatfiniteError(
                    f"far-corner entry ({i},{l}) = {abs(v):.3e} exceeds bound {bound:.3e}"
                )
    return bound


def l1_bound(a: SparseOp) -> tuple[float, float]:
    """Sup over rows and over columns of absolute entry sums."""
    row_sup = 0.0
    col_sums: dict[int, float] = {}
    for i, row in a._rows.items():
        s = 0.0
        for j, v in row.items():
            m = abs(v)
            s += m
            col_sums[j] = col_sums.get(j, 0.0) + m
        if s > row_sup:
            row_sup = s
    col_sup = max(col_sums.values(), default=0.0)
    return row_sup, col_sup


@dataclass(frozen=True)
class ExtractionCertificate:
    """Witness that the compression of ``a`` is invertible below ``delta/2``.

    ``selected`` holds the chosen diagonal indices or index pairs, whose
    sparse-approximant row supports are pairwise disjoint; ``isometry``
    packs them down to the leading coordinates; ``sigma_min`` is the
    smallest singular value of the compressed operator.
    """

    case_tag: str
    selected: tuple
    delta: float
    sigma_min: float
    isometry: SparseOp
    approximant_k: int
    approximant_error: float

    def __post_init__(self):
        if self.case_tag not in ("diagonal", "offdiagonal"):
            raise ValueError("case_tag must be 'diagonal' or 'offdiagonal'")
        if not self.sigma_min > self.delta / 2:
            raise MatfiniteError(
                f"certificate violates sigma_min > delta/2: "
                f"{self.sigma_min:.6e} <= {self.delta / 2:.6e}"
            )


def _check_selfadjoint(a: SparseOp, tol: float = 1e-10) -> None:
    worst = 0.0
    for i, row in a._rows.items():
        for j, v in row.items():
            worst = max(worst, abs(v - a.entry(j, i).conjugate()))
    if worst > tol:
        raise ValueError(f"input is not self-adjoint within {tol:g} (defect {worst:.3e})")


def sparse_approximant(a: SparseOp, k: int) -> tuple[SparseOp, float]:
    """Keep entries ranked top-k in *both* of their rows (symmetric rule).

    For a self-adjoint input the result is self-adjoint with profile at
    most (k, k).  Returns the approximant and the dense norm of the
    discarded remainder.
    """
    if k < 1:
        raise ValueError("k must be positive")
    rank: dict[tuple[int, int], int] = {}
    for i, row in a._rows.items():
        order = sorted(row.items(), key=lambda jv: (-abs(jv[1]), jv[0]))
        for pos, (j, _v) in enumerate(order, start=1):
            rank[(i, j)] = pos
    rows: dict[int, dict[int, complex]] = {}
    for i, row in a._rows.items():
        kept = {
            j: v
            for j, v in row.items()
            if rank[(i, j)] <= k and rank.get((j, i), k + 1) <= k
        }
        if kept:
            rows[i] = kept
    approx = SparseOp._from_rows(a.window, rows)
    err = dense_norm(a - approx)
    return approx, err


def _compressed_sigma_min(a: SparseOp, selected_order: Sequence[int]) -> float:
    idx = [i - 1 for i in selected_order]
    dense = a.to_dense()
    block = dense[np.ix_(idx, idx)]
    return float(np.linalg.svd(block, compute_uv=False)[-1])


def _packing_isometry(window: int, targets: Sequence[int]) -> SparseOp:
    rows: dict[int, dict[int, complex]] = {}
    for m, i in enumerate(targets, start=1):
        rows.setdefault(i, {})[m] = 1.0 + 0j
    return SparseOp._from_rows(window, rows)


def extract_diagonal_case(a: SparseOp, delta: float, k: int) -> ExtractionCertificate:
    """Extraction via large diagonal entries.

    Finds a support-disjoint ascending family of indices whose approximant
    diagonal entries exceed ``3*delta/4``; the compression of ``a`` onto
    them is then invertible with smallest singular value above ``delta/2``.

    Raises:
        ApproximationBudgetError: no profile-k approximant within delta/4.
        InsufficientDataError: fewer than two selectable indices (window too
            small, or the input is ghost-like).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    _check_selfadjoint(a)
    approx, err = sparse_approximant(a, k)
    if not err < delta / 4:
        raise ApproximationBudgetError(
            f"best profile-{k} approximant misses the delta/4 budget: "
            f"{err:.3e} >= {delta / 4:.3e}"
        )
    threshold = 0.75 * delta
    candidates = sorted(
        i for i in range(1, a.window + 1) if abs(approx.entry(i, i)) > threshold
    )
    selected: list[int] = []
    used_cols: set[int] = set()
    for i in candidates:
        supp = set(approx.row_support(i))
        if supp & used_cols:
            continue
        selected.append(i)
        used_cols |= supp
    if len(selected) < 2:
        raise InsufficientDataError(
            f"only {len(selected)} support-disjoint indices with |diag| > 3*delta/4"
        )
    sigma = _compressed_sigma_min(a, selected)
    return ExtractionCertificate(
        case_tag="diagonal",
        selected=tuple(selected),
        delta=delta,
        sigma_min=sigma,
        isometry=_packing_isometry(a.window, selected),
        approximant_k=k,
        approximant_error=err,
    )


def extract_offdiagonal_case(a: SparseOp, delta: float, k: int) -> ExtractionCertificate:
    """Extraction via large off-diagonal 2x2 blocks.

    Applies once the approximant diagonal has died out: beyond the last
    index with ``|diag| >= delta/6``, support-disjoint pairs with
    ``|a^(k)_{ij}| > 5*delta/6`` give 2x2 blocks bounded below by
    ``2*delta/3``, and the packed compression of ``a`` stays above
    ``delta/2``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    _check_selfadjoint(a)
    approx, err = sparse_approximant(a, k)
    if not err < delta / 6:
        raise ApproximationBudgetError(
            f"best profile-{k} approximant misses the delta/6 budget: "
            f"{err:.3e} >= {delta / 6:.3e}"
        )
    n0 = 0
    for i in range(1, a.window + 1):
        if abs(approx.entry(i, i)) >= delta / 6:
            n0 = i
    pair_threshold = 5.0 * delta / 6.0
    pairs = sorted(
        {
            (min(i, j), max(i, j))
            for i, j, v in approx.iter_entries()
            if i != j and min(i, j) > n0 and abs(v) > pair_threshold
        }
    )
    selected: list[tuple[int, int]] = []
    used_cols: set[int] = set()
    for i, j in pairs:
        supp = set(approx.row_support(i)) | set(approx.row_support(j))
        if supp & used_cols:
            continue
        block = np.array(
            [
                [approx.entry(i, i), approx.entry(i, j)],
                [approx.entry(j, i), approx.entry(j, j)],
            ]
        )
        if np.linalg.svd(block, compute_uv=False)[-1] <= 2.0 * delta / 3.0:
            continue  # defensive; cannot happen under the thresholds above
        selected.append((i, j))
        used_cols |= supp
    if len(selected) < 2:
        raise InsufficientDataError(
            f"only {len(selected)} support-disjoint pairs with "
            f"|offdiag| > 5*delta/6 beyond index {n0}"
        )
    order = [x for pair in selected for x in pair]
    sigma = _compressed_sigma_min(a, order)
    return ExtractionCertificate(
        case_tag="offdiagonal",
        selected=tuple(selected),
        delta=delta,
        sigma_min=sigma,
        isometry=_packing_isometry(a.window, order),
        approximant_k=k,
        approximant_error=err,
    )
