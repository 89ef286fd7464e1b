"""Explicit truncations of the named block-structured operators.

Everything here is organized around a :class:`BlockLayout` splitting the
window into consecutive blocks (sizes 1, 2, 3, ... by default).  The main
characters:

* the averaging isometry ``v`` whose n-th column fills block n with
  ``1/sqrt(n)``;
* the per-block Helmert basis of the orthogonal complement of its range;
* the unitary ``u`` interleaving the two families on odd/even columns;
* the block projection ``p`` (every block all ``1/n``), which equals
  ``v v*``;
* the 2x2-block projection ``(1, u; u*, 1)/2`` for a unitary ``u``;
* the odd/even shift isometries witnessing proper infiniteness;
* the compact-times-isometry product that admits no sparse polar factor.

Truncation edge effects are reported, never hidden: the interleaved unitary
carries the index range on which unitarity holds exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractViolationError, WindowTooSmallError
from .sparse_core import SparseOp, adjoint, dense_norm, embed_blocks, mul, scale, sub

__all__ = [
    "BlockLayout",
    "BlockDiagOp",
    "InterleavedUnitary",
    "PolarCounterexample",
    "make_averaging_isometry",
    "make_complement_basis",
    "make_interleaved_unitary",
    "make_block_projection",
    "make_m2_projection",
    "make_shift_isometries",
    "make_polar_counterexample",
]


@dataclass(frozen=True)
class BlockLayout:
    """Consecutive blocks of declared sizes inside the window."""

    block_sizes: tuple[int, ...]

    def __post_init__(self):
        if not self.block_sizes or any(s < 1 for s in self.block_sizes):
            raise ValueError("block sizes must be positive")
        object.__setattr__(self, "block_sizes", tuple(int(s) for s in self.block_sizes))

    @classmethod
    def triangular(cls, num_blocks: int) -> "BlockLayout":
        """Sizes 1, 2, ..., num_blocks (the default layout)."""
        return cls(tuple(range(1, num_blocks + 1)))

    @property
    def num_blocks(self) -> int:
        return len(self.block_sizes)

    @property
    def total(self) -> int:
        return sum(self.block_sizes)

    def start(self, n: int) -> int:
        """First window index (1-based) of block n (1-based)."""
        return 1 + sum(self.block_sizes[: n - 1])

    def end(self, n: int) -> int:
        return self.start(n) + self.block_sizes[n - 1] - 1

    def block_of(self, index: int) -> int:
        """Block number containing the window index."""
        if index < 1 or index > self.total:
            raise ValueError(f"index {index} outside layout of length {self.total}")
        acc = 0
        for n, s in enumerate(self.block_sizes, start=1):
            acc += s
            if index <= acc:
                return n
        raise AssertionError("unreachable")


@dataclass(frozen=True)
class BlockDiagOp:
    """Direct sum of dense square blocks matching a layout."""

    layout: BlockLayout
    blocks: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        if len(self.blocks) != self.layout.num_blocks:
            raise ValueError("one dense block per layout block required")
        for n, blk in enumerate(self.blocks, start=1):
            s = self.layout.block_sizes[n - 1]
            if blk.shape != (s, s):
                raise ValueError(f"block {n} must be {s}x{s}, got {blk.shape}")

    def to_sparse(self, window: int | None = None) -> SparseOp:
        """Exact conversion; a larger window pads with zeros, a smaller one
        truncates whole trailing entries (both indices must fit)."""
        total = self.layout.total
        if window is None:
            window = total
        rows: dict[int, dict[int, complex]] = {}
        for n, blk in enumerate(self.blocks, start=1):
            base = self.layout.start(n) - 1
            s = self.layout.block_sizes[n - 1]
            for bi in range(s):
                gi = base + bi + 1
                if gi > window:
                    break
                for bj in range(s):
                    gj = base + bj + 1
                    if gj > window:
                        break
                    v = complex(blk[bi, bj])
                    if v != 0:
                        rows.setdefault(gi, {})[gj] = v
        return SparseOp._from_rows(window, rows)


@dataclass(frozen=True)
class InterleavedUnitary:
    """The interleaved map plus a report of where unitarity survives.

    ``op`` sends odd columns to averaging vectors and even columns to
    complement-basis vectors; columns that would overflow the window are
    dropped.  ``assigned_columns`` lists the nonzero columns (on which
    ``u* u`` is the identity); ``interior_end`` is the last window index
    whose block is fully covered by assigned columns, so ``u u*`` acts as
    the identity on ``[1..interior_end]``.
    """

    op: SparseOp
    assigned_columns: tuple[int, ...]
    interior_end: int


@dataclass(frozen=True)
class PolarCounterexample:
    """Compact product ``a = v h`` together with its factors."""

    a: SparseOp
    v: SparseOp
    h: SparseOp
    lambdas: tuple[float, ...]


def make_averaging_isometry(layout: BlockLayout, window: int | None = None) -> SparseOp:
    """Isometry whose n-th column fills block n with ``1/sqrt(block size)``.

    Columns are orthonormal, so ``v* v`` is the identity on the first
    ``num_blocks`` coordinates.
    """
    total = layout.total
    if window is None:
        window = total
    if window < total:
        raise WindowTooSmallError(f"window {window} < layout length {total}")
    rows: dict[int, dict[int, complex]] = {}
    for n, s in enumerate(layout.block_sizes, start=1):
        val = complex(1.0 / math.sqrt(s))
        base = layout.start(n)
        for off in range(s):
            rows[base + off] = {n: val}
    return SparseOp._from_rows(window, rows)


def make_complement_basis(layout: BlockLayout, window: int | None = None) -> SparseOp:
    """Orthonormal basis of the orthogonal complement of the averaging range.

    Inside block n of size s the complement of the constant vector is
    spanned by the s-1 Helmert vectors; they are emitted blockwise as the
    columns 1, 2, ... of the result.  A size-1 block contributes nothing.
    """
    total = layout.total
    if window is None:
        window = total
    if window < total:
        raise WindowTooSmallError(f"window {window} < layout length {total}")
    rows: dict[int, dict[int, complex]] = {}
    col = 0
    for n, s in enumerate(layout.block_sizes, start=1):
        base = layout.start(n)
        for j in range(1, s):
            col += 1
            if col > window:
                break
            norm = math.sqrt(j * (j + 1))
            head = complex(1.0 / norm)
            for off in range(j):
                rows.setdefault(base + off, {})[col] = head
            rows.setdefault(base + j, {})[col] = complex(-j / norm)
    return SparseOp._from_rows(window, rows)


def make_interleaved_unitary(layout: BlockLayout, window: int | None = None) -> InterleavedUnitary:
    """Interleave averaging and complement columns: odd -> a_n, even -> b_n.

    On a finite window the even family usually overflows (there are more
    complement vectors than averaging vectors), so trailing columns are
    dropped and the returned report pins down the exact index range where
    ``u u*`` still acts as the identity.
    """
    total = layout.total
    if window is None:
        window = total
    if window < total:
        raise WindowTooSmallError(f"window {window} < layout length {total}")
    v = make_averaging_isometry(layout, window)
    b = make_complement_basis(layout, window)
    num_a = layout.num_blocks
    num_b = total - num_a
    rows: dict[int, dict[int, complex]] = {}
    assigned: list[int] = []
    for c in range(1, window + 1):
        if c % 2 == 1:
            n = (c + 1) // 2
            src = v if n <= num_a else None
        else:
            n = c // 2
            src = b if n <= num_b else None
        if src is None:
            continue
        assigned.append(c)
        for i in src._cols.get(n, ()):
            rows.setdefault(i, {})[c] = src._rows[i][n]
    # a block is fully covered once its averaging column and all of its
    # complement columns were assigned
    comp_cum = 0
    interior_end = 0
    for n, s in enumerate(layout.block_sizes, start=1):
        comp_cum += s - 1
        if 2 * n - 1 <= window and 2 * comp_cum <= window:
            interior_end = layout.end(n)
        else:
            break
    return InterleavedUnitary(
        op=SparseOp._from_rows(window, rows),
        assigned_columns=tuple(assigned),
        interior_end=interior_end,
    )


def make_block_projection(layout: BlockLayout) -> BlockDiagOp:
    """Rank-one-per-block projection: block n is the n-by-n all ``1/n`` matrix."""
    blocks = []
    for s in layout.block_sizes:
        blocks.append(np.full((s, s), 1.0 / s, dtype=np.complex128))
    return BlockDiagOp(layout, tuple(blocks))


def make_m2_projection(u: SparseOp, tol: float = 1e-8) -> SparseOp:
    """The projection ``(1, u; u*, 1)/2`` flattened by block interleaving.

    Requires ``u`` unitary on its window within ``tol`` (both ``u* u`` and
    ``u u*``); otherwise the 2x2-block matrix is not idempotent.
    """
    ident = SparseOp.identity(u.window)
    ustar = adjoint(u)
    defect = max(
        dense_norm(sub(mul(ustar, u), ident)),
        dense_norm(sub(mul(u, ustar), ident)),
    )
    if defect > tol:
        raise ContractViolationError(
            f"input is not unitary within {tol:g} (defect {defect:.3e})"
        )
    grid = [[ident, u], [ustar, ident]]
    return scale(embed_blocks(grid), 0.5)


def make_shift_isometries(window: int) -> tuple[SparseOp, SparseOp]:
    """Odd/even shift isometries ``e_n -> e_{2n-1}`` and ``e_n -> e_{2n}``.

    Their ranges partition the window, so the two range projections sum to
    the identity exactly; both have profile (1, 1).
    """
    if window < 1:
        raise ValueError("window must be positive")
    rows1: dict[int, dict[int, complex]] = {}
    rows2: dict[int, dict[int, complex]] = {}
    for n in range(1, window + 1):
        if 2 * n - 1 <= window:
            rows1[2 * n - 1] = {n: 1.0 + 0j}
        if 2 * n <= window:
            rows2[2 * n] = {n: 1.0 + 0j}
    return SparseOp._from_rows(window, rows1), SparseOp._from_rows(window, rows2)


def make_polar_counterexample(
    layout: BlockLayout,
    lambdas: Sequence[float] | None = None,
    window: int | None = None,
) -> PolarCounterexample:
    """Compact ``a = v h`` whose isometric factor is irreparably non-sparse.

    ``h`` is the diagonal with strictly positive values decreasing to zero
    (default ``1/n``), ``v`` the averaging isometry.  ``a`` is approximable
    in norm by finite truncations while every column of ``v`` keeps a fat
    support, which is exactly the obstruction quantified by
    :func:`matfinite.sparse_core.best_k_sparse_column_error`.
    """
    total = layout.total
    if window is None:
        window = total
    if lambdas is None:
        lambdas = [1.0 / n for n in range(1, window + 1)]
    lambdas = [float(x) for x in lambdas]
    if len(lambdas) < window:
        raise ValueError("need one lambda per window index")
    lambdas = lambdas[:window]
    if any(x <= 0 for x in lambdas):
        raise ValueError("lambdas must be strictly positive")
    if any(lambdas[i] < lambdas[i + 1] for i in range(len(lambdas) - 1)):
        raise ValueError("lambdas must be non-increasing")
    v = make_averaging_isometry(layout, window)
    h = SparseOp.diagonal(window, [complex(x) for x in lambdas])
    a = mul(v, h)
    return PolarCounterexample(a=a, v=v, h=h, lambdas=tuple(lambdas))
