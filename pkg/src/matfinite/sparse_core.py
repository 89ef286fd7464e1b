"""Sparse operators on a finite basis window with exact sparsity accounting.

An operator lives on a declared window ``[1..N]`` of the fixed basis and is
stored as a dict-of-rows of exactly nonzero complex entries.  The tracked
:class:`SparsityProfile` (max nonzeros per row, max nonzeros per column) is a
certificate, not an estimate: entries are pruned only when they are exactly
zero in floating arithmetic, and the profile is recomputed from the raw
entries at construction time.

Conventions, fixed for determinism:

* indices are 1-based and live in ``[1..window]``;
* scalars are ``complex`` throughout, even for real data;
* ties (line decomposition, best-k selection) break toward the lowest index;
* enlarging the window never changes existing entries (`with_window`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import ConvergenceError, DimensionMismatchError

__all__ = [
    "SparsityProfile",
    "SparseOp",
    "LineDecomposition",
    "add",
    "sub",
    "mul",
    "adjoint",
    "scale",
    "line_decompose",
    "norm_upper_bound",
    "operator_norm",
    "dense_norm",
    "best_k_sparse_column_error",
    "best_k_sparse_column_error_bruteforce",
    "embed_block",
    "embed_blocks",
    "truncate_compact",
    "prune",
    "with_window",
    "write_coordinate",
    "read_coordinate",
]


@dataclass(frozen=True)
class SparsityProfile:
    """Max nonzero counts per row and per column; (0, 0) for the zero op."""

    row_max: int
    col_max: int

    @property
    def k(self) -> int:
        """The single uniform bound: max of the pair."""
        return max(self.row_max, self.col_max)

    def swapped(self) -> "SparsityProfile":
        return SparsityProfile(self.col_max, self.row_max)


class SparseOp:
    """Immutable sparse operator on the window ``[1..window]``.

    Do not mutate the internal dicts; all operations return new values.
    """

    __slots__ = ("window", "_rows", "_cols", "profile", "nnz")

    def __init__(self, window: int, entries: Mapping[tuple[int, int], complex]):
        if window < 1:
            raise ValueError(f"window must be positive, got {window}")
        rows: dict[int, dict[int, complex]] = {}
        for (i, j), v in entries.items():
            if not (1 <= i <= window and 1 <= j <= window):
                raise ValueError(f"index ({i},{j}) outside window [1..{window}]")
            v = complex(v)
            if v == 0:
                continue
            rows.setdefault(i, {})[j] = v
        self._finish(window, rows)

    @classmethod
    def _from_rows(cls, window: int, rows: dict[int, dict[int, complex]]) -> "SparseOp":
        """Trusted fast path: rows must be in-window, zero-free, complex."""
        op = object.__new__(cls)
        op._finish(window, rows)
        return op

    def _finish(self, window: int, rows: dict[int, dict[int, complex]]) -> None:
        cols: dict[int, set[int]] = {}
        nnz = 0
        for i, r in rows.items():
            nnz += len(r)
            for j in r:
                s = cols.get(j)
                if s is None:
                    s = cols[j] = set()
                s.add(i)
        row_max = max((len(r) for r in rows.values()), default=0)
        col_max = max((len(s) for s in cols.values()), default=0)
        object.__setattr__(self, "window", window)
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(self, "_cols", cols)
        object.__setattr__(self, "profile", SparsityProfile(row_max, col_max))
        object.__setattr__(self, "nnz", nnz)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("SparseOp is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, window: int) -> "SparseOp":
        return cls._from_rows(window, {})

    @classmethod
    def identity(cls, window: int) -> "SparseOp":
        return cls._from_rows(window, {i: {i: 1.0 + 0j} for i in range(1, window + 1)})

    @classmethod
    def diagonal(cls, window: int, values: Sequence[complex]) -> "SparseOp":
        if len(values) > window:
            raise ValueError("more diagonal values than window slots")
        rows = {}
        for i, v in enumerate(values, start=1):
            v = complex(v)
            if v != 0:
                rows[i] = {i: v}
        return cls._from_rows(window, rows)

    @classmethod
    def permutation(cls, window: int, images: Sequence[int]) -> "SparseOp":
        """Operator sending ``e_j`` to ``e_images[j-1]`` (1-based images)."""
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValueError("images must be a permutation of 1..n")
        rows: dict[int, dict[int, complex]] = {}
        for j, i in enumerate(images, start=1):
            rows.setdefault(i, {})[j] = 1.0 + 0j
        return cls._from_rows(window, rows)

    @classmethod
    def from_dense(cls, arr: np.ndarray) -> "SparseOp":
        """Exact conversion: keeps every entry that is not exactly zero."""
        arr = np.asarray(arr)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("expected a square 2-d array")
        n = arr.shape[0]
        rows: dict[int, dict[int, complex]] = {}
        ii, jj = np.nonzero(arr)
        for i0, j0 in zip(ii.tolist(), jj.tolist()):
            rows.setdefault(i0 + 1, {})[j0 + 1] = complex(arr[i0, j0])
        return cls._from_rows(n, rows)

    # -- accessors ---------------------------------------------------------

    def entry(self, i: int, j: int) -> complex:
        return self._rows.get(i, {}).get(j, 0j)

    def __getitem__(self, ij: tuple[int, int]) -> complex:
        return self.entry(*ij)

    def row(self, i: int) -> dict[int, complex]:
        return dict(self._rows.get(i, {}))

    def row_support(self, i: int) -> tuple[int, ...]:
        return tuple(sorted(self._rows.get(i, {})))

    def col_support(self, j: int) -> tuple[int, ...]:
        return tuple(sorted(self._cols.get(j, ())))

    def column(self, j: int) -> np.ndarray:
        """Dense column vector (length = window)."""
        out = np.zeros(self.window, dtype=np.complex128)
        for i in self._cols.get(j, ()):
            out[i - 1] = self._rows[i][j]
        return out

    def iter_entries(self) -> Iterator[tuple[int, int, complex]]:
        """Entries sorted by (row, col)."""
        for i in sorted(self._rows):
            r = self._rows[i]
            for j in sorted(r):
                yield i, j, r[j]

    def entries_dict(self) -> dict[tuple[int, int], complex]:
        return {(i, j): v for i, j, v in self.iter_entries()}

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.window, self.window), dtype=np.complex128)
        for i, r in self._rows.items():
            for j, v in r.items():
                out[i - 1, j - 1] = v
        return out

    def max_modulus(self) -> float:
        return max((abs(v) for r in self._rows.values() for v in r.values()), default=0.0)

    def is_zero(self) -> bool:
        return not self._rows

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseOp):
            return NotImplemented
        return self.window == other.window and self._rows == other._rows

    def __hash__(self):  # pragma: no cover
        return hash((self.window, self.nnz))

    def __repr__(self) -> str:
        p = self.profile
        return f"SparseOp(window={self.window}, nnz={self.nnz}, profile=({p.row_max},{p.col_max}))"

    # -- operator sugar (thin wrappers over the module functions) ----------

    def __add__(self, other: "SparseOp") -> "SparseOp":
        return add(self, other)

    def __sub__(self, other: "SparseOp") -> "SparseOp":
        return sub(self, other)

    def __matmul__(self, other: "SparseOp") -> "SparseOp":
        return mul(self, other)

    def __rmul__(self, alpha: complex) -> "SparseOp":
        return scale(self, alpha)

    def adjoint(self) -> "SparseOp":
        return adjoint(self)


@dataclass(frozen=True)
class LineDecomposition:
    """Split of an operator into parts with at most one entry per row.

    ``parts[m]`` holds the (m+1)-th stored entry of every row, counting by
    ascending column index; the parts sum back to the source exactly.
    """

    window: int
    parts: tuple[SparseOp, ...]

    def reassemble(self) -> SparseOp:
        out = SparseOp.zero(self.window)
        for p in self.parts:
            out = add(out, p)
        return out


# -- algebra ----------------------------------------------------------------


def _check_windows(a: SparseOp, b: SparseOp) -> None:
    if a.window != b.window:
        raise DimensionMismatchError(f"window mismatch: {a.window} vs {b.window}")


def add(a: SparseOp, b: SparseOp) -> SparseOp:
    """Entrywise sum with exact-zero cancellation removed.

    The tracked profile obeys row_max(a+b) <= row_max(a) + row_max(b), and
    the same bound per column.
    """
    _check_windows(a, b)
    rows: dict[int, dict[int, complex]] = {}
    ar, br = a._rows, b._rows
    for i in ar.keys() | br.keys():
        ra = ar.get(i)
        rb = br.get(i)
        if ra is None:
            m = dict(rb)
        elif rb is None:
            m = dict(ra)
        else:
            m = dict(ra)
            for j, v in rb.items():
                w = m.get(j)
                nv = v if w is None else w + v
                if nv == 0:
                    del m[j]
                else:
                    m[j] = nv
        if m:
            rows[i] = m
    return SparseOp._from_rows(a.window, rows)


def sub(a: SparseOp, b: SparseOp) -> SparseOp:
    return add(a, scale(b, -1))


def mul(a: SparseOp, b: SparseOp) -> SparseOp:
    """Operator product with exact-zero pruning.

    The tracked profile obeys row_max(ab) <= row_max(a) * row_max(b) and the
    dual bound for columns.
    """
    _check_windows(a, b)
    rows: dict[int, dict[int, complex]] = {}
    bget = b._rows.get
    for i, arow in a._rows.items():
        acc: dict[int, complex] = {}
        for j, av in arow.items():
            brow = bget(j)
            if brow:
                for l, bv in brow.items():
                    w = acc.get(l)
                    p = av * bv
                    acc[l] = p if w is None else w + p
        acc = {l: v for l, v in acc.items() if v != 0}
        if acc:
            rows[i] = acc
    return SparseOp._from_rows(a.window, rows)


def adjoint(a: SparseOp) -> SparseOp:
    """Conjugate transpose; the profile components swap."""
    rows: dict[int, dict[int, complex]] = {}
    for i, r in a._rows.items():
        for j, v in r.items():
            rows.setdefault(j, {})[i] = v.conjugate()
    return SparseOp._from_rows(a.window, rows)


def scale(a: SparseOp, alpha: complex) -> SparseOp:
    alpha = complex(alpha)
    if alpha == 0:
        return SparseOp.zero(a.window)
    rows = {}
    for i, r in a._rows.items():
        nr = {j: alpha * v for j, v in r.items()}
        nr = {j: v for j, v in nr.items() if v != 0}
        if nr:
            rows[i] = nr
    return SparseOp._from_rows(a.window, rows)


def line_decompose(a: SparseOp) -> LineDecomposition:
    """Split ``a`` into row_max parts with a single entry per row.

    Part m collects the m-th entry of every row under the ascending-column
    tie-break; the zero operator decomposes into no parts.
    """
    k = a.profile.row_max
    parts_rows: list[dict[int, dict[int, complex]]] = [{} for _ in range(k)]
    for i, r in a._rows.items():
        for m, j in enumerate(sorted(r)):
            parts_rows[m][i] = {j: r[j]}
    parts = tuple(SparseOp._from_rows(a.window, rows) for rows in parts_rows)
    return LineDecomposition(a.window, parts)


# -- norms -------------------------------------------------------------------


def norm_upper_bound(a: SparseOp) -> float:
    """Rigorous operator-norm bound from the line decomposition.

    Splitting into single-entry-per-row parts gives
    ``|a| <= C * row_max * sqrt(col_max)`` with C the max entry modulus;
    the adjoint gives the dual bound, and we return the smaller.  For a
    square profile (k, k) this is the familiar ``C * k**1.5``.
    """
    if a.is_zero():
        return 0.0
    c = a.max_modulus()
    r, s = a.profile.row_max, a.profile.col_max
    return c * min(r * math.sqrt(s), s * math.sqrt(r))


def dense_norm(a: SparseOp) -> float:
    """Dense SVD oracle for the operator norm."""
    if a.is_zero():
        return 0.0
    return float(np.linalg.norm(a.to_dense(), 2))


def _matvec_arrays(a: SparseOp) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ii, jj, vv = [], [], []
    for i, r in a._rows.items():
        for j, v in r.items():
            ii.append(i - 1)
            jj.append(j - 1)
            vv.append(v)
    return (
        np.asarray(ii, dtype=np.intp),
        np.asarray(jj, dtype=np.intp),
        np.asarray(vv, dtype=np.complex128),
    )


def operator_norm(a: SparseOp, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest singular value via power iteration on ``a* a``.

    Deterministic start vector; stops once the Rayleigh quotient is stable
    to well below ``tol`` (relative) on two consecutive iterations.

    Raises:
        ConvergenceError: iteration cap reached; carries the last estimate.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if a.is_zero():
        return 0.0
    n = a.window
    ii, jj, vv = _matvec_arrays(a)
    cv = vv.conjugate()

    def apply_a(x: np.ndarray) -> np.ndarray:
        out = np.zeros(n, dtype=np.complex128)
        np.add.at(out, ii, vv * x[jj])
        return out

    def apply_astar(y: np.ndarray) -> np.ndarray:
        out = np.zeros(n, dtype=np.complex128)
        np.add.at(out, jj, cv * y[ii])
        return out

    # ramp keeps the start vector out of obvious symmetry traps
    x = 1.0 + np.arange(1, n + 1, dtype=np.float64) / (7.0 * n)
    x = x.astype(np.complex128)
    x /= np.linalg.norm(x)
    rho_prev = -1.0
    stable = 0
    inner_tol = 0.01 * tol
    for it in range(1, max_iter + 1):
        y = apply_a(x)
        rho = float(np.vdot(y, y).real)  # Rayleigh quotient of a*a at unit x
        if rho == 0.0:
            return 0.0
        if abs(rho - rho_prev) <= inner_tol * rho:
            stable += 1
            if stable >= 2:
                return math.sqrt(rho)
        else:
            stable = 0
        rho_prev = rho
        z = apply_astar(y)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return math.sqrt(rho)
        x = z / nz
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations",
        last_estimate=math.sqrt(max(rho_prev, 0.0)),
        iterations=max_iter,
    )


# -- columns and compressions -------------------------------------------------


def best_k_sparse_column_error(x: Sequence[complex], k: int) -> float:
    """Exact l2 distance from ``x`` to the set of k-sparse vectors.

    Equals the l2 norm of everything but the k largest-modulus coordinates,
    ties broken toward the lowest index.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    arr = np.asarray(list(x), dtype=np.complex128)
    mods = np.abs(arr)
    if k >= arr.size:
        return 0.0
    order = np.argsort(-mods, kind="stable")  # stable: lowest index wins ties
    dropped = order[k:]
    return float(math.sqrt(float(np.sum(mods[dropped] ** 2))))


def best_k_sparse_column_error_bruteforce(x: Sequence[complex], k: int) -> float:
    """Independent oracle: minimize over every size-k support explicitly."""
    arr = np.asarray(list(x), dtype=np.complex128)
    n = arr.size
    if k >= n:
        return 0.0
    total = float(np.sum(np.abs(arr) ** 2))
    best = total
    for supp in combinations(range(n), k):
        kept = sum(abs(arr[i]) ** 2 for i in supp)
        best = min(best, total - kept)
    return math.sqrt(max(best, 0.0))


def embed_blocks(grid: Sequence[Sequence[SparseOp | None]]) -> SparseOp:
    """Flatten an m-by-m grid of equal-window blocks by index interleaving.

    Block (r, c) contributes its (i, j) entry at position
    ``((i-1)*m + r, (j-1)*m + c)``; ``None`` stands for a zero block.  Each
    row of the result draws from one block row, so the profile multiplies
    by at most m.
    """
    m = len(grid)
    if m < 1 or any(len(row) != m for row in grid):
        raise ValueError("grid must be square and nonempty")
    window = None
    for row in grid:
        for blk in row:
            if blk is not None:
                if window is None:
                    window = blk.window
                elif blk.window != window:
                    raise DimensionMismatchError("blocks must share one window")
    if window is None:
        raise ValueError("grid has no blocks")
    rows: dict[int, dict[int, complex]] = {}
    for r in range(1, m + 1):
        for c in range(1, m + 1):
            blk = grid[r - 1][c - 1]
            if blk is None:
                continue
            for i, br in blk._rows.items():
                out_i = (i - 1) * m + r
                tr = rows.setdefault(out_i, {})
                for j, v in br.items():
                    out_j = (j - 1) * m + c
                    w = tr.get(out_j)
                    nv = v if w is None else w + v
                    if nv == 0:
                        tr.pop(out_j, None)
                    else:
                        tr[out_j] = nv
    rows = {i: r for i, r in rows.items() if r}
    return SparseOp._from_rows(m * window, rows)


def embed_block(a: SparseOp, m: int) -> SparseOp:
    """Diagonal embedding: ``a`` repeated in all m diagonal block slots."""
    if m < 1:
        raise ValueError("m must be positive")
    if m == 1:
        return embed_blocks([[a]])
    grid: list[list[SparseOp | None]] = [[None] * m for _ in range(m)]
    for r in range(m):
        grid[r][r] = a
    return embed_blocks(grid)


def truncate_compact(a: SparseOp, r: int) -> SparseOp:
    """Keep entries with both indices <= r (finite-support truncation)."""
    if r < 0 or r > a.window:
        raise ValueError(f"r must lie in [0..{a.window}], got {r}")
    rows = {}
    for i, row in a._rows.items():
        if i > r:
            continue
        nr = {j: v for j, v in row.items() if j <= r}
        if nr:
            rows[i] = nr
    return SparseOp._from_rows(a.window, rows)


def prune(a: SparseOp, eps: float) -> SparseOp:
    """Drop entries with modulus <= eps.  Never applied implicitly."""
    rows = {}
    for i, row in a._rows.items():
        nr = {j: v for j, v in row.items() if abs(v) > eps}
        if nr:
            rows[i] = nr
    return SparseOp._from_rows(a.window, rows)


def with_window(a: SparseOp, window: int) -> SparseOp:
    """Re-declare a larger window; existing entries are untouched."""
    if window < a.window:
        raise ValueError("window may only grow")
    rows = {i: dict(r) for i, r in a._rows.items()}
    return SparseOp._from_rows(window, rows)


# -- coordinate text format ---------------------------------------------------


def write_coordinate(a: SparseOp, path) -> None:
    """Write ``N nnz`` header plus ``i j re im`` lines sorted by (i, j)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{a.window} {a.nnz}\n")
        for i, j, v in a.iter_entries():
            fh.write(f"{i} {j} {v.real:.17g} {v.imag:.17g}\n")


def read_coordinate(path) -> SparseOp:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("bad header: expected 'N nnz'")
        window, nnz = int(header[0]), int(header[1])
        entries: dict[tuple[int, int], complex] = {}
        count = 0
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"bad entry line: {line!r}")
            i, j = int(parts[0]), int(parts[1])
            v = complex(float(parts[2]), float(parts[3]))
            if (i, j) in entries:
                raise ValueError(f"duplicate entry ({i},{j})")
            entries[(i, j)] = v
            count += 1
        if count != nnz:
            raise ValueError(f"header says {nnz} entries, found {count}")
    return SparseOp(window, entries)
