"""Regular graphs, degree-normalized Laplacians, and polynomial spectral filters.

The chain implemented here: sample simple d-regular graphs, certify their
spectral gap with a dense eigensolver, build the minimal-degree scaled
Chebyshev filter that is 1 at zero and uniformly small on ``[delta, 2]``,
and apply it to the Laplacian entirely in profile-tracked sparse
arithmetic.  The filtered operator approximates the kernel projection
(all-``1/m`` matrix on a connected graph) with error at most the filter's
sup on the gap interval, while its tracked profile stays below
``(d+1)**degree``.

The corner-compression estimate quantifies how cheaply an odd-size block
projection is approximated by the even-size one padded with a zero row and
column; its exact norm is checked against the closed bound
``(2 + 2*sqrt(2n)) / (2n + 1)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .errors import RetryExhaustedError
from .sparse_core import SparseOp, add, mul, scale
from .seeding import rng_for

__all__ = [
    "RegularGraph",
    "PolyFilter",
    "random_regular_graph",
    "is_connected",
    "bfs_ball",
    "laplacian",
    "spectral_gap",
    "kernel_projection",
    "chebyshev_filter",
    "apply_filter",
    "corner_compression_error",
    "build_even_projection_pipeline",
    "write_edge_list",
    "read_edge_list",
]

logger = logging.getLogger(__name__)

DENSE_EIG_CAP = 512  # oracle cost guard


@dataclass(frozen=True)
class RegularGraph:
    """Simple d-regular graph as sorted adjacency lists (0-based vertices)."""

    vertex_count: int
    degree: int
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)

    def __post_init__(self):
        m, d = self.vertex_count, self.degree
        if len(self.adjacency) != m:
            raise ValueError("adjacency list length must equal vertex count")
        for v, nbrs in enumerate(self.adjacency):
            if len(nbrs) != d or len(set(nbrs)) != d:
                raise ValueError(f"vertex {v} does not have degree {d}")
            if v in nbrs:
                raise ValueError(f"loop at vertex {v}")
            if list(nbrs) != sorted(nbrs):
                raise ValueError("neighbor lists must be sorted")
            for w in nbrs:
                if not (0 <= w < m):
                    raise ValueError("neighbor out of range")
                if v not in self.adjacency[w]:
                    raise ValueError("adjacency not symmetric")

    def edges(self) -> list[tuple[int, int]]:
        return [(v, w) for v, nbrs in enumerate(self.adjacency) for w in nbrs if v < w]


def random_regular_graph(m: int, d: int, seed: int, max_tries: int = 5000) -> RegularGraph:
    """Sample a simple d-regular graph by the pairing model.

    Stubs are shuffled and paired; any pairing with loops or repeated edges
    is rejected wholesale and redrawn, which keeps the distribution close to
    uniform.  Dense degrees (d above (m-1)/2) are sampled as the complement
    of a sparse regular graph, where rejection would almost never accept.
    Deterministic under ``seed``.
    """
    if d >= m:
        raise ValueError("need d < m")
    if d < 1:
        raise ValueError("degree must be positive")
    if (m * d) % 2 != 0:
        raise ValueError("m*d must be even")
    rng = np.random.default_rng(seed)
    if 2 * d > m - 1:
        sparse = _pairing_sample(m, m - 1 - d, rng, max_tries)
        full = set(range(m))
        adj = tuple(
            tuple(sorted(full - {v} - set(nbrs))) for v, nbrs in enumerate(sparse)
        )
        return RegularGraph(m, d, adj)
    return RegularGraph(m, d, _pairing_sample(m, d, rng, max_tries))


def _pairing_sample(
    m: int, d: int, rng: np.random.Generator, max_tries: int
) -> tuple[tuple[int, ...], ...]:
    if d == 0:
        return tuple(() for _ in range(m))

    def suitable(edges: set, counts: dict) -> bool:
        # some pair of leftover stubs must still be placeable
        if not counts:
            return True
        verts = sorted(counts)
        for i, s1 in enumerate(verts):
            for s2 in verts[i + 1 :]:
                if (s1, s2) not in edges:
                    return True
        return False

    def try_creation() -> set | None:
        edges: set[tuple[int, int]] = set()
        stubs = list(np.repeat(np.arange(m), d))
        while stubs:
            counts: dict[int, int] = {}
            stubs = list(rng.permutation(stubs))
            it = iter(stubs)
            for s1, s2 in zip(it, it):
                s1, s2 = int(s1), int(s2)
                if s1 > s2:
                    s1, s2 = s2, s1
                if s1 != s2 and (s1, s2) not in edges:
                    edges.add((s1, s2))
                else:
                    counts[s1] = counts.get(s1, 0) + 1
                    counts[s2] = counts.get(s2, 0) + 1
            if not suitable(edges, counts):
                return None  # dead end; restart from scratch
            stubs = [v for v, c in counts.items() for _ in range(c)]
        return edges

    for _ in range(max_tries):
        edges = try_creation()
        if edges is None:
            continue
        adj: list[list[int]] = [[] for _ in range(m)]
        for a, b in edges:
            adj[a].append(b)
            adj[b].append(a)
        return tuple(tuple(sorted(x)) for x in adj)
    raise RetryExhaustedError(
        f"no simple {d}-regular pairing on {m} vertices after {max_tries} tries"
    )


def is_connected(g: RegularGraph) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in g.adjacency[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.vertex_count


def bfs_ball(g: RegularGraph, v: int, radius: int) -> set[int]:
    """Vertices within graph distance ``radius`` of ``v``."""
    seen = {v}
    frontier = [v]
    for _ in range(radius):
        nxt = []
        for x in frontier:
            for w in g.adjacency[x]:
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return seen


def laplacian(g: RegularGraph) -> SparseOp:
    """Degree-normalized Laplacian: 1 on the diagonal, -1/d on edges.

    Symmetric, zero row sums, positive semidefinite, norm at most 2, and
    profile exactly (d+1, d+1).
    """
    off = complex(-1.0 / g.degree)
    rows: dict[int, dict[int, complex]] = {}
    for v, nbrs in enumerate(g.adjacency):
        r: dict[int, complex] = {v + 1: 1.0 + 0j}
        for w in nbrs:
            r[w + 1] = off
        rows[v + 1] = r
    return SparseOp._from_rows(g.vertex_count, rows)


def _dense_hermitian(l: SparseOp) -> np.ndarray:
    if l.window > DENSE_EIG_CAP:
        raise ValueError(f"dense eigensolver capped at window {DENSE_EIG_CAP}")
    arr = l.to_dense()
    if np.max(np.abs(arr - arr.conj().T)) > 1e-10:
        raise ValueError("input is not symmetric")
    return arr


def spectral_gap(l: SparseOp) -> tuple[float, float]:
    """Two smallest eigenvalues of a symmetric PSD operator (dense solve)."""
    arr = _dense_hermitian(l)
    vals = np.linalg.eigvalsh(arr)
    if vals[0] < -1e-10:
        raise ValueError(f"input is not PSD (min eigenvalue {vals[0]:.3e})")
    if len(vals) == 1:
        return float(vals[0]), math.inf
    return float(vals[0]), float(vals[1])


def kernel_projection(l: SparseOp, tol: float = 1e-10) -> np.ndarray:
    """Dense projector onto the eigenspace of eigenvalues below ``tol``."""
    arr = _dense_hermitian(l)
    vals, vecs = np.linalg.eigh(arr)
    cols = vecs[:, vals < tol]
    return cols @ cols.conj().T


@dataclass(frozen=True)
class PolyFilter:
    """Polynomial that is exactly 1 at zero and small on ``[delta, 2]``.

    Coefficients are in the Chebyshev basis of the affine variable
    ``y(x) = (2x - delta - 2) / (2 - delta)`` which maps ``[delta, 2]``
    onto ``[-1, 1]``.  Construction validates the two defining constraints:
    value 1 at zero (to 1e-12) and sup at most ``1/s + 1e-9`` on a
    10^4-point grid of ``[delta, 2]``.
    """

    degree: int
    coefficients: tuple[float, ...]
    delta: float
    level: int

    def __post_init__(self):
        if not (0 < self.delta < 2):
            raise ValueError("delta must lie in (0, 2)")
        if self.level < 1:
            raise ValueError("level must be a positive integer")
        if len(self.coefficients) != self.degree + 1:
            raise ValueError("need degree+1 coefficients")
        v0 = self.evaluate(0.0)
        if abs(v0 - 1.0) > 1e-12:
            raise ValueError(f"value at 0 is {v0!r}, expected 1")
        grid = np.linspace(self.delta, 2.0, 10_000)
        sup = float(np.max(np.abs(self.evaluate(grid))))
        if sup > 1.0 / self.level + 1e-9:
            raise ValueError(f"sup {sup:.3e} on [delta,2] exceeds 1/{self.level}")

    def map_arg(self, x):
        return (2.0 * np.asarray(x, dtype=float) - self.delta - 2.0) / (2.0 - self.delta)

    def evaluate(self, x):
        return _cheb.chebval(self.map_arg(x), np.asarray(self.coefficients))


def chebyshev_filter(delta: float, s: int, max_degree: int = 4000) -> PolyFilter:
    """Minimal-degree scaled Chebyshev filter for the gap ``[delta, 2]``.

    Takes the first Chebyshev degree t whose magnitude at the mapped origin
    reaches ``s``; dividing by that value pins the filter to 1 at zero while
    the sup on ``[delta, 2]`` drops to ``1/|T_t(y0)| <= 1/s``.
    """
    if not (0 < delta < 2):
        raise ValueError("delta must lie in (0, 2)")
    if s < 1:
        raise ValueError("s must be a positive integer")
    y0 = (0.0 - delta - 2.0) / (2.0 - delta)
    t_prev, t_cur = 1.0, y0  # T_0, T_1 at y0
    degree = 0
    value = 1.0
    while abs(value) < s:
        degree += 1
        if degree == 1:
            value = t_cur
        else:
            t_prev, t_cur = t_cur, 2.0 * y0 * t_cur - t_prev
            value = t_cur
        if degree > max_degree:
            raise ValueError("filter degree cap exceeded; gap too small")
    coeffs = [0.0] * (degree + 1)
    coeffs[degree] = 1.0 / value
    return PolyFilter(degree=degree, coefficients=tuple(coeffs), delta=delta, level=s)


def apply_filter(f: PolyFilter, l: SparseOp) -> SparseOp:
    """Evaluate the filter at an operator by Clenshaw recurrence.

    All arithmetic runs through profile-tracked sparse operations, so the
    result carries an exact sparsity certificate alongside the spectral
    approximation property.
    """
    n = l.window
    ident = SparseOp.identity(n)
    alpha = 2.0 / (2.0 - f.delta)
    beta = -(f.delta + 2.0) / (2.0 - f.delta)
    y = add(scale(l, alpha), scale(ident, beta))
    c = f.coefficients
    t = f.degree
    if t == 0:
        return scale(ident, c[0])
    b_next = SparseOp.zero(n)  # b_{k+2}
    b_cur = SparseOp.zero(n)  # b_{k+1}
    for k in range(t, 0, -1):
        b_new = add(add(scale(mul(y, b_cur), 2.0), scale(b_next, -1.0)), scale(ident, c[k]))
        b_next, b_cur = b_cur, b_new
    return add(add(scale(ident, c[0]), mul(y, b_cur)), scale(b_next, -1.0))


def corner_compression_error(n: int) -> tuple[float, float]:
    """Exact norm and closed bound for the odd-to-even corner compression.

    Compares the (2n+1)-size all-``1/(2n+1)`` projection against the
    2n-size one padded by zeros; the closed bound is
    ``(2 + 2*sqrt(2n)) / (2n + 1)`` and the dense norm never exceeds it.
    """
    if n < 1:
        raise ValueError("n must be positive")
    big = 2 * n + 1
    p_big = np.full((big, big), 1.0 / big)
    p_pad = np.zeros((big, big))
    p_pad[: 2 * n, : 2 * n] = 1.0 / (2 * n)
    exact = float(np.linalg.norm(p_big - p_pad, 2))
    bound = (2.0 + 2.0 * math.sqrt(2 * n)) / (2 * n + 1)
    return exact, bound


def write_edge_list(g: RegularGraph, path) -> None:
    """One edge per line as ``u v`` with 1-based vertex labels."""
    with open(path, "w", encoding="ascii") as fh:
        for v, w in g.edges():
            fh.write(f"{v + 1} {w + 1}\n")


def read_edge_list(path) -> tuple[tuple[int, ...], ...]:
    """Adjacency lists (0-based) from a 1-based ``u v`` edge-list file."""
    edges = []
    top = 0
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            u, v = (int(x) for x in line.split())
            if u < 1 or v < 1 or u == v:
                raise ValueError(f"bad edge {u} {v}")
            edges.append((u - 1, v - 1))
            top = max(top, u, v)
    adj: list[set[int]] = [set() for _ in range(top)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return tuple(tuple(sorted(s)) for s in adj)


def build_even_projection_pipeline(
    n_max: int,
    d: int,
    s: int,
    seed: int,
    max_block_retries: int = 50,
) -> dict:
    """Assemble the even-size block-projection approximation end to end.

    For each block n <= n_max a simple regular graph on 2n vertices is
    sampled (degree ``min(d, 2n-1)``; tiny blocks fall back to the complete
    graph, the best expander available at that size); disconnected samples
    are regenerated with the next child seed and logged.  The measured
    ``delta_hat = min lambda_1`` feeds the Chebyshev filter, which is then
    applied per block in sparse arithmetic; the dense eigendecomposition
    supplies the exact kernel projection for the error column.

    Returns a JSON-ready report::

        {params, per_block: [{m, lambda1, err}], delta_hat,
         filter_degree, profile_bound, max_err, profile_max_observed,
         corner: [{n, exact, bound}]}
    """
    if d < 3:
        raise ValueError("need degree at least 3")
    if n_max < 1:
        raise ValueError("n_max must be positive")
    graphs: list[RegularGraph] = []
    gaps: list[float] = []
    for n in range(1, n_max + 1):
        m = 2 * n
        dn = min(d, m - 1)
        g = None
        for attempt in range(max_block_retries):
            cand = random_regular_graph(m, dn, rng_for(seed, n, attempt).integers(2**63))
            if is_connected(cand):
                g = cand
                break
            logger.info("block %d: disconnected sample, regenerating (attempt %d)", n, attempt + 1)
        if g is None:
            raise RetryExhaustedError(f"no connected graph for block {n}")
        lam0, lam1 = spectral_gap(laplacian(g))
        graphs.append(g)
        gaps.append(lam1)
    delta_hat = min(gaps)
    filt = chebyshev_filter(delta_hat, s)
    per_block = []
    max_err = 0.0
    profile_obs = 0
    max_lap_norm = 0.0
    for n, g in enumerate(graphs, start=1):
        l = laplacian(g)
        fl = apply_filter(filt, l)
        vals, vecs = np.linalg.eigh(l.to_dense())
        max_lap_norm = max(max_lap_norm, float(vals[-1]))
        cols = vecs[:, vals < 1e-10]
        pker = cols @ cols.conj().T
        err = float(np.linalg.norm(fl.to_dense() - pker, 2))
        max_err = max(max_err, err)
        profile_obs = max(profile_obs, fl.profile.k)
        per_block.append({"m": g.vertex_count, "lambda1": gaps[n - 1], "err": err})
    corner = []
    for n in range(1, n_max + 1):
        exact, bound = corner_compression_error(n)
        corner.append({"n": n, "exact": exact, "bound": bound})
    return {
        "params": {"n_max": n_max, "d": d, "s": s, "seed": seed},
        "per_block": per_block,
        "delta_hat": delta_hat,
        "filter_degree": filt.degree,
        "profile_bound": (d + 1) ** filt.degree,
        "max_err": max_err,
        "profile_max_observed": profile_obs,
        "max_laplacian_norm": max_lap_norm,
        "corner": corner,
    }
