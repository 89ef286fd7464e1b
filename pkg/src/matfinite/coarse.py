"""Operators built from coarse and combinatorial data.

Three sources of uniformly sparse operators:

* truncated group actions on a finite point set (each generator is a
  permutation, possibly partial in "drop" boundary mode), combined linearly
  with at most one entry per generator in each row and column;
* adjacency operators of uniformly locally finite graphs (0/1 symmetric,
  profile bounded by the max degree);
* band operators over an explicit finite metric space: kernels supported on
  ``d(x, y) <= R``, profile bounded by the max ball size at radius R.

Metric spaces are explicit distance tables validated for symmetry and the
triangle inequality; each carries a witness table of ball sizes for the
declared radii.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .expander import RegularGraph
from .sparse_core import SparseOp, mul

__all__ = [
    "FiniteAction",
    "MetricSpace",
    "complete_cyclically",
    "free_group_ball_action",
    "action_operator",
    "adjacency_operator",
    "band_operator",
    "write_metric",
    "read_metric",
]


def complete_cyclically(images: Sequence[int | None]) -> tuple[int, ...]:
    """Extend a partial injection of [1..n] to a bijection.

    Unmapped sources are matched to unused targets in ascending order; this
    is the deterministic boundary wrap for truncated orbits.
    """
    n = len(images)
    defined = [x for x in images if x is not None]
    if len(set(defined)) != len(defined):
        raise ValueError("images must be injective where defined")
    if any(x is not None and not (1 <= x <= n) for x in images):
        raise ValueError("images out of range")
    free_targets = sorted(set(range(1, n + 1)) - set(defined))
    out: list[int] = []
    it = iter(free_targets)
    for x in images:
        out.append(next(it) if x is None else x)
    return tuple(out)


@dataclass(frozen=True)
class FiniteAction:
    """Truncated action of group generators on the points [1..point_count].

    Each generator maps point x to ``gen[x-1]`` (1-based), with ``None``
    marking a point whose image fell off the truncation ("drop" boundary
    mode).  Defined images are injective; in "cyclic" mode every generator
    is a full bijection.
    """

    point_count: int
    generators: tuple[tuple[int | None, ...], ...]

    def __post_init__(self):
        for g, gen in enumerate(self.generators):
            if len(gen) != self.point_count:
                raise ValueError(f"generator {g} has wrong length")
            defined = [x for x in gen if x is not None]
            if len(set(defined)) != len(defined):
                raise ValueError(f"generator {g} is not injective")
            if any(not (1 <= x <= self.point_count) for x in defined):
                raise ValueError(f"generator {g} maps outside the point set")

    @property
    def num_generators(self) -> int:
        return len(self.generators)

    def is_bijective(self) -> bool:
        return all(None not in gen for gen in self.generators)

    def inverse_generators(self) -> tuple[tuple[int | None, ...], ...]:
        out = []
        for gen in self.generators:
            inv: list[int | None] = [None] * self.point_count
            for x, y in enumerate(gen, start=1):
                if y is not None:
                    inv[y - 1] = x
            out.append(tuple(inv))
        return tuple(out)

    @classmethod
    def cyclic_shift(cls, point_count: int, step: int = 1) -> "FiniteAction":
        """The integers acting by translation, wrapped cyclically."""
        gen = tuple((x - 1 + step) % point_count + 1 for x in range(1, point_count + 1))
        return cls(point_count, (gen,))


def free_group_ball_action(
    radius: int,
    num_letters: int = 2,
    boundary: str = "cyclic",
) -> FiniteAction:
    """Left translation by the letters (and inverses) on a free-group ball.

    Points are the reduced words of length <= radius, enumerated breadth
    first; generators come in the order a_1, ..., a_n, a_1^{-1}, ...,
    a_n^{-1}.  Images leaving the ball are wrapped cyclically or dropped.
    """
    if boundary not in ("cyclic", "drop"):
        raise ValueError("boundary must be 'cyclic' or 'drop'")
    letters = list(range(1, num_letters + 1)) + list(range(-num_letters, 0))
    words: list[tuple[int, ...]] = [()]
    index = {(): 1}
    frontier = [()]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for s in letters:
                if w and w[0] == -s:
                    continue
                nw = (s,) + w
                if nw not in index:
                    index[nw] = len(words) + 1
                    words.append(nw)
                    nxt.append(nw)
        frontier = nxt
    n = len(words)
    gens: list[tuple[int | None, ...]] = []
    for s in letters:
        images: list[int | None] = []
        for w in words:
            if w and w[0] == -s:
                nw = w[1:]
            else:
                nw = (s,) + w
            images.append(index.get(nw))
        if boundary == "cyclic":
            gens.append(complete_cyclically(images))
        else:
            gens.append(tuple(images))
    return FiniteAction(n, tuple(gens))


def action_operator(
    act: FiniteAction,
    coeffs: Sequence[complex],
    diag: Sequence[complex] | None = None,
) -> SparseOp:
    """Linear combination of the generator permutation operators.

    ``sum_m coeffs[m] * P_{g_m}``, optionally composed with the diagonal
    multiplication operator on the left.  With r generators the profile is
    at most (r, r); the diagonal factor has profile (1, 1) so composition
    keeps the bound.
    """
    if len(coeffs) != act.num_generators:
        raise ValueError(
            f"need {act.num_generators} coefficients, got {len(coeffs)}"
        )
    rows: dict[int, dict[int, complex]] = {}
    for lam, gen in zip(coeffs, act.generators):
        lam = complex(lam)
        if lam == 0:
            continue
        for x, y in enumerate(gen, start=1):
            if y is None:
                continue
            r = rows.setdefault(y, {})
            w = r.get(x)
            nv = lam if w is None else w + lam
            if nv == 0:
                del r[x]
            else:
                r[x] = nv
    rows = {i: r for i, r in rows.items() if r}
    out = SparseOp._from_rows(act.point_count, rows)
    if diag is not None:
        d = SparseOp.diagonal(act.point_count, [complex(v) for v in diag])
        out = mul(d, out)
    return out


def adjacency_operator(g: RegularGraph | Sequence[Iterable[int]]) -> SparseOp:
    """0/1 adjacency operator of a uniformly locally finite simple graph.

    Accepts a :class:`RegularGraph` or raw 0-based neighbor lists; the
    profile equals (max degree, max degree) and the norm is at most the max
    degree.
    """
    if isinstance(g, RegularGraph):
        adj = g.adjacency
    else:
        adj = tuple(tuple(sorted(set(nbrs))) for nbrs in g)
        for v, nbrs in enumerate(adj):
            if v in nbrs:
                raise ValueError(f"loop at vertex {v}")
            for w in nbrs:
                if not (0 <= w < len(adj)) or v not in adj[w]:
                    raise ValueError("adjacency not symmetric")
    rows: dict[int, dict[int, complex]] = {}
    for v, nbrs in enumerate(adj):
        if nbrs:
            rows[v + 1] = {w + 1: 1.0 + 0j for w in nbrs}
    return SparseOp._from_rows(len(adj), rows)


@dataclass(frozen=True)
class MetricSpace:
    """Explicit finite metric with a ball-size witness table.

    ``distance`` is a symmetric nonnegative integer matrix with zero
    diagonal; the triangle inequality is validated on all triples for small
    spaces and on a deterministic sample otherwise.  ``ball_witness`` maps
    each declared radius to the max number of points in a ball of that
    radius.
    """

    point_count: int
    distance: np.ndarray = field(repr=False)
    declared_radii: tuple[float, ...] = ()
    ball_witness: dict[float, int] = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.distance)
        if d.shape != (self.point_count, self.point_count):
            raise ValueError("distance matrix has wrong shape")
        if np.any(d < 0):
            raise ValueError("distances must be nonnegative")
        if np.any(np.diag(d) != 0):
            raise ValueError("d(x, x) must be 0")
        if np.any(d != d.T):
            raise ValueError("distance matrix must be symmetric")
        n = self.point_count
        if n <= 40:
            triples = [(x, y, z) for x in range(n) for y in range(n) for z in range(n)]
        else:
            rng = np.random.default_rng(0)
            triples = [tuple(t) for t in rng.integers(0, n, size=(5000, 3))]
        for x, y, z in triples:
            if d[x, z] > d[x, y] + d[y, z]:
                raise ValueError(f"triangle inequality fails at ({x},{y},{z})")
        object.__setattr__(self, "distance", d)
        witness = dict(self.ball_witness)
        for r in self.declared_radii:
            witness.setdefault(r, self._ball_size(r))
        for r, size in witness.items():
            if size != self._ball_size(r):
                raise ValueError(f"ball witness at radius {r} is inconsistent")
        object.__setattr__(self, "ball_witness", witness)

    def _ball_size(self, radius: float) -> int:
        return int(np.max(np.sum(self.distance <= radius, axis=1)))

    def ball_size(self, radius: float) -> int:
        """Witnessed max ball size; recomputes (with a warning) if undeclared."""
        if radius in self.ball_witness:
            return self.ball_witness[radius]
        warnings.warn(
            f"radius {radius} not in the declared witness table; recomputing",
            stacklevel=2,
        )
        return self._ball_size(radius)

    @classmethod
    def from_points_l1(
        cls, points: Sequence[tuple[int, ...]], radii: Sequence[float] = ()
    ) -> "MetricSpace":
        """Taxicab metric on explicit integer grid points."""
        pts = np.asarray(points, dtype=np.int64)
        d = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2)
        return cls(len(points), d, tuple(radii))

    @classmethod
    def path(cls, n: int, radii: Sequence[float] = ()) -> "MetricSpace":
        """The integers 1..n with |x - y|."""
        idx = np.arange(n)
        d = np.abs(idx[:, None] - idx[None, :])
        return cls(n, d, tuple(radii))


def band_operator(
    space: MetricSpace,
    kernel: Callable[[int, int], complex],
    radius: float,
) -> SparseOp:
    """Operator with kernel entries only where ``d(x, y) <= radius``.

    ``kernel(x, y)`` receives 1-based indices; exact zeros are pruned.  The
    profile is bounded by the witnessed ball size at the radius.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    space.ball_size(radius)  # force the witness (warns if undeclared)
    d = space.distance
    rows: dict[int, dict[int, complex]] = {}
    n = space.point_count
    for x0 in range(n):
        r: dict[int, complex] = {}
        for y0 in np.nonzero(d[x0] <= radius)[0]:
            v = complex(kernel(x0 + 1, int(y0) + 1))
            if v != 0:
                r[int(y0) + 1] = v
        if r:
            rows[x0 + 1] = r
    return SparseOp._from_rows(n, rows)


def write_metric(space: MetricSpace, path) -> None:
    """Write ``N`` then N lines of N integers."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{space.point_count}\n")
        for row in space.distance:
            fh.write(" ".join(str(int(x)) for x in row) + "\n")


def read_metric(path, radii: Sequence[float] = ()) -> MetricSpace:
    with open(path, "r", encoding="ascii") as fh:
        n = int(fh.readline())
        rows = []
        for _ in range(n):
            rows.append([int(x) for x in fh.readline().split()])
    return MetricSpace(n, np.asarray(rows, dtype=np.int64), tuple(radii))
