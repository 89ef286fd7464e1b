"""Deterministic random operator families for experiments and property checks.

Two families:

* :func:`random_profile_op` - k shifted copies of one random permutation,
  each carrying its own values.  Shifting by distinct offsets makes the
  layers collision-free, so the result has profile exactly (k, k) at full
  density and max entry modulus bounded by ``magnitude``.
* :func:`random_invertible_banded` - dominant random diagonal plus a few
  short-range off-diagonal layers; resampled until the dense smallest
  singular value clears the requested floor.
"""

from __future__ import annotations

import numpy as np

from .errors import RetryExhaustedError
from .sparse_core import SparseOp

__all__ = ["random_profile_op", "random_invertible_banded"]


def random_profile_op(
    window: int,
    k: int,
    rng: np.random.Generator,
    magnitude: float = 1.0,
    density: float = 1.0,
) -> SparseOp:
    """Random operator with profile at most (k, k) and entries below magnitude."""
    if not (1 <= k <= window):
        raise ValueError("need 1 <= k <= window")
    base = rng.permutation(window)
    rows: dict[int, dict[int, complex]] = {}
    for layer in range(k):
        keep = rng.random(window) < density
        mags = magnitude * rng.random(window)
        phases = np.exp(2j * np.pi * rng.random(window))
        for j0 in range(window):
            if not keep[j0]:
                continue
            v = complex(mags[j0] * phases[j0])
            if v == 0:
                continue
            i = int((base[j0] + layer) % window) + 1
            rows.setdefault(i, {})[j0 + 1] = v
    return SparseOp._from_rows(window, rows)


def random_invertible_banded(
    window: int,
    k: int,
    rng: np.random.Generator,
    sigma_floor: float = 0.1,
    bandwidth: int = 8,
    max_tries: int = 20,
) -> SparseOp:
    """Random profile-(k, k) invertible with dense sigma_min above the floor.

    Diagonal moduli in [0.7, 1.3] with random phases; k-1 extra layers are
    offset diagonals (offset <= bandwidth) with small entries, keeping the
    perturbation norm under the diagonal's floor.
    """
    if k < 1:
        raise ValueError("k must be positive")
    noise_mag = 0.3 / max(k - 1, 1)
    for _ in range(max_tries):
        rows: dict[int, dict[int, complex]] = {}
        mags = 0.7 + 0.6 * rng.random(window)
        phases = np.exp(2j * np.pi * rng.random(window))
        for i in range(1, window + 1):
            rows[i] = {i: complex(mags[i - 1] * phases[i - 1])}
        for _layer in range(k - 1):
            offset = int(rng.integers(1, bandwidth + 1)) * (1 if rng.random() < 0.5 else -1)
            vals = noise_mag * rng.random(window) * np.exp(2j * np.pi * rng.random(window))
            for j in range(1, window + 1):
                i = j + offset
                if not (1 <= i <= window):
                    continue
                v = complex(vals[j - 1])
                if v == 0:
                    continue
                r = rows.setdefault(i, {})
                w = r.get(j)
                r[j] = v if w is None else w + v
        op = SparseOp._from_rows(window, rows)
        sigma = float(np.linalg.svd(op.to_dense(), compute_uv=False)[-1])
        if sigma > sigma_floor:
            return op
    raise RetryExhaustedError(f"no sample with sigma_min > {sigma_floor} in {max_tries} tries")
