import numpy as np
import pytest

from matfinite.sparse_core import SparseOp


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def hermitian_from(entries: dict, window: int) -> SparseOp:
    """Build an exactly self-adjoint operator from the upper part."""
    full = {}
    for (i, j), v in entries.items():
        v = complex(v)
        full[(i, j)] = full.get((i, j), 0j) + v
        if i != j:
            full[(j, i)] = full.get((j, i), 0j) + v.conjugate()
    return SparseOp(window, full)
