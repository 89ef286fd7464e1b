import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import hermitian_from
from matfinite.constructions import BlockLayout, make_averaging_isometry, make_block_projection, make_shift_isometries
from matfinite.errors import ApproximationBudgetError, InsufficientDataError, MatfiniteError
from matfinite.ghost import (
    ExtractionCertificate,
    extract_diagonal_case,
    extract_offdiagonal_case,
    ideal_product_bound,
    l1_bound,
    sparse_approximant,
    tail_profile,
)
from matfinite.random_ops import random_profile_op
from matfinite.sparse_core import SparseOp, add, adjoint, mul


def block_of(t: int) -> int:
    m = 1
    while m * (m + 1) // 2 < t:
        m += 1
    return m


# -- tail profile ---------------------------------------------------------------


def test_tail_profile_of_block_projection():
    p = make_block_projection(BlockLayout.triangular(10)).to_sparse()
    tp = tail_profile(p)
    for t in range(1, p.window + 1):
        assert tp(t) == pytest.approx(1.0 / block_of(t), abs=0)


def test_tail_profile_identity_not_ghostlike():
    tp = tail_profile(SparseOp.identity(12))
    assert all(v == 1.0 for v in tp.values)


def test_tail_profile_finite_rank_eventually_zero():
    a = SparseOp(10, {(1, 2): 3.0, (4, 4): 2.0})
    tp = tail_profile(a)
    assert tp(5) == 0.0 and tp(1) == 3.0 and tp(2) == 2.0


def test_tail_profile_finite_rank_perturbation(rng):
    a = random_profile_op(30, 2, rng)
    bump = SparseOp(30, {(2, 3): 7.0, (5, 1): 1.0})
    tp_a = tail_profile(a)
    tp_b = tail_profile(add(a, bump))
    for t in range(6, 31):  # beyond the bump's reach both agree
        assert tp_b(t) == tp_a(t)


@given(st.integers(0, 2**31), st.floats(0.001, 0.2))
@settings(max_examples=30, deadline=None)
def test_tail_profile_entrywise_stability(seed, eps):
    rng = np.random.default_rng(seed)
    a = random_profile_op(20, 2, rng)
    # perturb every entry by at most eps
    entries = {}
    for i, j, v in a.iter_entries():
        entries[(i, j)] = v + eps * complex(rng.random() * 2 - 1) / 2
    b = SparseOp(20, entries)
    ta, tb = tail_profile(a), tail_profile(b)
    for t in range(1, 21):
        assert abs(ta(t) - tb(t)) <= eps + 1e-12


def test_tail_profile_nonincreasing_enforced():
    from matfinite.ghost import TailProfile

    with pytest.raises(ValueError):
        TailProfile((0.5, 0.7))


# -- ideal product bound ----------------------------------------------------------


def test_product_bound_projection_times_identity():
    p = make_block_projection(BlockLayout.triangular(8)).to_sparse()
    n_split = 5
    bound = ideal_product_bound(p, SparseOp.identity(p.window), n_split)
    assert bound == pytest.approx(tail_profile(p)(n_split), abs=1e-12)


def test_product_bound_checks_every_far_entry(rng):
    p = make_block_projection(BlockLayout.triangular(8)).to_sparse()
    v1, _ = make_shift_isometries(p.window)
    n_split = 7
    bound = ideal_product_bound(p, v1, n_split)
    c = mul(p, v1)
    # columns reachable from the first n_split rows of the sparse factor
    m_reach = max(
        (max(v1.row_support(j)) for j in range(1, n_split + 1) if v1.row_support(j)),
        default=0,
    )
    eps = tail_profile(p)(n_split)
    checked = 0
    for i, j, v in c.iter_entries():
        if i > n_split and j > m_reach:
            assert abs(v) <= bound + 1e-12
            checked += 1
    assert checked > 0
    assert bound == pytest.approx(eps * v1.profile.k * 1.0, abs=1e-12)


def test_product_bound_zero_ghost():
    z = SparseOp.zero(6)
    assert ideal_product_bound(z, SparseOp.identity(6), 3) == 0.0


# -- l1 diagnostics ------------------------------------------------------------------


def test_l1_identity():
    assert l1_bound(SparseOp.identity(9)) == (1.0, 1.0)


def test_l1_profile_inequality(rng):
    a = random_profile_op(40, 4, rng)
    row_sup, col_sup = l1_bound(a)
    c = a.max_modulus()
    assert row_sup <= a.profile.row_max * c + 1e-12
    assert col_sup <= a.profile.col_max * c + 1e-12


def test_l1_averaging_column_sums_grow():
    lay = BlockLayout.triangular(9)
    v = make_averaging_isometry(lay)
    _, col_sup = l1_bound(v)
    assert col_sup == pytest.approx(math.sqrt(9), abs=1e-12)
    # per-column sums are sqrt(n): an unbounded trend as blocks grow
    sums = [sum(abs(v.entry(i, n)) for i in v.col_support(n)) for n in range(1, 10)]
    assert sums == sorted(sums)


# -- sparse approximant ----------------------------------------------------------------


def test_approximant_exact_when_within_profile(rng):
    a = random_profile_op(20, 3, rng)
    h = add(a, adjoint(a))
    approx, err = sparse_approximant(h, 6)
    assert approx == h and err == 0.0


def test_approximant_symmetric_and_profiled():
    entries = {(1, j): 1.0 / j for j in range(1, 9)}
    a = hermitian_from(entries, 10)
    approx, err = sparse_approximant(a, 3)
    assert approx.profile.row_max <= 3 and approx.profile.col_max <= 3
    assert adjoint(approx) == approx
    assert err > 0


def test_budget_error_raised():
    p = make_block_projection(BlockLayout.triangular(10)).to_sparse()
    with pytest.raises(ApproximationBudgetError):
        extract_diagonal_case(p, 0.8, 2)  # blocks up to 10 cannot be 2-approximated


# -- diagonal extraction ------------------------------------------------------------------


def test_diagonal_identity_case():
    a = SparseOp.identity(12)
    cert = extract_diagonal_case(a, 0.5, 1)
    assert cert.case_tag == "diagonal"
    assert cert.selected == tuple(range(1, 13))
    assert cert.sigma_min == pytest.approx(1.0)
    assert cert.sigma_min > 0.25
    assert cert.isometry.profile.k == 1


def test_diagonal_planted_with_noise(rng):
    window = 60
    delta = 0.5
    planted = sorted(rng.choice(np.arange(1, window + 1), size=14, replace=False).tolist())
    entries = {(i, i): 0.9 + 0j for i in planted}
    noise_pairs = rng.integers(1, window + 1, size=(20, 2))
    for i, j in noise_pairs:
        if i != j:
            entries[(int(i), int(j))] = entries.get((int(i), int(j)), 0) + 0.02
    a = hermitian_from(entries, window)
    cert = extract_diagonal_case(a, delta, 3)
    assert len(cert.selected) >= 2
    # independent recompute through the operator algebra route
    u = cert.isometry
    p_l = SparseOp(window, {(i, i): 1.0 for i in cert.selected})
    compressed = mul(adjoint(u), mul(p_l, mul(a, u)))
    m = len(cert.selected)
    block = compressed.to_dense()[:m, :m]
    sigma = np.linalg.svd(block, compute_uv=False)[-1]
    assert sigma == pytest.approx(cert.sigma_min, abs=1e-12)
    assert sigma > delta / 2


def test_diagonal_selection_supports_disjoint(rng):
    window = 40
    entries = {(i, i): 0.9 + 0j for i in range(1, window + 1, 3)}
    for i in range(1, window - 1, 5):
        entries[(i, i + 1)] = 0.3
    a = hermitian_from(entries, window)
    cert = extract_diagonal_case(a, 0.5, 3)
    approx, _ = sparse_approximant(a, 3)
    seen = set()
    for i in cert.selected:
        supp = set(approx.row_support(i))
        assert not (supp & seen)
        seen |= supp
    # the compression of the approximant is exactly diagonal
    for i in cert.selected:
        for j in cert.selected:
            if i != j:
                assert approx.entry(i, j) == 0


def test_diagonal_ghostlike_insufficient():
    p = make_block_projection(BlockLayout.triangular(8)).to_sparse()
    with pytest.raises(InsufficientDataError):
        extract_diagonal_case(p, 0.8, 8)
    d = SparseOp.diagonal(30, [1.0 / i for i in range(1, 31)])
    with pytest.raises(InsufficientDataError):
        extract_diagonal_case(d, 0.8, 1)


def test_not_selfadjoint_rejected():
    a = SparseOp(5, {(1, 2): 1.0})
    with pytest.raises(ValueError):
        extract_diagonal_case(a, 0.5, 1)


# -- off-diagonal extraction -----------------------------------------------------------------


def test_offdiagonal_symmetrized_shift():
    v1, _ = make_shift_isometries(32)
    s = add(v1, adjoint(v1))
    cert = extract_offdiagonal_case(s, 0.5, 2)
    assert cert.case_tag == "offdiagonal"
    assert len(cert.selected) >= 2
    assert cert.sigma_min > 0.25
    for i, j in cert.selected:
        assert i != j


def test_offdiagonal_planted_pairs(rng):
    window = 80
    delta = 0.5
    entries = {}
    pos = 3
    pairs = []
    while pos + 1 <= window:
        pairs.append((pos, pos + 1))
        entries[(pos, pos + 1)] = 0.9 * np.exp(2j * np.pi * rng.random())
        pos += int(rng.integers(4, 9))
    for i in range(1, window + 1, 7):
        entries[(i, i)] = entries.get((i, i), 0) + 0.02  # small diagonal noise
    a = hermitian_from(entries, window)
    cert = extract_offdiagonal_case(a, delta, 3)
    assert len(cert.selected) >= 2
    order = [x for pair in cert.selected for x in pair]
    block = a.to_dense()[np.ix_([x - 1 for x in order], [x - 1 for x in order])]
    sigma = np.linalg.svd(block, compute_uv=False)[-1]
    assert sigma == pytest.approx(cert.sigma_min, abs=1e-12)
    assert sigma > delta / 2
    # packing isometry maps pairs onto leading coordinates
    u = cert.isometry
    i1, j1 = cert.selected[0]
    assert u.entry(i1, 1) == 1.0 and u.entry(j1, 2) == 1.0


def test_offdiagonal_all_small_insufficient():
    a = hermitian_from({(1, 2): 0.1, (5, 6): 0.1}, 10)
    with pytest.raises(InsufficientDataError):
        extract_offdiagonal_case(a, 0.5, 2)


def test_certificate_invariant_enforced():
    u = SparseOp.identity(4)
    with pytest.raises(MatfiniteError):
        ExtractionCertificate(
            case_tag="diagonal", selected=(1, 2), delta=1.0, sigma_min=0.4,
            isometry=u, approximant_k=1, approximant_error=0.0,
        )
    with pytest.raises(ValueError):
        ExtractionCertificate(
            case_tag="bogus", selected=(1, 2), delta=1.0, sigma_min=1.0,
            isometry=u, approximant_k=1, approximant_error=0.0,
        )


# -- strictness of the inclusion: compacts vs ghost-like ------------------------------------


def test_block_projection_tail_vanishes_but_rank_grows():
    for blocks in (4, 6, 8):
        lay = BlockLayout.triangular(blocks)
        p = make_block_projection(lay).to_sparse()
        tp = tail_profile(p)
        assert tp(p.window) == pytest.approx(1.0 / blocks)
        svals = np.linalg.svd(p.to_dense(), compute_uv=False)
        assert int(np.sum(svals > 0.5)) == blocks
