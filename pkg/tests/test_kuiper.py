import math

import numpy as np
import pytest

from matfinite.errors import MatfiniteError, WindowTooSmallError
from matfinite.kuiper import (
    KuiperConfig,
    Selection,
    contract,
    normalize_and_compress,
    profile_budget,
    rotation_stage,
    select_basis_vectors,
    verify_selection,
    whitehead_pair_path,
    whitehead_stage,
)
from matfinite.random_ops import random_invertible_banded
from matfinite.sparse_core import SparseOp


# -- selection -------------------------------------------------------------------


def test_select_identity_takes_lowest_indices():
    g = SparseOp.identity(16)
    sel = select_basis_vectors(g, 4)
    assert sel.alpha == (1, 3, 5, 7)
    assert sel.beta == (2, 4, 6, 8)


def test_select_diagonal_everything_admissible():
    g = SparseOp.diagonal(12, [2.0] * 12)
    sel = select_basis_vectors(g, 3)
    verify_selection(g, sel)
    assert sel.count == 3


def test_select_random_g_window_512_verifies_exactly(rng):
    g = random_invertible_banded(512, 3, rng)
    sel = select_basis_vectors(g, 8)
    verify_selection(g, sel)
    # explicit inner-product form of the admissibility conditions
    dense = g.to_dense()
    spans = []
    for a, b in zip(sel.alpha, sel.beta):
        img = dense[:, a - 1]
        assert abs(img[b - 1]) == 0.0  # partner orthogonal to the image
        for span in spans:
            for vec in span:
                assert abs(np.vdot(vec, img)) == 0.0
                e_a = np.zeros(g.window)
                e_a[a - 1] = 1.0
                assert abs(np.vdot(vec, e_a)) == 0.0
                e_b = np.zeros(g.window)
                e_b[b - 1] = 1.0
                assert abs(np.vdot(vec, e_b)) == 0.0
        basis = [img]
        for idx in (a, b):
            e = np.zeros(g.window, dtype=complex)
            e[idx - 1] = 1.0
            basis.append(e)
        spans.append(basis)


def test_select_window_exhaustion():
    g = SparseOp.identity(6)
    with pytest.raises(WindowTooSmallError):
        select_basis_vectors(g, 4)


def test_verify_selection_rejects_collisions():
    g = SparseOp.identity(8)
    with pytest.raises(MatfiniteError):
        verify_selection(g, Selection(alpha=(1, 1), beta=(2, 3)))
    with pytest.raises(MatfiniteError):
        verify_selection(g, Selection(alpha=(1,), beta=(1,)))


# -- rotation stage ------------------------------------------------------------------


def test_rotation_preserves_singular_values(rng):
    g = random_invertible_banded(24, 2, rng)
    sel = select_basis_vectors(g, 3)
    seg1, seg2 = rotation_stage(g, sel, KuiperConfig(steps=8, count=3))
    svals_in = np.linalg.svd(g.to_dense(), compute_uv=False)
    for seg in (seg1, seg2):
        assert seg.stage in ("rotate1", "rotate2")
        for cert, op in zip(seg.certificates, seg.steps):
            assert cert.sigma_min == pytest.approx(svals_in[-1], abs=1e-10)
            recomputed = np.linalg.svd(op.to_dense(), compute_uv=False)[-1]
            assert recomputed == pytest.approx(cert.sigma_min, abs=1e-12)


def test_rotation_endpoint_maps_selected_to_scaled_basis(rng):
    g = random_invertible_banded(24, 2, rng)
    sel = select_basis_vectors(g, 3)
    _, seg2 = rotation_stage(g, sel, KuiperConfig(steps=8, count=3))
    end = seg2.steps[-1].to_dense()
    gd = g.to_dense()
    for a in sel.alpha:
        col = end[:, a - 1]
        c = np.linalg.norm(gd[:, a - 1])
        expect = np.zeros_like(col)
        expect[a - 1] = c
        assert np.max(np.abs(col - expect)) < 1e-12


def test_rotation_identity_input_trivial():
    g = SparseOp.identity(10)
    sel = select_basis_vectors(g, 2)
    seg1, seg2 = rotation_stage(g, sel, KuiperConfig(steps=4, count=2))
    for cert in list(seg1.certificates) + list(seg2.certificates):
        assert cert.sigma_min == pytest.approx(1.0, abs=1e-12)


# -- normalize and compress ------------------------------------------------------------


def test_compress_profile_never_grows(rng):
    g = random_invertible_banded(24, 2, rng)
    sel = select_basis_vectors(g, 3)
    _, seg2 = rotation_stage(g, sel, KuiperConfig(steps=8, count=3))
    seg3 = normalize_and_compress(seg2.steps[-1], sel, KuiperConfig(steps=8, count=3))
    profiles = [c.profile.k for c in seg3.certificates]
    start = seg2.certificates[-1].profile.k
    assert max(profiles) <= start
    # endpoint acts as identity on the selected span
    end = seg3.steps[-1].to_dense()
    for a in sel.alpha:
        col = end[:, a - 1]
        assert col[a - 1] == 1.0
        assert np.count_nonzero(col) == 1
        row = end[a - 1, :]
        assert np.count_nonzero(row) == 1


def test_compress_identity_input_constant():
    g = SparseOp.identity(10)
    sel = select_basis_vectors(g, 2)
    _, seg2 = rotation_stage(g, sel, KuiperConfig(steps=4, count=2))
    seg3 = normalize_and_compress(seg2.steps[-1], sel, KuiperConfig(steps=4, count=2))
    for op in seg3.steps:
        assert op == SparseOp.identity(10)


# -- whitehead ---------------------------------------------------------------------------


def test_whitehead_pair_path_scalar_two():
    path = whitehead_pair_path(np.array([[2.0 + 0j]]), steps=32)
    start, end = path[0], path[-1]
    np.testing.assert_allclose(start, np.diag([2.0, 0.5]), atol=1e-14)
    np.testing.assert_allclose(end, np.eye(2), atol=1e-10)
    # independent recompute of the four-factor formula at every sample
    u = np.array([[2.0 + 0j]])
    uinv = np.array([[0.5 + 0j]])
    for j, sample in enumerate(path):
        t = (math.pi / 2) * (1 - j / 32)
        r = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
        rinv = np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]])
        expected = np.diag([2.0, 1.0]) @ r @ np.diag([0.5, 1.0]) @ rinv
        np.testing.assert_allclose(sample, expected, atol=1e-13)
        # invertible throughout
        assert abs(np.linalg.det(sample)) > 1e-9


def test_whitehead_pair_path_matrix_block(rng):
    d = 4
    u = np.eye(d) + 0.2 * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    path = whitehead_pair_path(u, steps=16)
    uinv = np.linalg.inv(u)
    np.testing.assert_allclose(path[0][:d, :d], u, atol=1e-12)
    np.testing.assert_allclose(path[0][d:, d:], uinv, atol=1e-12)
    np.testing.assert_allclose(path[-1], np.eye(2 * d), atol=1e-10)
    bound = 2 * max(
        int(np.max(np.count_nonzero(u != 0, axis=1))),
        int(np.max(np.count_nonzero(uinv != 0, axis=1))),
    ) + 2
    for sample in path:
        rows = int(np.max(np.count_nonzero(np.abs(sample) > 1e-15, axis=1)))
        assert rows <= bound


def test_whitehead_stage_scalar_two_block(rng):
    # f4 = identity on the selected span, 2x identity elsewhere
    window = 12
    g = SparseOp.diagonal(window, [2.0] * window)
    sel = select_basis_vectors(g, 2)
    entries = {}
    for i in range(1, window + 1):
        entries[(i, i)] = 1.0 if i in sel.alpha else 2.0
    f4 = SparseOp(window, entries)
    seg, report = whitehead_stage(f4, sel, KuiperConfig(steps=16, count=2))
    end = seg.steps[-1].to_dense()
    assert np.max(np.abs(end - np.eye(window))) < 1e-10
    assert report["u_inverse_defect"] <= 1e-8
    assert report["u_profile"] == (1, 1)
    assert report["u_inverse_profile"] == (1, 1)
    assert report["slice_action"].startswith("identity")


def test_whitehead_stage_requires_identity_on_selected():
    g = SparseOp.diagonal(8, [2.0] * 8)
    sel = select_basis_vectors(g, 2)
    with pytest.raises(MatfiniteError):
        whitehead_stage(g, sel, KuiperConfig(steps=4, count=2))


def test_profile_budget_monotone():
    assert profile_budget(3, 10) >= profile_budget(2, 10)
    assert profile_budget(3, 20) >= profile_budget(3, 10)


# -- full contraction ------------------------------------------------------------------------


def test_contract_identity():
    path = contract(SparseOp.identity(12), KuiperConfig(steps=4, count=2))
    assert path.steps[0] == SparseOp.identity(12)
    assert path.min_sigma == pytest.approx(1.0, abs=1e-10)
    assert path.report["endpoint_defect"] <= 1e-12
    stages = [b[0] for b in path.stage_bounds]
    assert stages == ["select", "rotate1", "rotate2", "compress", "compress",
                      "whitehead", "whitehead"]


def test_contract_diagonal_with_spread():
    g = SparseOp.diagonal(12, [2.0, 0.5, 1.0, 1.5] + [1.0] * 8)
    path = contract(g, KuiperConfig(steps=8, count=2))
    assert path.min_sigma > 1e-6
    assert path.max_jump <= 0.1
    assert path.report["endpoint_defect"] <= 1e-8
    assert path.steps[0] == g


def test_contract_random_certified_independently(rng):
    g = random_invertible_banded(40, 3, rng)
    cfg = KuiperConfig(steps=16, count=4)
    path = contract(g, cfg)
    assert len(path.steps) == len(path.certificates)
    for cert, op in zip(path.certificates, path.steps):
        svals = np.linalg.svd(op.to_dense(), compute_uv=False)
        assert svals[-1] == pytest.approx(cert.sigma_min, abs=1e-12)
        assert cert.sigma_min > 1e-6
        assert cert.jump <= cfg.max_jump + 1e-12
        assert cert.profile == op.profile
    assert path.max_profile <= path.report["profile_budget"]
    assert path.report["endpoint_defect"] <= 1e-8
    # jumps between consecutive stored steps are genuinely small
    for prev, cur, cert in zip(path.steps, path.steps[1:], path.certificates[1:]):
        diff = np.linalg.norm(cur.to_dense() - prev.to_dense(), 2)
        denom = np.linalg.norm(prev.to_dense(), 2)
        assert diff / denom <= cert.jump + 1e-12


def test_contract_boundaries_mode_keeps_stage_ends(rng):
    g = random_invertible_banded(32, 3, rng)
    path = contract(g, KuiperConfig(steps=8, count=3, store="boundaries"))
    assert path.steps[0] == g
    assert len(path.steps) == 7  # input + six stage ends
    assert len(path.certificates) > len(path.steps)
    final = path.steps[-1]
    assert final == SparseOp.identity(32)


def test_contract_rejects_near_singular():
    g = SparseOp.diagonal(8, [1e-9] + [1.0] * 7)
    with pytest.raises(ValueError):
        contract(g, KuiperConfig(steps=4, count=2))


def test_min_window_heuristic():
    assert KuiperConfig.min_window(3, count=8) == 8 * 5 + 2
