"""Certified contraction paths from a sparse invertible to the identity.

The path is assembled in stages, each a discretized homotopy through
invertibles with a certificate (smallest singular value, exact nonzero
profile, relative jump) recorded at every step:

* ``select`` - pick basis columns ``e_{alpha_i}`` whose images under ``g``
  have pairwise disjoint supports avoiding everything chosen before, plus
  partner vectors ``e_{beta_i}`` orthogonal to all of it.  The three
  admissibility conditions are verified by explicit support checks.
* ``rotate1`` / ``rotate2`` - simultaneous plane rotations carry
  ``g(e_{alpha_i})`` onto the partner direction and then onto
  ``e_{alpha_i}`` itself.  Rotations are unitary, so singular values ride
  along unchanged.
* ``compress`` - the alpha-columns are rescaled to unit length, then the
  coupling between the selected span and the rest is switched off
  linearly, never increasing the nonzero count.
* ``whitehead`` - the residual block ``u`` on the non-selected coordinates
  is contracted through its polar factors: positive part by power
  interpolation of the singular values, unitary part along its spectral
  one-parameter group.  The inverse block is computed, its measured
  profile recorded (sparsity of ``u^{-1}`` is *not* certified, only
  observed), and the product defect ``|u u^{-1} - 1|`` checked.

At a finite window the selected span is always strictly smaller than its
complement, so the textbook two-block rotation that cancels
``diag(u, u^{-1})`` has no equal-size partner slice to act on; the polar
route above is the finite-window substitute.  The two-block rotation path
itself is exposed as :func:`whitehead_pair_path` for equal-size blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import MatfiniteError, WindowTooSmallError
from .sparse_core import SparseOp, SparsityProfile

__all__ = [
    "KuiperConfig",
    "Selection",
    "StepCertificate",
    "PathSegment",
    "HomotopyPath",
    "select_basis_vectors",
    "verify_selection",
    "rotation_stage",
    "normalize_and_compress",
    "whitehead_stage",
    "whitehead_pair_path",
    "profile_budget",
    "contract",
]


@dataclass(frozen=True)
class KuiperConfig:
    """Discretization and certification knobs for the contraction."""

    steps: int = 64              # base samples per stage
    max_jump: float = 0.1        # per-step relative jump ceiling
    count: int = 8               # how many basis vectors to select
    sigma_floor: float = 1e-8    # refine when a step's sigma_min dips below
    max_retries: int = 3         # step-halving retries per stage
    endpoint_tol: float = 1e-8   # final distance to the identity
    store: str = "all"           # "all" or "boundaries"

    def __post_init__(self):
        if self.steps < 1 or self.count < 1 or self.max_retries < 0:
            raise ValueError("bad config")
        if self.store not in ("all", "boundaries"):
            raise ValueError("store must be 'all' or 'boundaries'")

    @staticmethod
    def min_window(k: int, count: int = 8) -> int:
        """Rough feasibility floor: each selection consumes up to k+2 indices."""
        return count * (k + 2) + 2


@dataclass(frozen=True)
class Selection:
    """Chosen column indices (1-based) and their partner indices."""

    alpha: tuple[int, ...]
    beta: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class StepCertificate:
    index: int
    stage: str
    sigma_min: float
    sigma_max: float
    profile: SparsityProfile
    jump: float  # relative jump from the previous step (conservative where bounded)


@dataclass(frozen=True)
class PathSegment:
    """One stage's recorded steps (dense mirrors of the certified operators)."""

    stage: str
    steps: tuple[SparseOp, ...]
    certificates: tuple[StepCertificate, ...]


@dataclass(frozen=True)
class HomotopyPath:
    """Concatenated certified path; step 0 is the input operator."""

    window: int
    steps: tuple[SparseOp, ...]
    certificates: tuple[StepCertificate, ...]
    stage_bounds: tuple[tuple[str, int, int], ...]  # (stage, first index, last index)
    report: dict = field(repr=False)

    @property
    def max_profile(self) -> int:
        return max(c.profile.k for c in self.certificates)

    @property
    def min_sigma(self) -> float:
        return min(c.sigma_min for c in self.certificates)

    @property
    def max_jump(self) -> float:
        return max(c.jump for c in self.certificates)


# -- selection ---------------------------------------------------------------


def select_basis_vectors(g: SparseOp, count: int) -> Selection:
    """Greedy smallest-admissible scan for the selection stage.

    A candidate alpha must avoid every index used so far (previous alphas,
    betas, and image supports), and its image support must do the same;
    the partner beta is then the smallest untouched index.  Raises
    :class:`WindowTooSmallError` when the window is exhausted first, which
    is expected once ``count * k**2`` approaches the window.
    """
    if count < 1:
        raise ValueError("count must be positive")
    w = g.window
    blocked: set[int] = set()
    alphas: list[int] = []
    betas: list[int] = []
    for _ in range(count):
        alpha = None
        for m in range(1, w + 1):
            if m in blocked:
                continue
            supp = g.col_support(m)
            if not supp:
                raise ValueError(f"column {m} of g is zero; g is not invertible")
            if any(r in blocked for r in supp):
                continue
            alpha = m
            break
        if alpha is None:
            raise WindowTooSmallError(
                f"window {w} exhausted after {len(alphas)} of {count} selections"
            )
        supp = set(g.col_support(alpha))
        beta = None
        for b in range(1, w + 1):
            if b == alpha or b in blocked or b in supp:
                continue
            beta = b
            break
        if beta is None:
            raise WindowTooSmallError("no admissible partner index left")
        alphas.append(alpha)
        betas.append(beta)
        blocked |= {alpha, beta}
        blocked |= supp
    sel = Selection(tuple(alphas), tuple(betas))
    verify_selection(g, sel)
    return sel


def verify_selection(g: SparseOp, sel: Selection) -> None:
    """Explicit admissibility checks; raises on any violation.

    For every i: beta_i is orthogonal to alpha_i, to g(alpha_i) and to all
    earlier spans; alpha_i and g(alpha_i) are orthogonal to all earlier
    spans; image supports are pairwise disjoint.
    """
    spans: list[set[int]] = []
    for i, (a, b) in enumerate(zip(sel.alpha, sel.beta)):
        supp = set(g.col_support(a))
        span_i = supp | {a, b}
        if b == a or b in supp:
            raise MatfiniteError(f"partner {b} not orthogonal at selection {i}")
        for l, span_l in enumerate(spans):
            if a in span_l or b in span_l or (supp & span_l):
                raise MatfiniteError(
                    f"selection {i} collides with span {l}: not admissible"
                )
        spans.append(span_i)


# -- certification machinery ---------------------------------------------------


def _dense_profile(arr: np.ndarray) -> SparsityProfile:
    nz = arr != 0
    row_max = int(np.max(np.count_nonzero(nz, axis=1), initial=0))
    col_max = int(np.max(np.count_nonzero(nz, axis=0), initial=0))
    return SparsityProfile(row_max, col_max)


class _Recorder:
    """Accumulates certified steps; keeps dense mirrors only transiently."""

    def __init__(self, store_all: bool):
        self.store_all = store_all
        self.steps: list[SparseOp] = []
        self.certs: list[StepCertificate] = []
        self.bounds: list[tuple[str, int, int]] = []
        self.prev_sigma_max: float | None = None
        self.last_dense: np.ndarray | None = None

    def record(self, dense: np.ndarray, stage: str, jump_abs: float, keep: bool) -> StepCertificate:
        vals = np.linalg.svd(dense, compute_uv=False)
        sigma_max = float(vals[0])
        sigma_min = float(vals[-1])
        jump = 0.0 if self.prev_sigma_max is None else jump_abs / self.prev_sigma_max
        cert = StepCertificate(
            index=len(self.certs),
            stage=stage,
            sigma_min=sigma_min,
            sigma_max=sigma_max,
            profile=_dense_profile(dense),
            jump=jump,
        )
        self.certs.append(cert)
        if self.store_all or keep:
            self.steps.append(SparseOp.from_dense(dense))
        else:
            self.steps.append(None)  # placeholder, stripped later
        self.prev_sigma_max = sigma_max
        self.last_dense = dense
        return cert

    def run_stage(
        self,
        stage: str,
        builder: Callable[[int], tuple[list[np.ndarray], list[float]]],
        config: KuiperConfig,
    ) -> None:
        """Build a stage at the configured resolution, refining on failure."""
        t = config.steps
        base_state = (len(self.certs), len(self.steps), self.prev_sigma_max, self.last_dense)
        for attempt in range(config.max_retries + 1):
            denses, jumps = builder(t)
            start = len(self.certs)
            ok = True
            for pos, (d, j) in enumerate(zip(denses, jumps)):
                keep = pos == len(denses) - 1
                cert = self.record(d, stage, j, keep)
                if cert.sigma_min < config.sigma_floor or cert.jump > config.max_jump:
                    ok = False
                    break
            if ok:
                self.bounds.append((stage, start, len(self.certs) - 1))
                return
            # roll back and refine
            nc, ns, ps, ld = base_state
            del self.certs[nc:]
            del self.steps[ns:]
            self.prev_sigma_max = ps
            self.last_dense = ld
            t *= 2
        raise MatfiniteError(
            f"stage {stage!r} failed certification after {config.max_retries} refinements"
        )


# -- stage builders (dense internals) -----------------------------------------


def _plane_rotation_matrix(
    window: int, planes: Sequence[tuple[np.ndarray, int]], cos_t: float, sin_t: float
) -> np.ndarray:
    """Unitary rotating each plane span(w, e_b) by the same angle.

    ``w`` must be unit length with w[b] = 0; planes must have pairwise
    disjoint supports.
    """
    u = np.eye(window, dtype=np.complex128)
    for w, b0 in planes:
        idx = np.nonzero(w)[0].tolist()
        if b0 not in idx:
            idx = idx + [b0]
        idx = np.asarray(sorted(idx))
        wv = w[idx]
        ev = np.zeros(len(idx), dtype=np.complex128)
        ev[np.nonzero(idx == b0)[0][0]] = 1.0
        blk = (
            (cos_t - 1.0) * (np.outer(wv, wv.conj()) + np.outer(ev, ev.conj()))
            + sin_t * (np.outer(ev, wv.conj()) - np.outer(wv, ev.conj()))
        )
        u[np.ix_(idx, idx)] += blk
    return u


def _trig(s: float) -> tuple[float, float]:
    """cos/sin of (pi/2) s with exact endpoint snapping."""
    if s == 0.0:
        return 1.0, 0.0
    if s == 1.0:
        return 0.0, 1.0
    return math.cos(0.5 * math.pi * s), math.sin(0.5 * math.pi * s)


def _rotation_builder(
    base: np.ndarray, planes: Sequence[tuple[np.ndarray, int]]
) -> Callable[[int], tuple[list[np.ndarray], list[float]]]:
    def build(t: int):
        denses, jumps = [], []
        # |rotation(delta) - 1| = 2 sin(pi delta / 4): spectral, exact
        jump_abs_factor = 2.0 * math.sin(math.pi / (4.0 * t))
        sig_base = float(np.linalg.norm(base, 2))
        for j in range(1, t + 1):
            c, s = _trig(j / t)
            u = _plane_rotation_matrix(base.shape[0], planes, c, s)
            denses.append(u @ base)
            jumps.append(jump_abs_factor * sig_base)
        return denses, jumps

    return build


def _normalize_builder(
    base: np.ndarray, alpha0: Sequence[int]
) -> Callable[[int], tuple[list[np.ndarray], list[float]]]:
    cols = [base[:, a].copy() for a in alpha0]
    norms = [float(np.linalg.norm(c)) for c in cols]

    def build(t: int):
        denses, jumps = [], []
        prev_factors = [1.0] * len(alpha0)
        for j in range(1, t + 1):
            tau = j / t
            cur = base.copy()
            factors = []
            for c_i in norms:
                nu = ((1.0 - tau) * c_i + tau) / c_i
                factors.append(nu)
            for a, col, nu in zip(alpha0, cols, factors):
                cur[:, a] = col * nu
            # columns have pairwise disjoint supports: the 2-norm of the
            # difference is the largest per-column change, exactly
            jump_abs = max(
                abs(nu - pnu) * nrm
                for nu, pnu, nrm in zip(factors, prev_factors, norms)
            )
            prev_factors = factors
            denses.append(cur)
            jumps.append(jump_abs)
        return denses, jumps

    return build


def _compress_builder(
    base: np.ndarray, alpha0: Sequence[int]
) -> Callable[[int], tuple[list[np.ndarray], list[float]]]:
    target = base.copy()
    target[list(alpha0), :] = 0.0
    target[:, list(alpha0)] = 0.0
    for a in alpha0:
        target[a, a] = 1.0
    direction = target - base
    dir_norm = float(np.linalg.norm(direction, 2))

    def build(t: int):
        denses, jumps = [], []
        for j in range(1, t + 1):
            tau = j / t
            cur = target if j == t else base + tau * direction
            denses.append(cur)
            jumps.append(dir_norm / t)
        return denses, jumps

    return build


def _embed_block_dense(window: int, rest0: Sequence[int], block: np.ndarray) -> np.ndarray:
    out = np.eye(window, dtype=np.complex128)
    out[np.ix_(rest0, rest0)] = block
    return out


def _polar_builder(
    window: int, rest0: Sequence[int], svd_u, svd_s, svd_vh
) -> Callable[[int], tuple[list[np.ndarray], list[float]]]:
    log_s = np.log(svd_s)

    def build(t: int):
        denses, jumps = [], []
        prev_s = svd_s
        for j in range(1, t + 1):
            tt = j / t
            cur_s = np.ones_like(svd_s) if j == t else np.exp((1.0 - tt) * log_s)
            block = (svd_u * cur_s) @ svd_vh
            denses.append(_embed_block_dense(window, rest0, block))
            jumps.append(float(np.max(np.abs(cur_s - prev_s))))
            prev_s = cur_s
        return denses, jumps

    return build


def _unitary_eig(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spectral decomposition of a unitary with a guaranteed-unitary basis.

    Splits q into the commuting Hermitian pair (q + q*)/2 and
    (q - q*)/(2i), diagonalizes the first with the Hermitian solver (whose
    basis is orthonormal by construction) and the second inside each
    eigenvalue cluster.  Avoids the general eigensolver, which does not
    orthogonalize degenerate clusters.  Returns the eigenvalue angles in
    (-pi, pi] and the joint unitary eigenbasis.
    """
    n = q.shape[0]
    h_re = (q + q.conj().T) / 2.0
    h_im = (q - q.conj().T) / 2j
    vals_re, basis = np.linalg.eigh(h_re)
    vals_im = np.empty(n)
    i = 0
    while i < n:
        j = i + 1
        while j < n and vals_re[j] - vals_re[i] < 1e-6:
            j += 1
        sub = basis[:, i:j]
        m = sub.conj().T @ h_im @ sub
        m = (m + m.conj().T) / 2.0
        w2, w2v = np.linalg.eigh(m)
        basis[:, i:j] = sub @ w2v
        vals_im[i:j] = w2
        i = j
    theta = np.arctan2(vals_im, vals_re)
    recon = (basis * np.exp(1j * theta)) @ basis.conj().T
    defect = float(np.linalg.norm(recon - q, 2))
    if defect > 1e-8:
        raise MatfiniteError(f"unitary spectral factorization defect {defect:.3e}")
    return np.exp(1j * theta), basis


def _spectral_builder(
    window: int, rest0: Sequence[int], theta: np.ndarray, v: np.ndarray
) -> Callable[[int], tuple[list[np.ndarray], list[float]]]:
    def build(t: int):
        denses, jumps = [], []
        dmax = float(np.max(np.abs(theta), initial=0.0))
        jump_abs = 2.0 * math.sin(min(dmax / (2.0 * t), math.pi / 2))
        for j in range(1, t + 1):
            tt = j / t
            if j == t:
                denses.append(np.eye(window, dtype=np.complex128))
                # final snap distance: basis defect only
                block = (v * np.exp(1j * theta * 0.0)) @ v.conj().T
                snap = float(np.linalg.norm(block - np.eye(len(theta)), 2))
                jumps.append(jump_abs + snap)
            else:
                block = (v * np.exp(1j * theta * (1.0 - tt))) @ v.conj().T
                denses.append(_embed_block_dense(window, rest0, block))
                jumps.append(jump_abs)
        return denses, jumps

    return build


# -- public stage wrappers -----------------------------------------------------


def _segment_from(recorder: _Recorder, stage: str) -> PathSegment:
    lo, hi = next((s, e) for st, s, e in recorder.bounds if st == stage)
    return PathSegment(
        stage=stage,
        steps=tuple(recorder.steps[lo : hi + 1]),
        certificates=tuple(recorder.certs[lo : hi + 1]),
    )


def rotation_stage(
    g: SparseOp, selection: Selection, config: KuiperConfig | None = None
) -> tuple[PathSegment, PathSegment]:
    """The two simultaneous-rotation homotopies, certified per step."""
    config = config or KuiperConfig()
    rec = _Recorder(store_all=True)
    dense = g.to_dense()
    rec.record(dense, "select", 0.0, keep=True)
    rec.bounds.clear()
    _run_rotations(rec, dense, selection, config)
    return _segment_from(rec, "rotate1"), _segment_from(rec, "rotate2")


def _run_rotations(
    rec: _Recorder, dense: np.ndarray, sel: Selection, config: KuiperConfig
) -> None:
    w = dense.shape[0]
    planes1 = []
    for a, b in zip(sel.alpha, sel.beta):
        col = dense[:, a - 1]
        nrm = np.linalg.norm(col)
        if nrm == 0:
            raise ValueError("zero image column; input not invertible")
        planes1.append((col / nrm, b - 1))
    rec.run_stage("rotate1", _rotation_builder(dense, planes1), config)
    mid = rec.last_dense
    planes2 = []
    for a, b in zip(sel.alpha, sel.beta):
        wvec = np.zeros(w, dtype=np.complex128)
        wvec[b - 1] = 1.0
        planes2.append((wvec, a - 1))
    rec.run_stage("rotate2", _rotation_builder(mid, planes2), config)


def normalize_and_compress(
    rotated_end: SparseOp, selection: Selection, config: KuiperConfig | None = None
) -> PathSegment:
    """Column rescale to unit followed by the corner switch-off.

    Both halves carry the ``compress`` label; the tracked profile never
    increases along them.
    """
    config = config or KuiperConfig()
    rec = _Recorder(store_all=True)
    dense = rotated_end.to_dense()
    rec.record(dense, "rotate2", 0.0, keep=True)
    rec.bounds.clear()
    _run_compress(rec, dense, selection, config)
    lo = min(s for st, s, e in rec.bounds if st == "compress")
    hi = max(e for st, s, e in rec.bounds if st == "compress")
    return PathSegment(
        stage="compress",
        steps=tuple(rec.steps[lo : hi + 1]),
        certificates=tuple(rec.certs[lo : hi + 1]),
    )


def _run_compress(
    rec: _Recorder, dense: np.ndarray, sel: Selection, config: KuiperConfig
) -> None:
    alpha0 = [a - 1 for a in sel.alpha]
    rec.run_stage("compress", _normalize_builder(dense, alpha0), config)
    rec.run_stage("compress", _compress_builder(rec.last_dense, alpha0), config)


def whitehead_stage(
    f4: SparseOp, selection: Selection, config: KuiperConfig | None = None
) -> tuple[PathSegment, dict]:
    """Contract the residual block on the non-selected coordinates.

    Requires ``f4`` to act as the identity on the selected span (within
    1e-10).  Returns the certified segment and a report with the measured
    profiles of the block and its numerical inverse, the product defect,
    and the round-robin slicing of the selected span (which stays pointwise
    fixed: at a finite window no slice can match the complement's
    dimension, so the two-block cancellation has no room to act and the
    polar route is used instead).
    """
    config = config or KuiperConfig()
    rec = _Recorder(store_all=True)
    dense = f4.to_dense()
    rec.record(dense, "compress", 0.0, keep=True)
    rec.bounds.clear()
    report = _run_whitehead(rec, dense, selection, config)
    lo = min(s for st, s, e in rec.bounds if st == "whitehead")
    hi = max(e for st, s, e in rec.bounds if st == "whitehead")
    seg = PathSegment(
        stage="whitehead",
        steps=tuple(rec.steps[lo : hi + 1]),
        certificates=tuple(rec.certs[lo : hi + 1]),
    )
    return seg, report


def _run_whitehead(
    rec: _Recorder, dense: np.ndarray, sel: Selection, config: KuiperConfig
) -> dict:
    w = dense.shape[0]
    alpha0 = [a - 1 for a in sel.alpha]
    rest0 = sorted(set(range(w)) - set(alpha0))
    # identity on the selected span, else the compression stage is incomplete
    sel_cols = dense[:, alpha0]
    ident_cols = np.zeros_like(sel_cols)
    for pos, a in enumerate(alpha0):
        ident_cols[a, pos] = 1.0
    sel_rows = dense[alpha0, :][:, rest0]
    defect = max(
        float(np.max(np.abs(sel_cols - ident_cols), initial=0.0)),
        float(np.max(np.abs(sel_rows), initial=0.0)),
    )
    if defect > 1e-10:
        raise MatfiniteError(f"input is not identity on the selected span ({defect:.3e})")
    u_block = dense[np.ix_(rest0, rest0)]
    d = len(rest0)
    u_inv = np.linalg.inv(u_block)
    inv_defect = float(np.linalg.norm(u_block @ u_inv - np.eye(d), 2))
    if inv_defect > 1e-8:
        raise MatfiniteError(f"residual block inverse defect {inv_defect:.3e}")
    u_prof = _dense_profile(u_block)
    uinv_prof = _dense_profile(u_inv)
    svd_u, svd_s, svd_vh = np.linalg.svd(u_block)
    rec.run_stage("whitehead", _polar_builder(w, rest0, svd_u, svd_s, svd_vh), config)
    q = svd_u @ svd_vh
    eigw, eigv = _unitary_eig(q)
    theta = np.angle(eigw)
    rec.run_stage("whitehead", _spectral_builder(w, rest0, theta, eigv), config)
    # round-robin slicing of the selected span; slices hold no block of
    # matching dimension, recorded as no-op partners
    slices = {
        "H2": [a for i, a in enumerate(sel.alpha) if i % 2 == 0],
        "H3": [a for i, a in enumerate(sel.alpha) if i % 2 == 1],
    }
    return {
        "block_dim": d,
        "u_profile": (u_prof.row_max, u_prof.col_max),
        "u_inverse_profile": (uinv_prof.row_max, uinv_prof.col_max),
        "u_inverse_defect": inv_defect,
        "block_sigma_min": float(svd_s[-1]),
        "block_sigma_max": float(svd_s[0]),
        "slices": slices,
        "slice_action": "identity (no equal-dimension partner at this window)",
    }


def whitehead_pair_path(u: np.ndarray, steps: int = 64) -> list[np.ndarray]:
    """Classic two-block rotation path from diag(u, u^{-1}) to the identity.

    Returns samples of ``diag(u, 1) R(t) diag(u^{-1}, 1) R(-t)`` as t runs
    from pi/2 down to 0; the first sample is diag(u, u^{-1}) and the last
    is the identity up to the inversion defect.  Every factor is a plane
    rotation or a block diagonal, so each row and column of a sample holds
    at most twice the entries of the corresponding row of u plus two.
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("u must be square")
    d = u.shape[0]
    uinv = np.linalg.inv(u)
    eye = np.eye(d, dtype=np.complex128)
    du = np.block([[u, np.zeros((d, d))], [np.zeros((d, d)), eye]])
    duinv = np.block([[uinv, np.zeros((d, d))], [np.zeros((d, d)), eye]])

    def rot(t: float) -> np.ndarray:
        c, s = math.cos(t), math.sin(t)
        return np.block([[c * eye, -s * eye], [s * eye, c * eye]])

    out = []
    for j in range(steps + 1):
        t = (math.pi / 2.0) * (1.0 - j / steps)
        out.append(du @ rot(t) @ duinv @ rot(-t))
    return out


def profile_budget(k: int, block_dim: int) -> int:
    """Composed per-step profile bound along the whole path.

    Rotation planes touch at most k+1 coordinates each, so rotated and
    compressed steps stay within k(k+1) (doubled for slack); the residual
    legs live on the block plus the fixed diagonal, so the block dimension
    bounds them outright.  Monotone in both arguments.  The pair-rotation
    figure ``2 * max(profile(u), profile(u^{-1})) + 2`` applies to
    :func:`whitehead_pair_path` and is reported separately.
    """
    return max(2 * k * (k + 1), block_dim)


def contract(g: SparseOp, config: KuiperConfig | None = None) -> HomotopyPath:
    """Full certified path from ``g`` to the identity.

    Preconditions: ``sigma_min(g) > 1e-6`` (checked densely) and enough
    window for the configured selection count.  The returned path starts at
    ``g`` exactly, ends at the identity within ``config.endpoint_tol``, and
    carries a certificate for every recorded step.  With
    ``config.store="boundaries"`` only stage-boundary operators are kept
    (certificates always cover every step).
    """
    config = config or KuiperConfig()
    w = g.window
    dense = g.to_dense()
    sigma_in = float(np.linalg.svd(dense, compute_uv=False)[-1])
    if not sigma_in > 1e-6:
        raise ValueError(f"input sigma_min {sigma_in:.3e} too small")
    sel = select_basis_vectors(g, config.count)
    rec = _Recorder(store_all=(config.store == "all"))
    rec.record(dense, "select", 0.0, keep=True)
    rec.bounds.append(("select", 0, 0))
    _run_rotations(rec, dense, sel, config)
    _run_compress(rec, rec.last_dense, sel, config)
    wh_report = _run_whitehead(rec, rec.last_dense, sel, config)
    endpoint = rec.last_dense
    endpoint_defect = float(np.linalg.norm(endpoint - np.eye(w), 2))
    if endpoint_defect > config.endpoint_tol:
        raise MatfiniteError(f"endpoint misses the identity by {endpoint_defect:.3e}")
    # stage ends (and the seed) are always kept, so boundary mode retains
    # the input, every stage boundary, and the final identity
    kept = tuple(op for op in rec.steps if op is not None)
    budget = profile_budget(g.profile.k, wh_report["block_dim"])
    report = {
        "selection": {"alpha": list(sel.alpha), "beta": list(sel.beta)},
        "input_sigma_min": sigma_in,
        "input_profile": (g.profile.row_max, g.profile.col_max),
        "endpoint_defect": endpoint_defect,
        "profile_budget": budget,
        "max_profile_observed": max(c.profile.k for c in rec.certs),
        "whitehead": wh_report,
        "store": config.store,
    }
    path = HomotopyPath(
        window=w,
        steps=kept,
        certificates=tuple(rec.certs),
        stage_bounds=tuple(rec.bounds),
        report=report,
    )
    # start-equals-input is exact by construction; assert cheaply
    if path.steps and path.steps[0] != g:
        raise MatfiniteError("first recorded step differs from the input")
    return path
