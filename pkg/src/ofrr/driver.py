"""Outer iterations: multi-step subspace iteration for eigenproblems,
restarted Krylov iteration, and alternating subspace iteration for the SVD.

Each driver couples a basis builder with a projection (classical RR or
orthogonalization-free) under a precision policy.  The MatVec can run under
its own ``matvec_policy`` so that, e.g., a half-precision multiply feeds a
double-precision stabilization step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import (
    BasisMethod,
    GRAM_SCHMIDT_METHODS,
    HESSENBERG_METHODS,
    arnoldi_mgs,
    build_basis,
    krylov_hessenberg,
)
from .matrix import CsrMatrix, DenseMatrix, apply_dense
from .precision import PrecisionPolicy, round_to, scale_columns_inf
from .projection import (
    OverflowDiagnostic,
    RitzSet,
    ofrr_eig,
    ofrr_svd,
    residual_report,
    rr_eig,
    rr_svd,
)

KRYLOV_METHODS = {BasisMethod.ARNOLDI_MGS, BasisMethod.KRYLOV_HESS}


@dataclass(frozen=True)
class IterConfig:
    k: int
    m: int = 1
    iter: int = 1
    restarts: int = 0
    basis_method: BasisMethod = BasisMethod.MGS_LEFT
    projection: str = "rr"  # "rr" | "ofrr"
    policy: PrecisionPolicy = None
    matvec_policy: Optional[PrecisionPolicy] = None  # defaults to policy
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.m < 1 or self.iter < 1 or self.restarts < 0:
            raise ValueError("k, m, iter must be >= 1 and restarts >= 0")
        if self.projection not in ("rr", "ofrr"):
            raise ValueError("projection must be 'rr' or 'ofrr'")
        if self.policy is None:
            raise ValueError("policy is required")

    @property
    def mv_policy(self) -> PrecisionPolicy:
        return self.matvec_policy or self.policy


def _op_rows(a) -> int:
    return a.n if isinstance(a, CsrMatrix) else a.rows


def _op_cols(a) -> int:
    return a.n if isinstance(a, CsrMatrix) else a.cols


def _check_finite(x: np.ndarray, stage: str) -> None:
    if not np.all(np.isfinite(x)):
        raise OverflowDiagnostic(f"non-finite entries after {stage}")


def _project_eig(a, fac, cfg: IterConfig) -> RitzSet:
    if cfg.projection == "rr":
        return rr_eig(a, fac.q, cfg.policy)
    return ofrr_eig(a, fac.q, cfg.policy)


def subspace_iter_eig(a, cfg: IterConfig) -> RitzSet:
    """Multi-step subspace iteration.

    X starts as seeded uniform(0,1) rounded to the MatVec storage format.
    Each outer iteration applies A ``cfg.iter`` times with a per-MatVec
    infinity-norm column scaling, stabilizes the block with the configured
    basis builder, projects, and restarts from the Ritz vectors.
    """
    if cfg.basis_method in KRYLOV_METHODS:
        raise ValueError("subspace iteration needs a block basis method")
    n = _op_rows(a)
    if cfg.k > n:
        raise ValueError("k exceeds the operator dimension")
    rng = np.random.default_rng(cfg.seed)
    mv = cfg.mv_policy
    x = round_to(np.asfortranarray(rng.random((n, cfg.k))), mv.storage)
    rs = None
    for _ in range(cfg.m):
        for _ in range(cfg.iter):
            x = apply_dense(a, x, mv)
            _check_finite(x, "MatVec")
            x = scale_columns_inf(x, mv)
        fac = build_basis(DenseMatrix(np.asfortranarray(x), cfg.policy.storage),
                          cfg.basis_method, cfg.policy)
        rs = _project_eig(a, fac, cfg)
        x = round_to(np.asfortranarray(rs.vectors.data), mv.storage)
        _check_finite(x, "projection")
    return residual_report(a, rs)


def krylov_eig(a, cfg: IterConfig) -> RitzSet:
    """Restarted Krylov iteration: build a width-<=k Krylov basis, project,
    and restart from the Ritz vector of the largest Ritz value."""
    if cfg.basis_method not in KRYLOV_METHODS:
        raise ValueError("krylov_eig needs arnoldi-mgs or krylov-hess")
    n = _op_rows(a)
    mv = cfg.mv_policy

    def matvec(v: np.ndarray) -> np.ndarray:
        w = apply_dense(a, v.reshape(-1, 1), mv)[:, 0]
        _check_finite(w, "MatVec")
        return w

    rng = np.random.default_rng(cfg.seed)
    v0 = round_to(rng.random(n), mv.storage)
    rs = None
    for _ in range(cfg.restarts + 1):
        if cfg.basis_method is BasisMethod.ARNOLDI_MGS:
            fac = arnoldi_mgs(matvec, v0, cfg.k, cfg.policy, reorth=True)
        else:
            fac = krylov_hessenberg(matvec, v0, cfg.k, cfg.policy)
        rs = _project_eig(a, fac, cfg)
        v0 = round_to(rs.vectors.data[:, 0], mv.storage)
        _check_finite(v0, "projection")
    return residual_report(a, rs)


def subspace_iter_svd(a, cfg: IterConfig) -> RitzSet:
    """Alternating subspace iteration for the SVD: U from A·V, then V from
    A'·U, with per-MatVec infinity-norm column scaling; both blocks are
    stabilized and projected each outer iteration."""
    if cfg.basis_method in KRYLOV_METHODS:
        raise ValueError("SVD iteration needs a block basis method")
    n1, n2 = _op_rows(a), _op_cols(a)
    if cfg.k > min(n1, n2):
        raise ValueError("k exceeds min(n1, n2)")
    rng = np.random.default_rng(cfg.seed)
    mv = cfg.mv_policy
    v = round_to(np.asfortranarray(rng.random((n2, cfg.k))), mv.storage)
    rs = None
    for _ in range(cfg.m):
        u = v
        for _ in range(cfg.iter):
            u = apply_dense(a, v, mv)
            _check_finite(u, "MatVec")
            u = scale_columns_inf(u, mv)
            v = apply_dense(a, u, mv, transpose=True)
            _check_finite(v, "MatVec")
            v = scale_columns_inf(v, mv)
        fu = build_basis(DenseMatrix(np.asfortranarray(u), cfg.policy.storage),
                         cfg.basis_method, cfg.policy)
        fv = build_basis(DenseMatrix(np.asfortranarray(v), cfg.policy.storage),
                         cfg.basis_method, cfg.policy)
        if cfg.projection == "rr":
            rs = rr_svd(a, fu.q, fv.q, cfg.policy)
        else:
            rs = ofrr_svd(a, fu.q, fv.q, cfg.policy)
        v = round_to(np.asfortranarray(rs.right_vectors.data), mv.storage)
        _check_finite(v, "projection")
    return residual_report(a, rs)
