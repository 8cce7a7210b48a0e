"""Rayleigh-Ritz projections: classical and orthogonalization-free, for both
eigenproblems and the SVD, plus FP64 residual diagnostics.

The projected matrices are formed with mixed-precision GEMMs following the
pipeline rule: half-precision bases project through FP32 compute/accumulate
into FP32, wider pipelines project in their own precision; the small solve is
always FP64.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .matrix import DenseMatrix, apply_dense, to_dense_f64
from .precision import FULL_F32, FULL_F64, FpFormat, PrecisionPolicy, mixed_gemm
from .smallsolve import small_svd, sym_def_gen_eig, sym_eig

POSITIVE_EIG_TOL = 1e-8  # relative cutoff separating +sigma from the zero cluster


class OverflowDiagnostic(RuntimeError):
    """A projected matrix picked up non-finite entries."""


class EmptyPencilError(RuntimeError):
    """The mass matrix retained no eigenvalues above the nullspace cutoff."""


@dataclass(frozen=True)
class RitzSet:
    values: np.ndarray  # FP64, descending
    vectors: DenseMatrix  # FP64, one column per value
    kind: str  # "eig" | "svd"
    right_vectors: Optional[DenseMatrix] = None
    residuals: Optional[np.ndarray] = None
    diagnostics: str = ""


def projection_policy(policy: PrecisionPolicy) -> tuple[PrecisionPolicy, FpFormat]:
    """(gemm policy, output format) for forming the projected matrices."""
    if policy.storage == FpFormat.F64:
        return FULL_F64, FpFormat.F64
    if policy.storage == FpFormat.F32:
        # F32 inputs promote one level: FP64 compute/accumulate, and the
        # projected matrices are stored in FP64 directly for the FP64 solve.
        proj = PrecisionPolicy(policy.storage, FpFormat.F64, FpFormat.F64)
        return proj, FpFormat.F64
    # F16 inputs project through FP32 compute/accumulate into FP32 storage.
    proj = PrecisionPolicy(policy.storage, FpFormat.F32, FpFormat.F32)
    return proj, FpFormat.F32


def _project(u: np.ndarray, w: np.ndarray, policy: PrecisionPolicy) -> np.ndarray:
    proj, out_fmt = projection_policy(policy)
    b = mixed_gemm(u.T, w, proj, out_fmt)
    if not np.all(np.isfinite(b)):
        raise OverflowDiagnostic("non-finite entries in projected matrix")
    return b


def rr_eig(a, q: DenseMatrix, policy: PrecisionPolicy) -> RitzSet:
    """Classical Rayleigh-Ritz: eigendecompose Q'AQ (Q intended-orthonormal,
    deliberately unchecked) and map the vectors back in FP64."""
    w = apply_dense(a, q.data, policy)
    b = _project(q.data, w, policy)
    b = (b + b.T) / 2.0
    eig = sym_eig(b)
    u = q.data @ eig.vectors
    return RitzSet(eig.values, DenseMatrix(u, FpFormat.F64), "eig")


def ofrr_eig(a, u: DenseMatrix, policy: PrecisionPolicy) -> RitzSet:
    """Orthogonalization-free Rayleigh-Ritz: solve the pencil
    (U'AU, U'U) so any linearly independent basis is acceptable."""
    w = apply_dense(a, u.data, policy)
    b = _project(u.data, w, policy)
    m = _project(u.data, u.data, policy)
    b = (b + b.T) / 2.0
    m = (m + m.T) / 2.0
    eig = sym_def_gen_eig(b, m)
    if eig.values.size == 0:
        raise EmptyPencilError("mass matrix retained no eigenvalues")
    ut = u.data @ eig.vectors
    return RitzSet(eig.values, DenseMatrix(ut, FpFormat.F64), "eig")


def rr_svd(a, u: DenseMatrix, v: DenseMatrix, policy: PrecisionPolicy) -> RitzSet:
    """Classical two-sided Rayleigh-Ritz for the SVD: SVD of U'AV."""
    w = apply_dense(a, v.data, policy)
    b = _project(u.data, w, policy)
    z, sig, wv = small_svd(b)
    return RitzSet(sig, DenseMatrix(u.data @ z, FpFormat.F64), "svd",
                   right_vectors=DenseMatrix(v.data @ wv, FpFormat.F64))


def ofrr_svd(a, u: DenseMatrix, v: DenseMatrix, policy: PrecisionPolicy) -> RitzSet:
    """Orthogonalization-free Rayleigh-Ritz for the SVD.

    Assembles the block pencil [[0, U'AV], [(U'AV)', 0]] against
    diag(U'U, V'V); the eigenvalues above POSITIVE_EIG_TOL of the largest are
    the singular values, and sqrt(2)-scaled eigenvector blocks give
    orthonormal singular vectors.
    """
    k1, k2 = u.cols, v.cols
    w = apply_dense(a, v.data, policy)
    g = _project(u.data, w, policy)
    mu = _project(u.data, u.data, policy)
    mv = _project(v.data, v.data, policy)
    bmat = np.zeros((k1 + k2, k1 + k2))
    bmat[:k1, k1:] = g
    bmat[k1:, :k1] = g.T
    mmat = np.zeros((k1 + k2, k1 + k2))
    mmat[:k1, :k1] = (mu + mu.T) / 2.0
    mmat[k1:, k1:] = (mv + mv.T) / 2.0
    eig = sym_def_gen_eig(bmat, mmat)
    if eig.values.size == 0:
        raise EmptyPencilError("mass matrix retained no eigenvalues")
    smax = float(np.max(eig.values)) if eig.values.size else 0.0
    pos = eig.values > POSITIVE_EIG_TOL * smax if smax > 0 else eig.values > 0
    sig = eig.values[pos]
    y = eig.vectors[:k1, pos]
    z = eig.vectors[k1:, pos]
    diag = ""
    if sig.size < min(k1, k2):
        diag = f"{sig.size} positive eigenvalues (pencil admits {min(k1, k2)})"
    ut = np.sqrt(2.0) * (u.data @ y)
    vt = np.sqrt(2.0) * (v.data @ z)
    return RitzSet(sig, DenseMatrix(ut, FpFormat.F64), "svd",
                   right_vectors=DenseMatrix(vt, FpFormat.F64),
                   diagnostics=diag)


def residual_report(a, rs: RitzSet) -> RitzSet:
    """Fill FP64 relative residual norms from the promoted operator."""
    ad = to_dense_f64(a)
    vals = rs.values
    res = np.empty_like(vals)
    if rs.kind == "eig":
        vv = rs.vectors.data
        for i, lam in enumerate(vals):
            if lam == 0.0:
                res[i] = np.inf
                continue
            res[i] = np.linalg.norm(ad @ vv[:, i] - lam * vv[:, i]) / abs(lam)
    else:
        uu = rs.vectors.data
        vv = rs.right_vectors.data
        for i, sig in enumerate(vals):
            if sig == 0.0:
                res[i] = np.inf
                continue
            r1 = np.linalg.norm(ad @ vv[:, i] - sig * uu[:, i])
            r2 = np.linalg.norm(ad.T @ uu[:, i] - sig * vv[:, i])
            res[i] = max(r1, r2) / sig
    return replace(rs, residuals=res)
