"""Linearly-independent-basis builders.

Gram-Schmidt variants and the pivot-scaled Hessenberg process for blocks,
plus the Krylov builders (Arnoldi with MGS, and the Hessenberg recurrence
against coordinate vectors).  Every builder reports which input columns were
kept and, for the Hessenberg family, the pivot rows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .matrix import DenseMatrix
from .precision import PrecisionPolicy, axpy, mixed_dot, round_to, safe_norm2

REORTH_THRESHOLD = np.sqrt(2.0) / 2.0


class BasisMethod(enum.Enum):
    MGS_LEFT = "mgs-l"
    MGS_RIGHT = "mgs-r"
    CGS = "cgs"
    CGS2 = "cgs2"
    HESS_LEFT = "hess-l"
    HESS_RIGHT = "hess-r"
    ARNOLDI_MGS = "arnoldi-mgs"
    KRYLOV_HESS = "krylov-hess"


GRAM_SCHMIDT_METHODS = {
    BasisMethod.MGS_LEFT, BasisMethod.MGS_RIGHT, BasisMethod.CGS,
    BasisMethod.CGS2,
}
HESSENBERG_METHODS = {BasisMethod.HESS_LEFT, BasisMethod.HESS_RIGHT}


class EmptyBasisError(RuntimeError):
    """Every candidate column was dropped."""


@dataclass(frozen=True)
class BasisFactorization:
    q: DenseMatrix  # kept columns only
    pivots: np.ndarray  # pivot rows (Hessenberg family), else empty
    kept: np.ndarray  # bool mask over input columns / requested steps
    method: BasisMethod
    policy: PrecisionPolicy


def build_basis(x: DenseMatrix, method: BasisMethod,
                policy: PrecisionPolicy) -> BasisFactorization:
    """Dispatch for the block builders (Gram-Schmidt or Hessenberg)."""
    if method in GRAM_SCHMIDT_METHODS:
        return orthonormalize(x, method, policy)
    if method in HESSENBERG_METHODS:
        return hessenberg_basis(
            x, "left" if method is BasisMethod.HESS_LEFT else "right", policy)
    raise ValueError(f"{method} is not a block basis method")


def orthonormalize(x: DenseMatrix, method: BasisMethod,
                   policy: PrecisionPolicy, reorth: bool = True
                   ) -> BasisFactorization:
    """Gram-Schmidt family under an explicit precision policy.

    Columns whose post-projection norm falls below
    drop_tol * (pre-projection norm) are dropped.  MGS_LEFT re-orthogonalizes
    a column once (when ``reorth``) if its norm shrank below sqrt(2)/2 of the
    pre-projection value; CGS2 always runs the projection sweep twice.
    """
    if method not in GRAM_SCHMIDT_METHODS:
        raise ValueError(f"{method} is not a Gram-Schmidt method")
    if x.cols == 0:
        raise EmptyBasisError("no input columns")
    if method is BasisMethod.MGS_RIGHT:
        return _mgs_right(x, policy)
    a = x.data
    n, k = a.shape
    kept = np.zeros(k, dtype=bool)
    cols = []
    for j in range(k):
        v = a[:, j].copy()
        pre = safe_norm2(v, policy)
        if method is BasisMethod.MGS_LEFT:
            v, nrm = _mgs_project(v, cols, policy)
            if reorth and nrm < REORTH_THRESHOLD * pre:
                v, nrm = _mgs_project(v, cols, policy)
        else:  # CGS / CGS2
            v = _cgs_project(v, cols, policy)
            nrm = safe_norm2(v, policy)
            if method is BasisMethod.CGS2:
                n1 = nrm
                v = _cgs_project(v, cols, policy)
                nrm = safe_norm2(v, policy)
                # a column that keeps shrinking after the second pass is
                # numerically dependent ("twice is enough" has failed)
                if nrm < REORTH_THRESHOLD * n1:
                    continue
        if nrm < policy.drop_tol * pre or nrm == 0.0:
            continue
        kept[j] = True
        cols.append(round_to(round_to(v / nrm, policy.compute), policy.storage))
    if not cols:
        raise EmptyBasisError("all columns dropped during orthonormalization")
    q = DenseMatrix(np.column_stack(cols), policy.storage)
    return BasisFactorization(q, np.zeros(0, dtype=np.int64), kept, method, policy)


def _mgs_project(v, cols, policy):
    for qi in cols:
        h = mixed_dot(qi, v, policy)
        v = axpy(v, h, qi, policy)
    return v, safe_norm2(v, policy)


def _cgs_project(v, cols, policy):
    coeffs = [mixed_dot(qi, v, policy) for qi in cols]
    for h, qi in zip(coeffs, cols):
        v = axpy(v, h, qi, policy)
    return v


def _mgs_right(x: DenseMatrix, policy: PrecisionPolicy) -> BasisFactorization:
    a = np.array(x.data, order="F")
    n, k = a.shape
    pre = np.array([safe_norm2(a[:, j], policy) for j in range(k)])
    kept = np.zeros(k, dtype=bool)
    cols = []
    for j in range(k):
        v = a[:, j]
        nrm = safe_norm2(v, policy)
        if nrm < policy.drop_tol * pre[j] or nrm == 0.0:
            continue
        q = round_to(round_to(v / nrm, policy.compute), policy.storage)
        kept[j] = True
        cols.append(q)
        for i in range(j + 1, k):  # one right-looking correction sweep
            h = mixed_dot(q, a[:, i], policy)
            a[:, i] = axpy(a[:, i], h, q, policy)
    if not cols:
        raise EmptyBasisError("all columns dropped during orthonormalization")
    qm = DenseMatrix(np.column_stack(cols), policy.storage)
    return BasisFactorization(qm, np.zeros(0, dtype=np.int64), kept,
                              BasisMethod.MGS_RIGHT, policy)


def hessenberg_basis(x: DenseMatrix, layout: str,
                     policy: PrecisionPolicy) -> BasisFactorization:
    """Inner-product-free basis via pivot scaling and elimination.

    For each column: pick the largest-magnitude entry among rows that have
    not served as pivot (lowest index on ties), skip the column if that pivot
    is below the drop tolerance, otherwise scale the pivot to 1 and eliminate
    that row from the remaining columns.  ``layout`` chooses whether trailing
    columns are updated immediately ("right") or lazily ("left"); both
    perform the identical update sequence per column.
    """
    if layout not in ("left", "right"):
        raise ValueError("layout must be 'left' or 'right'")
    a = np.array(x.data, order="F")
    n, k = a.shape
    if k == 0:
        raise EmptyBasisError("no input columns")
    tol = policy.drop_tol
    kept = np.zeros(k, dtype=bool)
    free = np.ones(n, dtype=bool)
    pivots = []
    cols = []
    for j in range(k):
        v = a[:, j].copy()
        if layout == "left":
            for q, r in zip(cols, pivots):
                v = axpy(v, v[r], q, policy)
        r = _pivot_row(v, free)
        if r < 0 or abs(v[r]) < tol:
            continue
        piv = v[r]
        v = round_to(round_to(v / piv, policy.compute), policy.storage)
        v[r] = 1.0
        kept[j] = True
        free[r] = False
        pivots.append(r)
        cols.append(v)
        if layout == "right":
            for i in range(j + 1, k):
                a[:, i] = axpy(a[:, i], a[r, i], v, policy)
    if not cols:
        raise EmptyBasisError("all columns skipped in Hessenberg process")
    method = BasisMethod.HESS_LEFT if layout == "left" else BasisMethod.HESS_RIGHT
    q = DenseMatrix(np.column_stack(cols), policy.storage)
    return BasisFactorization(q, np.array(pivots, dtype=np.int64), kept,
                              method, policy)


def _pivot_row(v: np.ndarray, free: np.ndarray) -> int:
    idx = np.flatnonzero(free)
    if idx.size == 0:
        return -1
    sub = np.abs(v[idx])
    return int(idx[int(np.argmax(sub))])


def arnoldi_mgs(matvec: Callable[[np.ndarray], np.ndarray], v0: np.ndarray,
                k: int, policy: PrecisionPolicy, reorth: bool = False
                ) -> BasisFactorization:
    """Arnoldi process with modified Gram-Schmidt (Lanczos with full
    orthogonalization for symmetric operators).

    Stops early (breakdown) when the post-projection norm drops below the
    drop tolerance, returning the columns built so far.
    """
    v0 = np.asarray(v0, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be >= 1")
    nrm0 = safe_norm2(v0, policy)
    if nrm0 == 0.0:
        raise ValueError("v0 must be nonzero")
    n = v0.shape[0]
    k = min(k, n)
    # rounding noise in the projection grows like sqrt(n)*eps, so the
    # breakdown test allows that factor on top of the drop tolerance
    noise = 4.0 * np.sqrt(n)
    cols = [round_to(round_to(v0 / nrm0, policy.compute), policy.storage)]
    for _ in range(k - 1):
        w = matvec(cols[-1])
        pre = safe_norm2(w, policy)
        w, nrm = _mgs_project(w, cols, policy)
        if reorth and nrm < REORTH_THRESHOLD * pre:
            w, nrm = _mgs_project(w, cols, policy)
        if nrm < policy.drop_tol * noise or nrm == 0.0:
            break
        cols.append(round_to(round_to(w / nrm, policy.compute), policy.storage))
    kept = np.zeros(k, dtype=bool)
    kept[: len(cols)] = True
    q = DenseMatrix(np.column_stack(cols), policy.storage)
    return BasisFactorization(q, np.zeros(0, dtype=np.int64), kept,
                              BasisMethod.ARNOLDI_MGS, policy)


def krylov_hessenberg(matvec: Callable[[np.ndarray], np.ndarray],
                      v0: np.ndarray, k: int, policy: PrecisionPolicy
                      ) -> BasisFactorization:
    """Krylov basis from the Hessenberg recurrence against coordinate
    vectors: step j removes components at the previous pivot rows and scales
    the new vector by its largest-magnitude entry."""
    v0 = np.asarray(v0, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be >= 1")
    if not np.any(v0):
        raise ValueError("v0 must be nonzero")
    n = v0.shape[0]
    k = min(k, n)
    r = int(np.argmax(np.abs(v0)))
    v = round_to(round_to(v0 / v0[r], policy.compute), policy.storage)
    v[r] = 1.0
    pivots = [r]
    cols = [v]
    noise = 4.0 * np.sqrt(n)
    for _ in range(k - 1):
        w = matvec(cols[-1])
        for q, rp in zip(cols, pivots):
            w = axpy(w, w[rp], q, policy)
        r = int(np.argmax(np.abs(w)))
        if abs(w[r]) < policy.drop_tol * noise:
            break
        piv = w[r]
        w = round_to(round_to(w / piv, policy.compute), policy.storage)
        w[r] = 1.0
        pivots.append(r)
        cols.append(w)
    kept = np.zeros(k, dtype=bool)
    kept[: len(cols)] = True
    q = DenseMatrix(np.column_stack(cols), policy.storage)
    return BasisFactorization(q, np.array(pivots, dtype=np.int64), kept,
                              BasisMethod.KRYLOV_HESS, policy)
