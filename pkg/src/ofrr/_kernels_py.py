"""Pure-numpy reduction kernels, bit-identical to the compiled extension.

Each kernel performs products in the compute format and index-ascending
sequential accumulation in the accumulate format.  `np.add.accumulate` with an
explicit dtype is a strictly sequential reduction, and two-operand float16 /
float32 numpy ops are correctly rounded, so the results match the compiled
per-entry loops bit for bit.
"""

from __future__ import annotations

import numpy as np

_DT = {0: np.dtype(np.float16), 1: np.dtype(np.float32), 2: np.dtype(np.float64)}

BACKEND_NAME = "python"


def dot_mixed(x: np.ndarray, y: np.ndarray, compute: int, accumulate: int) -> float:
    if x.size == 0:
        return 0.0
    cdt, adt = _DT[compute], _DT[accumulate]
    with np.errstate(over="ignore", invalid="ignore"):
        p = x.astype(cdt) * y.astype(cdt)
        acc = np.add.accumulate(p, dtype=adt)
    return float(acc[-1])


def gemm_mixed(a: np.ndarray, b: np.ndarray, compute: int, accumulate: int,
               out_fmt: int) -> np.ndarray:
    m, k = a.shape
    n = b.shape[1]
    cdt, adt, odt = _DT[compute], _DT[accumulate], _DT[out_fmt]
    ac = a.astype(cdt)
    bc = b.astype(cdt)
    acc = np.zeros((m, n), dtype=adt, order="F")
    with np.errstate(over="ignore", invalid="ignore"):
        for l in range(k):
            p = ac[:, l, None] * bc[None, l, :]
            acc += p
        out = acc.astype(odt, copy=False).astype(np.float64)
    return np.asfortranarray(out)


def spmv_mixed(row_ptr: np.ndarray, col_idx: np.ndarray, values: np.ndarray,
               x: np.ndarray, compute: int, accumulate: int) -> np.ndarray:
    n = row_ptr.shape[0] - 1
    cdt, adt = _DT[compute], _DT[accumulate]
    vc = values.astype(cdt)
    xc = x.astype(cdt)
    y = np.empty(n, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            lo, hi = row_ptr[i], row_ptr[i + 1]
            if lo == hi:
                y[i] = 0.0
                continue
            p = vc[lo:hi] * xc[col_idx[lo:hi]]
            y[i] = float(np.add.accumulate(p, dtype=adt)[-1])
    return y


def jacobi_eig(a: np.ndarray, max_sweeps: int, tol: float):
    """Cyclic Jacobi eigendecomposition of a symmetric float64 matrix.

    Rotates (p, q) pairs row-by-row until the off-diagonal Frobenius norm
    drops below ``tol`` (absolute).  Returns (eigvals, eigvecs, sweeps,
    off_norm); the caller checks convergence.
    """
    a = np.array(a, dtype=np.float64, order="C")
    n = a.shape[0]
    v = np.eye(n)
    off = _off_norm(a)
    sweeps = 0
    while off > tol and sweeps < max_sweeps:
        # small rotations are skipped; threshold tightens as the sweep count grows
        skip = off / (n * n)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                app, aqq = a[p, p], a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = (1.0 if theta >= 0.0 else -1.0) / (
                    abs(theta) + np.sqrt(theta * theta + 1.0)
                )
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        off = _off_norm(a)
        sweeps += 1
    return np.diag(a).copy(), v, sweeps, off


def _off_norm(a: np.ndarray) -> float:
    d = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(d * d)))
