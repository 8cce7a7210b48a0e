"""FP64 dense kernels for the small projected problems.

Cyclic Jacobi for the symmetric eigenproblem, whitening for the
symmetric-definite pencil, and one-sided Jacobi for the SVD.  These also
serve as the FP64 reference oracle for the large test matrices; the dense
Jacobi sweep is part of the compiled core for that reason.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend

MAX_SWEEPS = 30


class ConvergenceError(RuntimeError):
    """Jacobi iteration failed to reach its off-diagonal tolerance."""

    def __init__(self, msg: str, off_norm: float):
        super().__init__(f"{msg} (remaining off-norm {off_norm:.3e})")
        self.off_norm = off_norm


@dataclass(frozen=True)
class EigResult:
    values: np.ndarray  # FP64, descending
    vectors: np.ndarray  # FP64, one column per value


def sym_eig(s: np.ndarray) -> EigResult:
    """Full symmetric eigendecomposition via cyclic Jacobi rotations.

    The input is symmetrized as (S+S')/2 first; sweeps run until the
    off-diagonal Frobenius norm falls below 1e-14*||S||_F (max 30 sweeps).
    """
    s = np.asarray(s, dtype=np.float64)
    s = (s + s.T) / 2.0
    norm = float(np.linalg.norm(s))
    if s.shape[0] == 0:
        return EigResult(np.zeros(0), np.zeros((0, 0)))
    tol = 1e-14 * norm
    vals, vecs, _, off = backend.kernels.jacobi_eig(s, MAX_SWEEPS, tol)
    if off > tol and norm > 0.0:
        raise ConvergenceError("Jacobi eigendecomposition did not converge", off)
    return _sorted_desc(vals, vecs)


def _sorted_desc(vals: np.ndarray, vecs: np.ndarray) -> EigResult:
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    # deterministic sign: largest-magnitude entry of each vector positive
    for j in range(vecs.shape[1]):
        i = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[i, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return EigResult(vals, vecs)


def sym_def_gen_eig(b: np.ndarray, m: np.ndarray) -> EigResult:
    """Solve B y = lambda M y for symmetric B and positive semidefinite M.

    M is whitened through its own eigendecomposition; eigenvalues of M below
    k*eps*mu_max are treated as nullspace and discarded, which keeps the solve
    robust when M comes from a half-precision basis.  Returned vectors are
    M-orthonormal on the retained subspace.
    """
    b = np.asarray(b, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    k = m.shape[0]
    me = sym_eig(m)
    mu_max = me.values[0] if k else 0.0
    if k == 0 or mu_max <= 0.0:
        return EigResult(np.zeros(0), np.zeros((k, 0)))
    keep = me.values > k * np.finfo(np.float64).eps * mu_max
    p = me.vectors[:, keep]
    d = me.values[keep]
    if p.shape[1] == 0:
        return EigResult(np.zeros(0), np.zeros((k, 0)))
    dis = 1.0 / np.sqrt(d)
    t = (dis[:, None] * (p.T @ b @ p)) * dis[None, :]
    te = sym_eig(t)
    y = p @ (dis[:, None] * te.vectors)
    return _sorted_desc(te.values, y)


def small_svd(c: np.ndarray):
    """One-sided Jacobi SVD: returns (U, sigma, V) with sigma descending.

    Column pairs are rotated until all inner products fall below
    1e-14 * product of the column norms.  Zero singular directions get
    orthonormal completion columns in U so that U stays orthonormal.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError("small_svd expects a matrix")
    m, n = c.shape
    if m < n:
        v, sig, u = small_svd(c.T)
        return u, sig, v
    w = np.array(c, dtype=np.float64, order="F")
    v = np.eye(n)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if scale == 0.0:
        return _complete_orthonormal(np.zeros((m, n)), np.zeros(n)), \
            np.zeros(n), v
    for sweep in range(MAX_SWEEPS):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                ci = w[:, i]
                cj = w[:, j]
                d = float(ci @ cj)
                a = float(ci @ ci)
                b = float(cj @ cj)
                if abs(d) <= 1e-14 * np.sqrt(a * b) or a == 0.0 or b == 0.0:
                    continue
                rotated = True
                zeta = (b - a) / (2.0 * d)
                t = (1.0 if zeta >= 0.0 else -1.0) / (
                    abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = cs * t
                wi = ci.copy()
                w[:, i] = cs * wi - sn * cj
                w[:, j] = sn * wi + cs * cj
                vi = v[:, i].copy()
                v[:, i] = cs * vi - sn * v[:, j]
                v[:, j] = sn * vi + cs * v[:, j]
        if not rotated:
            break
    else:
        off = _max_pair_cos(w)
        raise ConvergenceError("one-sided Jacobi SVD did not converge", off)
    sig = np.sqrt(np.sum(w * w, axis=0))
    order = np.argsort(-sig, kind="stable")
    sig = sig[order]
    w = w[:, order]
    v = v[:, order]
    tiny = sig <= 1e-15 * (sig[0] if sig.size else 0.0)
    u = np.zeros((m, n), order="F")
    nz = ~tiny
    u[:, nz] = w[:, nz] / sig[nz]
    u = _complete_orthonormal(u, sig)
    # deterministic sign convention tied to U
    for j in range(n):
        i = int(np.argmax(np.abs(u[:, j])))
        if u[i, j] < 0:
            u[:, j] = -u[:, j]
            v[:, j] = -v[:, j]
    sig = np.where(tiny, 0.0, sig)
    return u, sig, v


def _max_pair_cos(w: np.ndarray) -> float:
    g = w.T @ w
    nrm = np.sqrt(np.diag(g))
    denom = np.outer(nrm, nrm)
    denom[denom == 0] = 1.0
    g = np.abs(g / denom)
    np.fill_diagonal(g, 0.0)
    return float(np.max(g)) if g.size else 0.0


def _complete_orthonormal(u: np.ndarray, sig: np.ndarray) -> np.ndarray:
    """Fill zero columns of u with vectors orthogonal to the others."""
    m, n = u.shape
    for j in range(n):
        if np.any(u[:, j]):
            continue
        for cand in range(m):
            e = np.zeros(m)
            e[cand] = 1.0
            for i in range(n):
                if i != j and np.any(u[:, i]):
                    e -= (u[:, i] @ e) * u[:, i]
            nrm = np.linalg.norm(e)
            if nrm > 0.5:
                u[:, j] = e / nrm
                break
    return u


def cond2(x: np.ndarray) -> float:
    """Ratio of extreme singular values of the FP64-promoted matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cond2 of empty matrix")
    _, sig, _ = small_svd(x)
    if sig[-1] == 0.0:
        return float("inf")
    return float(sig[0] / sig[-1])
