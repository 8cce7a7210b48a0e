"""Matrix containers, Gaussian-kernel generation, and Matrix Market ingestion.

Dense data is column-major float64 carrying a storage-format tag; sparse
matrices are symmetric CSR.  Containers are immutable after construction by
convention (no mutating methods).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import backend
from .precision import FpFormat, PrecisionPolicy, mixed_gemm, round_to

RESCALE_TARGET = 64.0  # power of two: rescaling is exact in every binary format


class MatrixMarketError(ValueError):
    """Raised for malformed .mtx input; message names the offending line."""


@dataclass(frozen=True)
class DenseMatrix:
    data: np.ndarray  # 2-D float64, column-major, values representable in fmt
    fmt: FpFormat

    def __post_init__(self):
        object.__setattr__(self, "data", np.asfortranarray(self.data, dtype=np.float64))

    @classmethod
    def from_array(cls, arr, fmt: FpFormat) -> "DenseMatrix":
        return cls(round_to(np.asarray(arr, dtype=np.float64), fmt), fmt)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True)
class CsrMatrix:
    n: int
    row_ptr: np.ndarray  # int64, len n+1, nondecreasing
    col_idx: np.ndarray  # int64, values in [0, n)
    values: np.ndarray  # float64, representable in fmt
    fmt: FpFormat = FpFormat.F64

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for i in range(self.n):
            lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
            out[i, self.col_idx[lo:hi]] = self.values[lo:hi]
        return out


@dataclass(frozen=True)
class KernelConfig:
    f: float
    l: float
    s: float
    points: np.ndarray  # (n, d) float64 coordinates
    cross_points: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.l > 0:
            raise ValueError("length scale l must be positive")
        if self.s < 0:
            raise ValueError("variance s must be nonnegative")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("coordinates must be finite")
        if self.cross_points is not None and not np.all(np.isfinite(self.cross_points)):
            raise ValueError("coordinates must be finite")


def sample_uniform_square(n: int, side: float, seed: int) -> np.ndarray:
    """n i.i.d. 2-D points with coordinates uniform on [0, side] (PCG64)."""
    if n < 1:
        raise ValueError("need at least one point")
    rng = np.random.default_rng(seed)
    return rng.random((n, 2)) * side


def gaussian_kernel(cfg: KernelConfig, fmt: FpFormat) -> DenseMatrix:
    """Gaussian kernel matrix, generated in FP64 and rounded once to fmt.

    Square case: A_ij = f*(exp(-||x_i-x_j||^2/(2 l^2)) + s*delta_ij).
    Cross case (cfg.cross_points given): A_ij = f*exp(-||x_i-y_j||^2/(2 l^2)),
    with no diagonal term.
    """
    x = cfg.points
    y = cfg.cross_points if cfg.cross_points is not None else x
    d2 = np.sum(x * x, axis=1)[:, None] + np.sum(y * y, axis=1)[None, :] \
        - 2.0 * (x @ y.T)
    np.maximum(d2, 0.0, out=d2)
    a = np.exp(-d2 / (2.0 * cfg.l * cfg.l))
    if cfg.cross_points is None:
        a[np.diag_indices_from(a)] += cfg.s
    a *= cfg.f
    return DenseMatrix.from_array(a, fmt)


def read_matrix_market(path) -> CsrMatrix:
    """Read a coordinate/real/symmetric .mtx file into full symmetric CSR.

    One-based indices become zero-based, the stored triangle is mirrored, and
    duplicate entries are summed.
    """
    with open(path) as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixMarketError(f"{path}: line 1: empty file")
    head = lines[0].strip().split()
    if (
        len(head) < 5
        or head[0].lower() != "%%matrixmarket"
        or head[1].lower() != "matrix"
        or head[2].lower() != "coordinate"
    ):
        raise MatrixMarketError(f"{path}: line 1: not a coordinate Matrix Market header")
    if head[3].lower() != "real":
        raise MatrixMarketError(f"{path}: line 1: field must be 'real', got {head[3]!r}")
    if head[4].lower() != "symmetric":
        raise MatrixMarketError(
            f"{path}: line 1: symmetry must be 'symmetric', got {head[4]!r}"
        )
    k = 1
    while k < len(lines) and lines[k].lstrip().startswith("%"):
        k += 1
    if k == len(lines):
        raise MatrixMarketError(f"{path}: line {k}: missing size line")
    sizes = lines[k].split()
    try:
        nrows, ncols, nnz = (int(t) for t in sizes[:3])
    except (ValueError, IndexError):
        raise MatrixMarketError(f"{path}: line {k + 1}: malformed size line") from None
    if nrows != ncols:
        raise MatrixMarketError(f"{path}: line {k + 1}: matrix is not square")
    rows, cols, vals = [], [], []
    n_entries = 0
    for ln in range(k + 1, len(lines)):
        parts = lines[ln].split()
        if not parts:
            continue
        try:
            i, j = int(parts[0]), int(parts[1])
            v = float(parts[2])
        except (ValueError, IndexError):
            raise MatrixMarketError(f"{path}: line {ln + 1}: malformed entry") from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(f"{path}: line {ln + 1}: index out of range")
        n_entries += 1
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        if i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(v)
    if n_entries != nnz:
        raise MatrixMarketError(
            f"{path}: declared {nnz} entries, found {n_entries}")
    return _coo_to_csr(nrows, np.array(rows, dtype=np.int64),
                       np.array(cols, dtype=np.int64),
                       np.array(vals, dtype=np.float64))


def _coo_to_csr(n: int, rows: np.ndarray, cols: np.ndarray,
                vals: np.ndarray) -> CsrMatrix:
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    # sum duplicates
    if rows.size:
        keep = np.ones(rows.size, dtype=bool)
        keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        idx = np.cumsum(keep) - 1
        summed = np.zeros(int(idx[-1]) + 1)
        np.add.at(summed, idx, vals)
        rows, cols, vals = rows[keep], cols[keep], summed
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(row_ptr, rows + 1, 1)
    row_ptr = np.cumsum(row_ptr).astype(np.int64)
    return CsrMatrix(n, row_ptr, cols.astype(np.int64), vals)


def spmv(a: CsrMatrix, x: np.ndarray, policy: PrecisionPolicy) -> np.ndarray:
    """Row-wise mixed dot products; output rounded to policy.storage.

    Non-finite entries are propagated for the caller to detect.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape[0] != a.n:
        raise ValueError("spmv dimension mismatch")
    y = backend.kernels.spmv_mixed(a.row_ptr, a.col_idx, a.values, x,
                                   int(policy.compute), int(policy.accumulate))
    return round_to(y, policy.storage)


def spectral_rescale(a: CsrMatrix, seed: int = 20240901) -> CsrMatrix:
    """Scale so the largest eigenvalue sits near 64 (and below 100).

    The dominant eigenvalue is estimated with 200 FP64 power iterations
    (seeded start, early exit on relative change < 1e-10); the matrix is then
    multiplied by 64/estimate.  A zero matrix is returned unchanged.
    """
    if a.nnz == 0 or not np.any(a.values):
        return a
    rng = np.random.default_rng(seed)
    v = rng.random(a.n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(200):
        w = backend.kernels.spmv_mixed(a.row_ptr, a.col_idx, a.values, v, 2, 2)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return a
        new_lam = float(v @ w)
        v = w / nw
        if lam != 0.0 and abs(new_lam - lam) < 1e-10 * abs(new_lam):
            lam = new_lam
            break
        lam = new_lam
    if lam == 0.0:
        return a
    scale = RESCALE_TARGET / abs(lam)
    return CsrMatrix(a.n, a.row_ptr, a.col_idx, a.values * scale, a.fmt)


def apply_dense(a, x: np.ndarray, policy: PrecisionPolicy,
                transpose: bool = False) -> np.ndarray:
    """A @ X (or A' @ X) under the policy, rounded to policy.storage.

    ``a`` may be a DenseMatrix or a CsrMatrix (symmetric, so transpose is
    free); ``x`` is a float64 2-D array of storage-representable values.
    """
    x = np.asarray(x, dtype=np.float64)
    if isinstance(a, CsrMatrix):
        cols = [spmv(a, x[:, j], policy) for j in range(x.shape[1])]
        return np.asfortranarray(np.column_stack(cols) if cols else x[:, :0])
    m = a.data.T if transpose else a.data
    return mixed_gemm(m, x, policy, policy.storage)


def to_dense_f64(a) -> np.ndarray:
    """FP64 dense promotion of either matrix container (for diagnostics)."""
    if isinstance(a, CsrMatrix):
        return a.to_dense()
    return np.array(a.data, dtype=np.float64)
