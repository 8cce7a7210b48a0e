"""Emulated floating-point formats and mixed-precision arithmetic kernels.

All matrix data in this package is held in float64 numpy arrays whose values
are exactly representable in a declared storage format.  Every rounding step
is explicit: values are rounded with :func:`round_to` whenever they cross a
format boundary.  The reduction kernels (dot, gemm, spmv) live in a compiled
extension with a pure-numpy fallback, see :mod:`ofrr.backend`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import backend


class FpFormat(enum.IntEnum):
    """IEEE-754 binary format identifiers, ordered narrow to wide."""

    F16 = 0
    F32 = 1
    F64 = 2

    @property
    def eps(self) -> float:
        return _EPS[self]

    @property
    def max_finite(self) -> float:
        return _MAX_FINITE[self]

    @property
    def dtype(self) -> np.dtype:
        return _DTYPE[self]


_EPS = {FpFormat.F16: 2.0**-10, FpFormat.F32: 2.0**-23, FpFormat.F64: 2.0**-52}
_MAX_FINITE = {
    FpFormat.F16: 65504.0,
    FpFormat.F32: float(np.finfo(np.float32).max),
    FpFormat.F64: float(np.finfo(np.float64).max),
}
_DTYPE = {
    FpFormat.F16: np.dtype(np.float16),
    FpFormat.F32: np.dtype(np.float32),
    FpFormat.F64: np.dtype(np.float64),
}


@dataclass(frozen=True)
class PrecisionPolicy:
    """Storage/compute/accumulate precision triple plus column-drop tolerance.

    ``drop_tol_factor`` multiplies ``eps(storage)`` to give the tolerance used
    by the basis builders to discard numerically dependent columns.
    """

    storage: FpFormat
    compute: FpFormat
    accumulate: FpFormat
    drop_tol_factor: float = 1.0

    def __post_init__(self):
        if not (self.accumulate >= self.compute >= self.storage):
            raise ValueError(
                "precision policy must widen: storage <= compute <= accumulate"
            )

    @property
    def drop_tol(self) -> float:
        return self.drop_tol_factor * self.storage.eps


NATIVE_F16 = PrecisionPolicy(FpFormat.F16, FpFormat.F16, FpFormat.F16)
MIXED_HALF = PrecisionPolicy(FpFormat.F16, FpFormat.F16, FpFormat.F32)
FULL_F32 = PrecisionPolicy(FpFormat.F32, FpFormat.F32, FpFormat.F32)
FULL_F64 = PrecisionPolicy(FpFormat.F64, FpFormat.F64, FpFormat.F64)

POLICY_PRESETS = {
    "native-f16": NATIVE_F16,
    "mixed-half": MIXED_HALF,
    "full-f32": FULL_F32,
    "full-f64": FULL_F64,
}


def round_to(x, fmt: FpFormat):
    """Round scalars or arrays into ``fmt`` (round-to-nearest-even).

    Values beyond ``fmt.max_finite`` become +-inf; subnormals are kept;
    NaN/inf propagate.  The result is returned as float64 holding values
    exactly representable in ``fmt``, so the operation is idempotent.
    """
    if fmt == FpFormat.F64:
        if np.isscalar(x):
            return float(x)
        return np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        if np.isscalar(x):
            return float(fmt.dtype.type(x))
        return np.asarray(x, dtype=np.float64).astype(fmt.dtype).astype(np.float64)


def mixed_dot(x: np.ndarray, y: np.ndarray, policy: PrecisionPolicy) -> float:
    """Sequential mixed-precision dot product.

    Products are formed in the compute format and summed index-ascending in
    the accumulate format.  The returned scalar carries the accumulate-format
    value; callers round to storage when writing it back.  +-inf signals
    overflow to the caller.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("mixed_dot requires two equal-length vectors")
    return backend.kernels.dot_mixed(x, y, int(policy.compute), int(policy.accumulate))


def mixed_gemm(a: np.ndarray, b: np.ndarray, policy: PrecisionPolicy,
               out_fmt: FpFormat) -> np.ndarray:
    """Mixed-precision matrix product with entrywise dot semantics.

    Each output entry is computed exactly as ``mixed_dot`` of a row of ``a``
    and a column of ``b``, then rounded to ``out_fmt``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"mixed_gemm dimension mismatch: {a.shape} x {b.shape}")
    return backend.kernels.gemm_mixed(
        a, b, int(policy.compute), int(policy.accumulate), int(out_fmt)
    )


def safe_norm2(x: np.ndarray, policy: PrecisionPolicy) -> float:
    """Overflow-safe 2-norm: scale by the infinity norm before squaring.

    Returns ``max|x| * ||x / max|x|||_2`` evaluated under the policy, and
    exact 0 for the zero vector.  The scaled entries never exceed 1, so the
    sum of squares stays finite whenever the true norm fits the compute
    format.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("safe_norm2 of empty vector")
    m = float(np.max(np.abs(x)))
    if m == 0.0:
        return 0.0
    c = policy.compute
    u = round_to(x / m, c)
    ss = backend.kernels.dot_mixed(u, u, int(c), int(policy.accumulate))
    r = round_to(np.sqrt(ss), c)
    return round_to(m * r, c)


def scale_columns_inf(x: np.ndarray, policy: PrecisionPolicy) -> np.ndarray:
    """Divide each column by its infinity norm (compute format division,
    rounded to storage).  Zero columns are left untouched."""
    x = np.asarray(x, dtype=np.float64)
    out = x.copy(order="F")
    for j in range(x.shape[1]):
        m = np.max(np.abs(x[:, j]))
        if m != 0.0:
            out[:, j] = round_to(round_to(x[:, j] / m, policy.compute),
                                 policy.storage)
    return out


def axpy(y: np.ndarray, alpha: float, x: np.ndarray,
         policy: PrecisionPolicy) -> np.ndarray:
    """Return ``y - alpha*x`` with the product and subtraction both rounded in
    the compute format and the result rounded to storage."""
    c = policy.compute.dtype
    with np.errstate(over="ignore", invalid="ignore"):
        t = c.type(alpha) * _cast(x, c)
        r = _cast(y, c) - t
    return round_to(np.asarray(r, dtype=np.float64), policy.storage)


def _cast(v: np.ndarray, dt: np.dtype) -> np.ndarray:
    # values are representable in dt already, so the cast is exact
    return np.asarray(v, dtype=np.float64).astype(dt)
