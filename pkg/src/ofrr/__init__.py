"""Mixed-precision partial eigenvalue and SVD toolkit built around the
orthogonalization-free Rayleigh-Ritz projection."""

from .backend import ACTIVE as active_backend, available_backends
from .basis import (
    BasisFactorization,
    BasisMethod,
    EmptyBasisError,
    arnoldi_mgs,
    build_basis,
    hessenberg_basis,
    krylov_hessenberg,
    orthonormalize,
)
from .driver import IterConfig, krylov_eig, subspace_iter_eig, subspace_iter_svd
from .matrix import (
    CsrMatrix,
    DenseMatrix,
    KernelConfig,
    MatrixMarketError,
    gaussian_kernel,
    read_matrix_market,
    sample_uniform_square,
    spectral_rescale,
)
from .precision import (
    FULL_F32,
    FULL_F64,
    MIXED_HALF,
    NATIVE_F16,
    POLICY_PRESETS,
    FpFormat,
    PrecisionPolicy,
    mixed_dot,
    mixed_gemm,
    round_to,
    safe_norm2,
)
from .projection import (
    EmptyPencilError,
    OverflowDiagnostic,
    RitzSet,
    ofrr_eig,
    ofrr_svd,
    residual_report,
    rr_eig,
    rr_svd,
)
from .smallsolve import ConvergenceError, cond2, small_svd, sym_def_gen_eig, sym_eig

__version__ = "0.1.0"

__all__ = [
    "active_backend", "available_backends",
    "BasisFactorization", "BasisMethod", "EmptyBasisError",
    "arnoldi_mgs", "build_basis", "hessenberg_basis", "krylov_hessenberg",
    "orthonormalize",
    "IterConfig", "krylov_eig", "subspace_iter_eig", "subspace_iter_svd",
    "CsrMatrix", "DenseMatrix", "KernelConfig", "MatrixMarketError",
    "gaussian_kernel", "read_matrix_market", "sample_uniform_square",
    "spectral_rescale",
    "FULL_F32", "FULL_F64", "MIXED_HALF", "NATIVE_F16", "POLICY_PRESETS",
    "FpFormat", "PrecisionPolicy", "mixed_dot", "mixed_gemm", "round_to",
    "safe_norm2",
    "EmptyPencilError", "OverflowDiagnostic", "RitzSet",
    "ofrr_eig", "ofrr_svd", "residual_report", "rr_eig", "rr_svd",
    "ConvergenceError", "cond2", "small_svd", "sym_def_gen_eig", "sym_eig",
]
