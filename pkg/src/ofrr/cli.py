"""Experiment runner and benchmark harness.

Subcommands (`kernel-eig`, `sparse-eig`, `kernel-svd`, `cond-study`, `bench`)
read a key=value spec file describing a grid of cells, run every cell, and
emit one CSV/JSON row per reported quantity.  The bundled ``specs/``
directory ships one ready-made file per reproduction study.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from . import backend
from .basis import BasisMethod, EmptyBasisError, build_basis
from .driver import (
    KRYLOV_METHODS,
    IterConfig,
    krylov_eig,
    subspace_iter_eig,
    subspace_iter_svd,
)
from .matrix import (
    DenseMatrix,
    KernelConfig,
    gaussian_kernel,
    read_matrix_market,
    sample_uniform_square,
    spectral_rescale,
    to_dense_f64,
)
from .precision import POLICY_PRESETS, FpFormat, round_to, scale_columns_inf
from .projection import EmptyPencilError, OverflowDiagnostic
from .smallsolve import ConvergenceError, cond2, small_svd, sym_eig

CSV_COLUMNS = [
    "experiment", "matrix", "policy", "basis_method", "projection", "index",
    "value", "reference", "rel_error", "residual", "cond2", "wall_ms",
    "status",
]

_METHODS = {m.value: m for m in BasisMethod}


@dataclass
class Cell:
    matvec_policy: str
    policy: str
    basis_method: str
    projection: str

    @classmethod
    def parse(cls, text: str) -> "Cell":
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(
                f"cell {text!r}: expected matvec_policy:policy:method:projection")
        mvp, pol, meth, proj = (p.strip() for p in parts)
        for name in (mvp, pol):
            if name not in POLICY_PRESETS:
                raise ValueError(f"cell {text!r}: unknown policy preset {name!r}")
        if meth not in _METHODS and meth != "raw":
            raise ValueError(f"cell {text!r}: unknown basis method {meth!r}")
        if proj not in ("rr", "ofrr", "none"):
            raise ValueError(f"cell {text!r}: projection must be rr/ofrr/none")
        return cls(mvp, pol, meth, proj)


@dataclass
class ExperimentSpec:
    experiment: str
    params: dict = field(default_factory=dict)
    cells: list = field(default_factory=list)
    seed: int = 0
    out: Optional[str] = None
    fmt: str = "csv"

    def get(self, key, default=None):
        return self.params.get(key, default)

    def get_int(self, key, default=None):
        v = self.params.get(key)
        return default if v is None else int(v)

    def get_float(self, key, default=None):
        v = self.params.get(key)
        return default if v is None else float(v)


def parse_spec_file(path: str) -> ExperimentSpec:
    """Parse a key=value spec file; repeated ``cell=`` lines accumulate."""
    params: dict = {}
    cells: list = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "cell":
                cells.append(Cell.parse(value))
            else:
                params[key] = value
    spec = ExperimentSpec(
        experiment=params.pop("experiment", ""),
        params=params,
        cells=cells,
        seed=int(params.pop("seed", 0)),
        out=params.pop("out", None),
        fmt=params.pop("format", "csv"),
    )
    return spec


def _blank_row(spec, matrix, cell) -> dict:
    return {c: "" for c in CSV_COLUMNS} | {
        "experiment": spec.experiment,
        "matrix": matrix,
        "policy": f"{cell.matvec_policy}:{cell.policy}",
        "basis_method": cell.basis_method,
        "projection": cell.projection,
        "status": "ok",
    }


_FAILURES = (
    (OverflowDiagnostic, "overflow"),
    ((EmptyBasisError, EmptyPencilError), "breakdown"),
    (ConvergenceError, "error"),
)


def _status_of(exc: Exception) -> str:
    for types, name in _FAILURES:
        if isinstance(exc, types):
            return name
    return "error"


def _fmt_num(v) -> str:
    if v == "" or v is None:
        return ""
    return format(float(v), ".17g")


# ---------------------------------------------------------------------------
# matrices


def _kernel_points(spec: ExperimentSpec):
    n = spec.get_int("n", 1000)
    side = spec.get_float("side", float(np.sqrt(n)))
    return sample_uniform_square(n, side, spec.seed + 777)


def _kernel_matrix(spec: ExperimentSpec, l: Optional[float] = None) -> DenseMatrix:
    pts = _kernel_points(spec)
    cfg = KernelConfig(
        f=spec.get_float("f", 1.0),
        l=l if l is not None else spec.get_float("l", 10.0),
        s=spec.get_float("s", 0.0),
        points=pts,
    )
    return gaussian_kernel(cfg, FpFormat.F64)


def _cross_kernel_matrix(spec: ExperimentSpec) -> DenseMatrix:
    n = spec.get_int("n", 1000)
    n2 = spec.get_int("n2", 200)
    side = spec.get_float("side", float(np.sqrt(n)))
    rng_cols = sample_uniform_square(n2, side, spec.seed + 778)
    cfg = KernelConfig(
        f=spec.get_float("f", 0.2),
        l=spec.get_float("l", 10.0),
        s=0.0,
        points=_kernel_points(spec),
        cross_points=rng_cols,
    )
    return gaussian_kernel(cfg, FpFormat.F64)


def _sparse_matrix(spec: ExperimentSpec):
    path = spec.get("mtx")
    if not path:
        raise ValueError("sparse-eig needs mtx=<path> in the spec")
    a = read_matrix_market(path)
    if spec.get("rescale", "1") != "0":
        a = spectral_rescale(a)
    return a, os.path.basename(path)


# ---------------------------------------------------------------------------
# experiment bodies


def _iter_config(spec: ExperimentSpec, cell: Cell) -> IterConfig:
    return IterConfig(
        k=spec.get_int("k", 20),
        m=spec.get_int("m", 1),
        iter=spec.get_int("iter", 1),
        restarts=spec.get_int("restarts", 0),
        basis_method=_METHODS[cell.basis_method],
        projection=cell.projection,
        policy=POLICY_PRESETS[cell.policy],
        matvec_policy=POLICY_PRESETS[cell.matvec_policy],
        seed=spec.seed,
    )


def _value_rows(spec, matrix_name, cell, values, residuals, reference,
                wall_ms, top) -> list:
    rows = []
    nrep = min(top, len(values)) if top else len(values)
    for i in range(nrep):
        row = _blank_row(spec, matrix_name, cell)
        row["index"] = i
        row["value"] = values[i]
        if reference is not None and i < len(reference) and reference[i] != 0.0:
            row["reference"] = reference[i]
            row["rel_error"] = abs(values[i] - reference[i]) / abs(reference[i])
        if residuals is not None:
            row["residual"] = residuals[i]
        row["wall_ms"] = wall_ms
        rows.append(row)
    if nrep < (top or 0):
        row = _blank_row(spec, matrix_name, cell)
        row["status"] = "breakdown"
        row["wall_ms"] = wall_ms
        rows.append(row)
    return rows


def _run_eig_cell(spec, a, matrix_name, reference, cell) -> list:
    top = spec.get_int("top", 0)
    try:
        cfg = _iter_config(spec, cell)
        t0 = time.monotonic()
        if cfg.basis_method in KRYLOV_METHODS:
            rs = krylov_eig(a, cfg)
        else:
            rs = subspace_iter_eig(a, cfg)
        wall = (time.monotonic() - t0) * 1e3
    except Exception as exc:  # cell failures become rows, not crashes
        row = _blank_row(spec, matrix_name, cell)
        row["status"] = _status_of(exc)
        return [row]
    return _value_rows(spec, matrix_name, cell, rs.values, rs.residuals,
                       reference, wall, top)


def _run_svd_cell(spec, a, matrix_name, reference, cell) -> list:
    top = spec.get_int("top", 0)
    try:
        cfg = _iter_config(spec, cell)
        t0 = time.monotonic()
        rs = subspace_iter_svd(a, cfg)
        wall = (time.monotonic() - t0) * 1e3
    except Exception as exc:
        row = _blank_row(spec, matrix_name, cell)
        row["status"] = _status_of(exc)
        return [row]
    return _value_rows(spec, matrix_name, cell, rs.values, rs.residuals,
                       reference, wall, top)


def _run_cond_cell(spec, a, matrix_name, cell) -> list:
    """One conditioning-study cell: k columns pushed through iter MatVec
    steps, then (optionally) stabilized; reports cond2 of the result."""
    policy = POLICY_PRESETS[cell.policy]
    mv = POLICY_PRESETS[cell.matvec_policy]
    k = spec.get_int("k", 20)
    iters = spec.get_int("iter", 3)
    row = _blank_row(spec, matrix_name, cell)
    try:
        rng = np.random.default_rng(spec.seed)
        x = round_to(np.asfortranarray(rng.random((a.rows, k))), mv.storage)
        t0 = time.monotonic()
        from .matrix import apply_dense

        for _ in range(iters):
            x = apply_dense(a, x, mv)
            x = scale_columns_inf(x, mv)
        if cell.basis_method == "raw":
            basis = x
        else:
            fac = build_basis(DenseMatrix(np.asfortranarray(x), policy.storage),
                              _METHODS[cell.basis_method], policy)
            basis = fac.q.data
        try:
            c = cond2(basis)
        except ConvergenceError:
            # the one-sided Jacobi stalls only on numerically rank-deficient
            # bases, which is itself the answer here
            c = float("inf")
        row["cond2"] = c
        row["wall_ms"] = (time.monotonic() - t0) * 1e3
    except Exception as exc:
        row["status"] = _status_of(exc)
    return [row]


def _run_bench_cell(spec, size, backend_name, kmod, cell) -> list:
    """Median-of-N wall time for one basis builder on one random block."""
    n, k = (int(v) for v in size.split("x"))
    repeats = spec.get_int("repeats", 5)
    policy = POLICY_PRESETS[cell.policy]
    rng = np.random.default_rng(spec.seed)
    x = DenseMatrix.from_array(rng.random((n, k)), policy.storage)
    row = _blank_row(spec, f"{size}/{backend_name}", cell)
    saved = backend.kernels
    try:
        backend.kernels = kmod
        times = []
        for _ in range(repeats):
            t0 = time.monotonic()
            build_basis(x, _METHODS[cell.basis_method], policy)
            times.append((time.monotonic() - t0) * 1e3)
        row["wall_ms"] = float(np.median(times))
    except Exception as exc:
        row["status"] = _status_of(exc)
    finally:
        backend.kernels = saved
    return [row]


# ---------------------------------------------------------------------------
# harness


def _eig_reference(a) -> np.ndarray:
    return sym_eig(to_dense_f64(a)).values


def _svd_reference(a) -> np.ndarray:
    _, sig, _ = small_svd(to_dense_f64(a))
    return sig


def _cell_jobs(spec: ExperimentSpec):
    """Yield zero-argument callables, one per requested cell."""
    if spec.experiment == "kernel-eig":
        a = _kernel_matrix(spec)
        name = (f"kernel(n={a.rows},f={spec.get('f', '1')},"
                f"l={spec.get('l', '10')},s={spec.get('s', '0')})")
        ref = _eig_reference(a)
        for cell in spec.cells:
            yield lambda c=cell: _run_eig_cell(spec, a, name, ref, c)
    elif spec.experiment == "sparse-eig":
        a, name = _sparse_matrix(spec)
        for cell in spec.cells:
            yield lambda c=cell: _run_eig_cell(spec, a, name, None, c)
    elif spec.experiment == "kernel-svd":
        a = _cross_kernel_matrix(spec)
        name = (f"kernel-cross({a.rows}x{a.cols},f={spec.get('f', '0.2')},"
                f"l={spec.get('l', '10')})")
        ref = _svd_reference(a)
        for cell in spec.cells:
            yield lambda c=cell: _run_svd_cell(spec, a, name, ref, c)
    elif spec.experiment == "cond-study":
        scales = [float(v) for v in
                  spec.get("lscales", "1,2,5,10,20,50,100").split(",")]
        for l in scales:
            a = _kernel_matrix(spec, l=l)
            name = f"kernel(l={l:g})"
            for cell in spec.cells:
                yield lambda c=cell, a=a, name=name: _run_cond_cell(
                    spec, a, name, c)
    elif spec.experiment == "bench":
        sizes = spec.get("sizes", "1000x40").split(",")
        for size in sizes:
            for bname, kmod in backend.available_backends().items():
                for cell in spec.cells:
                    yield lambda c=cell, s=size.strip(), b=bname, m=kmod: (
                        _run_bench_cell(spec, s, b, m, c))
    else:
        raise ValueError(f"unknown experiment {spec.experiment!r}")


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> list:
    """Execute every grid cell; failed cells become rows, never crashes."""
    env_seed = os.environ.get("OFRR_SEED")
    if env_seed is not None:
        spec.seed = int(env_seed)
    jobs = list(_cell_jobs(spec))
    if threads > 1 and spec.experiment != "bench":
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
            chunks = list(ex.map(lambda j: j(), jobs))
    else:
        chunks = [job() for job in jobs]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r["matrix"], r["policy"], r["basis_method"],
                             r["projection"], r["index"] if r["index"] != ""
                             else -1))
    return rows


def write_results(rows: list, fmt: str, path: Optional[str]) -> None:
    """Serialize rows (CSV or JSON) with 17 significant digits."""
    num_cols = {"value", "reference", "rel_error", "residual", "cond2",
                "wall_ms"}
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt_num(row[c]) if c in num_cols else row[c]
                             for c in CSV_COLUMNS])
        text = buf.getvalue()
    elif fmt == "json":
        records = []
        for row in rows:
            rec = {}
            for c in CSV_COLUMNS:
                v = row[c]
                if c in num_cols:
                    rec[c] = None if v == "" else float(format(float(v), ".17g"))
                else:
                    rec[c] = v
            records.append(rec)
        text = json.dumps(records, indent=1) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def bundled_spec(name: str) -> str:
    """Path of a spec file shipped in the package's specs/ directory."""
    ref = resources.files("ofrr").joinpath("specs", name)
    return str(ref)


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ofrr",
        description="Mixed-precision eigenvalue/SVD experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in ("kernel-eig", "sparse-eig", "kernel-svd", "cond-study",
                "bench"):
        p = sub.add_parser(cmd)
        p.add_argument("--spec", required=True,
                       help="key=value spec file (see the bundled specs/)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--set", action="append", default=[],
                       metavar="KEY=VALUE", help="override a spec parameter")
    args = parser.parse_args(argv)
    spec = parse_spec_file(args.spec)
    spec.experiment = args.command
    for override in args.set:
        key, _, value = override.partition("=")
        spec.params[key.strip()] = value.strip()
    if args.seed is not None:
        spec.seed = args.seed
    if args.out is not None:
        spec.out = args.out
    if args.format is not None:
        spec.fmt = args.format
    rows = run_experiment(spec, threads=args.threads)
    write_results(rows, spec.fmt, spec.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
