"""Readers and builders producing :class:`~pfsnm.problem.ProblemData`."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ParseError
from .conic_json import read_conic_json, write_conic_json
from .lasso import LassoSpec, build_sqrt_lasso, synthetic_rhs
from .matrix_market import read_matrix_market
from .mps import read_mps

FORMATS = ("mps", "conic", "lasso")


def guess_format(path) -> str:
    suf = Path(path).suffix.lower()
    if suf in (".mps", ".freemps"):
        return "mps"
    if suf == ".json":
        return "conic"
    if suf == ".mtx":
        return "lasso"
    if suf == ".qps":
        raise ParseError("QPS (quadratic MPS) input is not supported; only linear MPS is read")
    raise ParseError(f"cannot infer the format of {path}; pass --format")


def load_problem(path, fmt: str | None = None, prune: bool = False, fixed_mps: bool = False,
                 rhs_path=None, seed: int = 0, lasso_rho: float | None = None):
    """Read ``path`` as ``fmt`` (inferred from the suffix when ``None``)."""
    if Path(path).suffix.lower() == ".qps":
        raise ParseError("QPS (quadratic MPS) input is not supported; only linear MPS is read")
    fmt = fmt or guess_format(path)
    if fmt == "mps":
        return read_mps(path, fixed=fixed_mps, prune=prune)
    if fmt == "conic":
        return read_conic_json(path)
    if fmt == "lasso":
        D = read_matrix_market(path)
        if rhs_path is not None:
            try:
                b = np.loadtxt(rhs_path, dtype=float, ndmin=1)
            except ValueError as exc:
                raise ParseError(f"{rhs_path}: {exc}") from None
        else:
            b = synthetic_rhs(D, seed)
        return build_sqrt_lasso(LassoSpec(D, b, lasso_rho, Path(path).stem))
    raise ParseError(f"unknown format {fmt!r}; expected one of {FORMATS}")


__all__ = ["FORMATS", "load_problem", "guess_format", "read_mps", "read_conic_json", "write_conic_json",
           "read_matrix_market", "build_sqrt_lasso", "LassoSpec", "synthetic_rhs"]
