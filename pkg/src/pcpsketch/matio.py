"""Reading and writing dense matrices as CSV or MatrixMarket array files."""
from __future__ import annotations

import os

import numpy as np
import scipy.io

from .errors import DimensionError
from .linalg import as_matrix

_FMT = "%.17g"


def write_csv(path, a) -> None:
    a = as_matrix(a)
    np.savetxt(path, a, delimiter=",", fmt=_FMT)


def read_csv(path) -> np.ndarray:
    a = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return as_matrix(a, os.fspath(path))


def write_matrix_market(path, a) -> None:
    a = as_matrix(a)
    scipy.io.mmwrite(path, a, field="real", precision=17)


def read_matrix_market(path) -> np.ndarray:
    a = scipy.io.mmread(path)
    if hasattr(a, "toarray"):
        raise DimensionError(f"{path}: coordinate (sparse) MatrixMarket files are not supported")
    return as_matrix(np.asarray(a, dtype=np.float64), os.fspath(path))


def read_matrix(path) -> np.ndarray:
    """Load a matrix, dispatching on the extension (``.mtx`` or CSV)."""
    if os.fspath(path).lower().endswith(".mtx"):
        return read_matrix_market(path)
    return read_csv(path)


def write_matrix(path, a) -> None:
    if os.fspath(path).lower().endswith(".mtx"):
        write_matrix_market(path, a)
    else:
        write_csv(path, a)
