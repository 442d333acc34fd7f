"""Dense linear algebra used throughout the package.

Matrices are plain ``numpy.ndarray`` objects of dtype float64.  The helpers
here wrap the LAPACK SVD and QR routines with the numerical-rank and sign
conventions the sketching and verification code relies on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DimensionError, SplitIndexError, ZeroRankError

ORTHO_TOL = 1e-10


def as_matrix(a, name="a") -> np.ndarray:
    """Validate ``a`` as a finite, non-empty 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} is empty (shape {arr.shape})")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} contains NaN or Inf entries")
    return arr


@dataclass(frozen=True)
class ThinSVD:
    """Thin SVD ``a = u @ diag(sigma) @ v.T`` truncated at the numerical rank."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.sigma.shape[0])

    @property
    def shape(self):
        return (self.u.shape[0], self.v.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


@dataclass(frozen=True)
class RankSplit:
    """Spectral split ``A = A_m + A_{m,perp}`` at index ``m`` (1-based count)."""

    m: int
    a_m: np.ndarray
    a_m_perp: np.ndarray
    sigma_m: np.ndarray
    sigma_m_perp: np.ndarray


@dataclass(frozen=True)
class OrthonormalBasis:
    """A ``d x c`` matrix with orthonormal columns."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = as_matrix(self.matrix, "basis")
        gram_err = np.linalg.norm(mat.T @ mat - np.eye(mat.shape[1]), 2)
        if mat.shape[1] > mat.shape[0] or gram_err > ORTHO_TOL:
            raise DimensionError(
                f"columns are not orthonormal (||X^T X - I||_2 = {gram_err:.3e})"
            )
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def codim(self) -> int:
        return int(self.matrix.shape[1])


class MatrixNorms(NamedTuple):
    frobenius: float
    spectral: float
    trace: Optional[float]


def default_rank_tol(shape) -> float:
    return max(shape) * np.finfo(np.float64).eps


def thin_svd(a, rank_tol=None) -> ThinSVD:
    """Thin SVD of ``a`` keeping singular values above ``rank_tol * sigma_1``.

    Parameters
    ----------
    a : array_like, shape (n, d)
    rank_tol : float, optional
        Relative threshold for the numerical rank.  Defaults to
        ``max(n, d) * machine_eps``.

    Raises
    ------
    DimensionError
        If ``a`` is empty or contains non-finite values.
    ZeroRankError
        If every singular value is zero.
    """
    a = as_matrix(a)
    if rank_tol is None:
        rank_tol = default_rank_tol(a.shape)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise ZeroRankError("matrix has numerical rank 0")
    r = int(np.count_nonzero(s > rank_tol * s[0]))
    return ThinSVD(u=u[:, :r].copy(), sigma=s[:r].copy(), v=vt[:r].T.copy())


def rank_split(svd: ThinSVD, m: int) -> RankSplit:
    """Split the factored matrix into its best rank-``m`` part and the residual.

    Both parts are formed from disjoint blocks of the SVD, so
    ``a_m.T @ a_m_perp`` vanishes up to rounding.  For ``m == rank`` the
    residual is exactly zero.
    """
    r = svd.rank
    if not 1 <= m <= r:
        raise SplitIndexError(f"split index m={m} outside [1, {r}]")
    sigma_m = svd.sigma.copy()
    sigma_m[m:] = 0.0
    sigma_m_perp = svd.sigma - sigma_m
    a_m = (svd.u[:, :m] * svd.sigma[:m]) @ svd.v[:, :m].T
    if m == r:
        a_m_perp = np.zeros_like(a_m)
    else:
        a_m_perp = (svd.u[:, m:] * svd.sigma[m:]) @ svd.v[:, m:].T
    return RankSplit(m=m, a_m=a_m, a_m_perp=a_m_perp, sigma_m=sigma_m, sigma_m_perp=sigma_m_perp)


def residual_frobenius_sq(svd: ThinSVD, k: int) -> float:
    """``||A_{k,perp}||_F**2``, the sum of squared singular values past ``k``."""
    return float(np.sum(svd.sigma[k:] ** 2))


def haar_orthonormal(d: int, c: int, seed) -> OrthonormalBasis:
    """Rotation-invariant random ``d x c`` orthonormal basis.

    QR of a standard Gaussian matrix with the signs of ``diag(R)`` folded
    into ``Q`` so that the distribution is exactly Haar.
    """
    if c < 1 or d < 1:
        raise DimensionError(f"need d >= 1 and c >= 1, got d={d}, c={c}")
    if c > d:
        raise DimensionError(f"codim c={c} exceeds dimension d={d}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, c))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return OrthonormalBasis(q * signs)


def complement_basis(x: OrthonormalBasis) -> OrthonormalBasis:
    """Orthonormal basis of the orthogonal complement of ``span(x)``."""
    d, c = x.matrix.shape
    if c >= d:
        raise DimensionError("basis spans the whole space; complement is empty")
    q, _ = np.linalg.qr(x.matrix, mode="complete")
    comp = q[:, c:]
    # one re-orthogonalization pass against x keeps ||X^T X_perp|| at rounding level
    comp = comp - x.matrix @ (x.matrix.T @ comp)
    comp, _ = np.linalg.qr(comp)
    return OrthonormalBasis(comp)


def projector_from_complement(x: OrthonormalBasis) -> np.ndarray:
    """Rank-``d - codim`` projector ``P = I - X X^T``."""
    p = np.eye(x.dim) - x.matrix @ x.matrix.T
    return 0.5 * (p + p.T)


def trace(a) -> float:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"trace needs a square matrix, got {a.shape}")
    return float(np.trace(a))


def norms(a) -> MatrixNorms:
    """Frobenius and spectral norms, plus the trace when ``a`` is square."""
    a = as_matrix(a)
    tr = float(np.trace(a)) if a.shape[0] == a.shape[1] else None
    return MatrixNorms(
        frobenius=float(np.linalg.norm(a, "fro")),
        spectral=float(np.linalg.norm(a, 2)),
        trace=tr,
    )
