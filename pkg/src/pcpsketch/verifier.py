"""Numerical check of the four structural conditions and of the resulting PCP bound.

For a sketch ``W A`` the conditions measure how well ``W^T W`` preserves
four Gram-type products built from the SVD of ``A``, a user-chosen diagonal
weighting ``Sigma~`` and the residual ``A_{m,perp}``.  The normalized
maximum ``eps_effective`` of the four measured values certifies

    | ||W A X||_F^2 - ||A X||_F^2 | <= (d_m^-2 + 2 d_m^-1 + 2) eps_effective ||A X||_F^2

for every ``X`` with orthonormal columns and ``d - k`` of them.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateDenominatorError, DimensionError, ParameterError
from .linalg import (
    OrthonormalBasis,
    ThinSVD,
    as_matrix,
    complement_basis,
    haar_orthonormal,
    rank_split,
    residual_frobenius_sq,
    thin_svd,
)
from .sketching import RidgeContext, SamplingPlan, apply_sketch, derive_seed

THEOREM_SLACK = 1e-9
# ||AX||_F below this fraction of ||A||_F counts as zero in pcp_error
_ZERO_COST_RTOL = 1e-14


@dataclass(frozen=True)
class SigmaTilde:
    """Diagonal weights ``d_1 >= ... >= d_q > 0 = d_{q+1} = ... = d_r`` and split ``m``."""

    d: np.ndarray
    q: int
    m: int

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64)
        r = d.shape[0]
        if not 1 <= self.m <= self.q <= r:
            raise ParameterError(f"need 1 <= m <= q <= r, got m={self.m}, q={self.q}, r={r}")
        if np.any(np.diff(d) > 0):
            raise ParameterError("Sigma~ entries must be non-increasing")
        if np.any(d[: self.q] <= 0) or np.any(d[self.q :] != 0):
            raise ParameterError("Sigma~ must have exactly q strictly positive leading entries")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def rank(self) -> int:
        return int(self.d.shape[0])

    @property
    def d_m(self) -> float:
        return float(self.d[self.m - 1])

    @property
    def bound_constant(self) -> float:
        inv = 1.0 / self.d_m
        return inv * inv + 2.0 * inv + 2.0


@dataclass(frozen=True)
class ConditionReport:
    lhs1: float
    lhs2: float
    lhs3: float
    lhs4: float
    eps_effective: float
    bound_constant: float
    certified_error: float
    m: int
    k: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TheoremCheck:
    report: ConditionReport
    max_observed: float
    holds: bool

    def to_dict(self) -> dict:
        return {
            "report": self.report.to_dict(),
            "max_observed": self.max_observed,
            "holds": self.holds,
        }


def sigma_tilde_leverage(svd: ThinSVD, k: int) -> SigmaTilde:
    """Binary weights: ones on the top ``k`` directions, ``m = q = k``."""
    r = svd.rank
    if int(k) != k or not 1 <= k <= r:
        raise ParameterError(f"k={k} outside [1, {r}]")
    d = np.zeros(r)
    d[:k] = 1.0
    return SigmaTilde(d=d, q=int(k), m=int(k))


def sigma_tilde_ridge(ctx: RidgeContext) -> SigmaTilde:
    """Weights ``sigma_i / sqrt(sigma_i^2 + lambda)`` with ``q = r`` and the ridge ``m``."""
    d = np.asarray(ctx.sigma_lambda, dtype=np.float64)
    # sorted sigma gives sorted weights; clamp 1-ulp inversions from rounding
    d = np.minimum.accumulate(d)
    return SigmaTilde(d=d, q=int(d.shape[0]), m=int(ctx.m))


def evaluate_conditions(
    a, plan: SamplingPlan, st: SigmaTilde, k: int, svd: Optional[ThinSVD] = None
) -> ConditionReport:
    """Measure the four structural conditions for ``plan`` on ``a``.

    Sketched products are formed with :func:`apply_sketch`; ``W`` is never
    materialized.  Conditions 2-4 are normalized by ``rho = ||A_{k,perp}||_F``,
    the smallest value ``||A X||_F`` can take, so the resulting
    ``eps_effective`` holds uniformly over ``X``.
    """
    a = as_matrix(a)
    svd = thin_svd(a) if svd is None else svd
    if st.rank != svd.rank:
        raise DimensionError(f"Sigma~ has size {st.rank} but the matrix has rank {svd.rank}")
    if int(k) != k or not 1 <= k:
        raise ParameterError(f"k={k} must be a positive integer")
    split = rank_split(svd, st.m)
    resid = split.a_m_perp

    wu = apply_sketch(plan, svd.u) * st.d
    d2 = st.d * st.d
    gram1 = wu.T @ wu
    gram1[np.diag_indices_from(gram1)] -= d2
    lhs1 = float(np.linalg.norm(gram1, 2))

    wr = apply_sketch(plan, resid)
    cross = wu.T @ wr - (svd.u * st.d).T @ resid
    lhs2 = float(np.linalg.norm(cross, "fro"))
    lhs3 = float(np.linalg.norm(wr.T @ wr - resid.T @ resid, "fro"))
    lhs4 = abs(float(np.sum(wr * wr)) - float(np.sum(resid * resid)))

    rho_sq = residual_frobenius_sq(svd, k)
    if rho_sq == 0.0:
        lhs2 = lhs3 = lhs4 = 0.0
        eps_eff = lhs1
    else:
        rho = math.sqrt(rho_sq)
        eps_eff = max(lhs1, lhs2 / rho, math.sqrt(k) * lhs3 / rho_sq, lhs4 / rho_sq)
    const = st.bound_constant
    return ConditionReport(
        lhs1=lhs1,
        lhs2=lhs2,
        lhs3=lhs3,
        lhs4=lhs4,
        eps_effective=eps_eff,
        bound_constant=const,
        certified_error=const * eps_eff,
        m=st.m,
        k=int(k),
    )


def pcp_error(a, wa, x: OrthonormalBasis) -> float:
    """Relative projection-cost error ``| ||WAX||^2 - ||AX||^2 | / ||AX||^2``."""
    a = np.asarray(a, dtype=np.float64)
    wa = np.asarray(wa, dtype=np.float64)
    xm = x.matrix
    if a.shape[1] != xm.shape[0] or wa.shape[1] != xm.shape[0]:
        raise DimensionError("column counts of a, wa and x disagree")
    cost = float(np.sum((a @ xm) ** 2))
    sketched = float(np.sum((wa @ xm) ** 2))
    scale = float(np.sum(a * a))
    if cost <= (_ZERO_COST_RTOL**2) * scale:
        wscale = float(np.sum(wa * wa))
        if sketched <= (_ZERO_COST_RTOL**2) * max(wscale, scale):
            return 0.0
        raise DegenerateDenominatorError("||AX||_F = 0 but ||WAX||_F > 0")
    return abs(sketched - cost) / cost


def worst_case_error(a, plan: SamplingPlan, svd: Optional[ThinSVD] = None) -> float:
    """``|| U^T (W^T W - I) U ||_2``: the supremum of the per-direction relative error.

    Bounds :func:`pcp_error` from above for every ``k`` and every ``X``.
    """
    svd = thin_svd(a) if svd is None else svd
    wu = apply_sketch(plan, svd.u)
    g = wu.T @ wu
    g[np.diag_indices_from(g)] -= 1.0
    return float(np.linalg.norm(g, 2))


def adversarial_basis(svd: ThinSVD, k: int) -> OrthonormalBasis:
    """Bottom ``d - k`` right singular directions, the minimizer of ``||AX||_F``."""
    d = svd.v.shape[0]
    if not 1 <= k < d:
        raise ParameterError(f"k={k} outside [1, {d})")
    if k > svd.rank:
        raise ParameterError(f"k={k} exceeds rank {svd.rank}")
    return complement_basis(OrthonormalBasis(svd.v[:, :k]))


def verify_theorem(
    a,
    plan: SamplingPlan,
    st: SigmaTilde,
    k: int,
    x_samples: int = 50,
    seed: int = 0,
    threads: int = 1,
    svd: Optional[ThinSVD] = None,
) -> TheoremCheck:
    """Compare observed PCP errors against the certified bound.

    Evaluates ``pcp_error`` on ``x_samples`` Haar-random bases plus the
    adversarial basis and reports whether every one lies below
    ``certified_error + 1e-9``.
    """
    a = as_matrix(a)
    svd = thin_svd(a) if svd is None else svd
    report = evaluate_conditions(a, plan, st, k, svd=svd)
    wa = apply_sketch(plan, a)
    d = a.shape[1]

    def one(i):
        x = haar_orthonormal(d, d - k, derive_seed(seed, i))
        return pcp_error(a, wa, x)

    observed = [pcp_error(a, wa, adversarial_basis(svd, k))]
    if threads > 1 and x_samples > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            observed.extend(pool.map(one, range(x_samples)))
    else:
        observed.extend(one(i) for i in range(x_samples))
    max_obs = float(max(observed))
    holds = max_obs <= report.certified_error + THEOREM_SLACK
    return TheoremCheck(report=report, max_observed=max_obs, holds=bool(holds))
