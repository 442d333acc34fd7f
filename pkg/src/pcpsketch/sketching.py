"""Row-sampling probabilities, sampling-and-rescaling plans and sample sizes.

A sampling plan stores the ``s`` drawn row indices and their rescaling
factors ``(s * p_j) ** -0.5``.  The ``s x n`` sampling matrix ``W`` itself is
never formed; :func:`apply_sketch` gathers and rescales rows directly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DegenerateLambdaError,
    DimensionError,
    NoValidSplitError,
    ParameterError,
)
from .linalg import ThinSVD, as_matrix, residual_frobenius_sq, thin_svd

SCHEMES = ("uniform", "leverage_mixed", "ridge")

# renormalization may only absorb rounding, not a construction bug
_RENORM_TOL = 1e-12
# relative slack when comparing sigma_m**2 against lambda
_SPLIT_RTOL = 8 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class ProbabilityVector:
    """Sampling distribution over ``n`` rows.

    ``beta`` is the floor constant guaranteed relative to the scheme's
    canonical scores (1/2 for the mixed leverage scheme, 1 for ridge).
    """

    p: np.ndarray
    beta: float
    scheme: str

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ParameterError("probabilities must be a non-empty vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ParameterError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ParameterError(f"probabilities sum to {p.sum()!r}, not 1")
        if not 0.0 < self.beta <= 1.0:
            raise ParameterError(f"beta={self.beta} outside (0, 1]")
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return int(self.p.shape[0])


@dataclass(frozen=True)
class RidgeContext:
    lam: float
    tau: np.ndarray
    d_lambda: float
    m: int
    sigma_lambda: np.ndarray


@dataclass(frozen=True)
class SamplingPlan:
    """Indices (0-based) and rescaling factors of a sampling-and-rescaling matrix."""

    indices: np.ndarray
    scales: np.ndarray
    n: int
    seed: Optional[int] = None
    scheme: str = "uniform"
    probs: Optional[ProbabilityVector] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        sc = np.asarray(self.scales, dtype=np.float64)
        if idx.ndim != 1 or idx.size == 0 or idx.shape != sc.shape:
            raise ParameterError("indices and scales must be equal-length non-empty vectors")
        if np.any(idx < 0) or np.any(idx >= self.n):
            raise DimensionError(f"plan indices fall outside [0, {self.n})")
        if np.any(sc <= 0) or not np.all(np.isfinite(sc)):
            raise ParameterError("scales must be positive and finite")
        idx.setflags(write=False)
        sc.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "scales", sc)

    @property
    def s(self) -> int:
        return int(self.indices.shape[0])

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "seed": self.seed,
            "scheme": self.scheme,
            "indices": [int(i) for i in self.indices],
            "scales": [float(x) for x in self.scales],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict, n: int, probs: Optional[ProbabilityVector] = None):
        if len(data["indices"]) != data["s"]:
            raise ParameterError("plan JSON: 's' disagrees with the number of indices")
        return cls(
            indices=np.asarray(data["indices"], dtype=np.int64),
            scales=np.asarray(data["scales"], dtype=np.float64),
            n=n,
            seed=data.get("seed"),
            scheme=data.get("scheme", "uniform"),
            probs=probs,
        )

    @classmethod
    def from_json(cls, text: str, n: int, probs: Optional[ProbabilityVector] = None):
        return cls.from_dict(json.loads(text), n=n, probs=probs)


def _finalize(raw, beta, scheme) -> ProbabilityVector:
    total = float(np.sum(raw))
    if abs(total - 1.0) > _RENORM_TOL:
        raise ArithmeticError(f"{scheme} probabilities sum to {total!r} before renormalization")
    return ProbabilityVector(p=raw / total, beta=beta, scheme=scheme)


def _check_rank(k, svd: ThinSVD):
    if int(k) != k or k < 1:
        raise ParameterError(f"target rank k={k} must be a positive integer")
    if k > svd.rank:
        raise ParameterError(f"target rank k={k} exceeds numerical rank {svd.rank}")


def leverage_mixed_probs(a, k: int, svd: Optional[ThinSVD] = None) -> ProbabilityVector:
    """Half rank-``k`` leverage scores, half residual row norms.

    ``p_i = lev_i / (2k) + ||(A_{k,perp})_i||^2 / (2 ||A_{k,perp}||_F^2)``.
    When the residual vanishes the second term is dropped and the pure
    leverage distribution ``lev_i / k`` is returned with ``beta = 1``.
    """
    a = as_matrix(a)
    svd = thin_svd(a) if svd is None else svd
    _check_rank(k, svd)
    lev = np.sum(svd.u[:, :k] ** 2, axis=1) / k
    if k == svd.rank:
        return _finalize(lev, 1.0, "leverage_mixed")
    resid = (svd.u[:, k:] * svd.sigma[k:]) @ svd.v[:, k:].T
    row_sq = np.sum(resid**2, axis=1)
    total = float(np.sum(row_sq))
    if total == 0.0:
        return _finalize(lev, 1.0, "leverage_mixed")
    return _finalize(0.5 * lev + 0.5 * row_sq / total, 0.5, "leverage_mixed")


def uniform_probs(n: int, a=None, k: Optional[int] = None) -> ProbabilityVector:
    """Uniform distribution over ``n`` rows.

    With a matrix context ``(a, k)`` the recorded ``beta`` is the largest
    constant with ``1/n >= beta * q_i`` for the mixed leverage scores ``q``.
    """
    if int(n) != n or n < 1:
        raise ParameterError(f"n={n} must be a positive integer")
    p = np.full(int(n), 1.0 / n)
    beta = 1.0
    if a is not None:
        if k is None:
            raise ParameterError("uniform_probs needs k together with a matrix")
        q = leverage_mixed_probs(a, k).p
        if q.shape[0] != n:
            raise DimensionError(f"matrix has {q.shape[0]} rows, expected {n}")
        beta = float(min(1.0, np.min((1.0 / n) / q[q > 0])))
    return ProbabilityVector(p=p / p.sum(), beta=beta, scheme="uniform")


def select_ridge_split(sigma, lam) -> int:
    """Largest ``m`` with ``sigma_m**2 >= lam`` (``sigma_{r+1}`` taken as 0)."""
    sigma = np.asarray(sigma, dtype=np.float64)
    ok = sigma**2 >= lam * (1.0 - _SPLIT_RTOL)
    if not ok[0]:
        raise NoValidSplitError(
            f"lambda={lam:.6g} exceeds sigma_1^2={sigma[0] ** 2:.6g}; "
            "no m satisfies sigma_m^2 >= lambda >= sigma_{m+1}^2"
        )
    # sigma is sorted, so the admissible indices form a prefix
    return int(np.count_nonzero(ok))


def ridge_leverage_probs(a, k: int, svd: Optional[ThinSVD] = None):
    """Ridge leverage score probabilities with ``lambda = ||A_{k,perp}||_F^2 / k``.

    Returns
    -------
    probs : ProbabilityVector
        ``p_i = tau_i / d_lambda`` with ``beta = 1``.
    ctx : RidgeContext
        ``lam``, the scores ``tau``, their sum ``d_lambda``, the split index
        ``m`` and the diagonal ``sigma_i / sqrt(sigma_i^2 + lam)``.

    Raises
    ------
    DegenerateLambdaError
        If ``A_{k,perp}`` is zero (``k >= rank``).
    NoValidSplitError
        If ``lam > sigma_1^2``.
    """
    a = as_matrix(a)
    svd = thin_svd(a) if svd is None else svd
    _check_rank(k, svd)
    resid_sq = residual_frobenius_sq(svd, k)
    if resid_sq == 0.0:
        raise DegenerateLambdaError(
            f"||A_k,perp||_F = 0 for k={k} (rank {svd.rank}); ridge parameter would be 0"
        )
    lam = resid_sq / k
    m = select_ridge_split(svd.sigma, lam)
    sigma_lambda = svd.sigma / np.sqrt(svd.sigma**2 + lam)
    tau = np.sum((svd.u * sigma_lambda) ** 2, axis=1)
    d_lambda = float(np.sum(sigma_lambda**2))
    probs = ProbabilityVector(p=tau / tau.sum(), beta=1.0, scheme="ridge")
    if abs(tau.sum() / d_lambda - 1.0) > 1e-10:
        raise ArithmeticError("ridge scores do not sum to d_lambda")
    ctx = RidgeContext(lam=lam, tau=tau, d_lambda=d_lambda, m=m, sigma_lambda=sigma_lambda)
    return probs, ctx


def derive_seed(master, *path) -> int:
    """Child seed for ``(master, *path)``, e.g. ``derive_seed(seed, trial)``.

    The tuple is hashed by ``numpy.random.SeedSequence`` so neighbouring
    trial indices give unrelated streams; the result is a plain 32-bit int
    that can be written to reports and replayed.
    """
    ss = np.random.SeedSequence([int(master), *(int(i) for i in path)])
    return int(ss.generate_state(1)[0])


def build_sampling_plan(p: ProbabilityVector, s: int, seed) -> SamplingPlan:
    """Draw ``s`` rows i.i.d. (with replacement) from ``p``."""
    if int(s) != s or s < 1:
        raise ParameterError(f"sample count s={s} must be a positive integer")
    s = int(s)
    rng = np.random.default_rng(seed)
    idx = rng.choice(p.n, size=s, replace=True, p=p.p)
    pj = p.p[idx]
    if np.any(pj <= 0):
        raise ArithmeticError("sampler drew a zero-probability row")
    scales = (s * pj) ** -0.5
    return SamplingPlan(
        indices=idx,
        scales=scales,
        n=p.n,
        seed=seed if isinstance(seed, (int, np.integer)) else None,
        scheme=p.scheme,
        probs=p,
    )


def plan_from_indices(p: ProbabilityVector, indices) -> SamplingPlan:
    """Deterministic plan over the given rows with Algorithm-1 rescaling."""
    idx = np.asarray(indices, dtype=np.int64)
    s = idx.shape[0]
    pj = p.p[idx]
    if np.any(pj <= 0):
        raise ParameterError("cannot select a row with zero probability")
    return SamplingPlan(indices=idx, scales=(s * pj) ** -0.5, n=p.n, scheme=p.scheme, probs=p)


def single_row_plan(p: ProbabilityVector, row: int, s: int = 1) -> SamplingPlan:
    """Adversarial plan that draws the same row ``s`` times."""
    return plan_from_indices(p, np.full(s, row, dtype=np.int64))


def isometric_plan(n: int) -> SamplingPlan:
    """Every row once with unit scale, so that ``W^T W = I``."""
    return SamplingPlan(indices=np.arange(n), scales=np.ones(n), n=n, scheme="uniform")


def apply_sketch(plan: SamplingPlan, a) -> np.ndarray:
    """``W @ a`` in ``O(s * d)`` by gathering and rescaling rows."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.shape[0] != plan.n:
        raise DimensionError(f"plan is over {plan.n} rows but matrix has {a.shape[0]}")
    return a[plan.indices] * plan.scales[:, None]


def dense_sampling_matrix(plan: SamplingPlan) -> np.ndarray:
    """Materialize ``W``; only meant for testing and small examples."""
    w = np.zeros((plan.s, plan.n))
    w[np.arange(plan.s), plan.indices] = plan.scales
    return w


def _check_eps_delta(eps, delta):
    if not 0.0 < eps <= 1.0:
        raise ParameterError(f"eps={eps} outside (0, 1]")
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta={delta} outside (0, 1)")


def sample_size_leverage(k: int, eps: float, delta: float) -> int:
    """Rows needed for the mixed leverage scheme to meet all four conditions w.p. 1 - delta."""
    _check_eps_delta(eps, delta)
    if k < 1:
        raise ParameterError(f"k={k} must be >= 1")
    bernstein = (1 + eps / 3) * 4 * k * math.log(16 * (1 + k) / delta) / eps**2
    markov = 8 * k / (delta * eps**2)
    return math.ceil(max(bernstein, markov))


def sample_size_ridge(k: int, eps: float, delta: float) -> int:
    """Rows needed for ridge leverage sampling to meet all four conditions w.p. 1 - delta."""
    _check_eps_delta(eps, delta)
    if k < 1:
        raise ParameterError(f"k={k} must be >= 1")
    bernstein = (1 + eps / 3) * 4 * k * math.log(16 * (1 + 2 * k) / delta) / eps**2
    markov = 32 * k / (delta * eps**2)
    return math.ceil(max(bernstein, markov))


def sample_size_spectral(frob_sq: float, eps: float, delta: float, beta: float = 1.0) -> int:
    """Sample count for ``||A W^T W A^T - A A^T||_2 <= eps`` when ``||A||_2 <= 1``.

    ``s >= 2 (1 + eps/3) ||A||_F^2 / (beta eps^2) * ln(4 (1 + ||A||_F^2) / delta)``.
    Unlike the scheme bounds, ``eps`` is not capped at 1 here.
    """
    if eps <= 0:
        raise ParameterError(f"eps={eps} must be positive")
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta={delta} outside (0, 1)")
    if not 0.0 < beta <= 1.0:
        raise ParameterError(f"beta={beta} outside (0, 1]")
    val = 2 * (1 + eps / 3) * frob_sq / (beta * eps**2) * math.log(4 * (1 + frob_sq) / delta)
    return math.ceil(val)


def probabilities_for(scheme: str, a, k: int, svd: Optional[ThinSVD] = None):
    """Dispatch on the scheme name; returns ``(probs, ridge_ctx_or_None)``."""
    a = as_matrix(a)
    if scheme == "uniform":
        return uniform_probs(a.shape[0]), None
    if scheme in ("leverage", "leverage_mixed"):
        return leverage_mixed_probs(a, k, svd=svd), None
    if scheme == "ridge":
        return ridge_leverage_probs(a, k, svd=svd)
    raise ParameterError(f"unknown scheme {scheme!r}")


def sample_size_for(scheme: str, k: int, eps: float, delta: float) -> int:
    if scheme == "ridge":
        return sample_size_ridge(k, eps, delta)
    return sample_size_leverage(k, eps, delta)


def write_probabilities_csv(path, probs: ProbabilityVector) -> None:
    np.savetxt(path, probs.p, fmt="%.17g")


def read_probabilities_csv(path, beta: float, scheme: str) -> ProbabilityVector:
    p = np.loadtxt(path, dtype=np.float64, ndmin=1)
    return ProbabilityVector(p=p, beta=beta, scheme=scheme)
