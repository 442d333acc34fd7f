"""Monte-Carlo and exhaustive harnesses for the sampling guarantees.

Each trial ``t`` of an experiment seeded with ``seed`` draws its plan from
``derive_seed(seed, t)``.  Trials are independent, so they may run on a
thread pool; results are collected in trial order, which keeps every
statistic identical for any ``threads`` value.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, ParameterError
from .linalg import ThinSVD, as_matrix, haar_orthonormal, thin_svd
from .sketching import (
    ProbabilityVector,
    SamplingPlan,
    apply_sketch,
    build_sampling_plan,
    derive_seed,
    plan_from_indices,
    probabilities_for,
    sample_size_for,
)
from .verifier import (
    SigmaTilde,
    adversarial_basis,
    evaluate_conditions,
    pcp_error,
    sigma_tilde_leverage,
    sigma_tilde_ridge,
)

MAX_ENUMERATION = 64


@dataclass(frozen=True)
class TrialStats:
    trials: int
    mean: float
    variance: float
    max: float
    failures: int
    threshold: float
    values: np.ndarray = field(repr=False, compare=False, default=None)

    @classmethod
    def from_values(cls, values, threshold=math.inf):
        v = np.asarray(values, dtype=np.float64)
        return cls(
            trials=int(v.size),
            mean=float(np.mean(v)),
            variance=float(np.var(v, ddof=1)) if v.size > 1 else 0.0,
            max=float(np.max(v)),
            failures=int(np.count_nonzero(v > threshold)),
            threshold=float(threshold),
            values=v,
        )

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.trials)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "mean": self.mean,
            "variance": self.variance,
            "max": self.max,
            "failures": self.failures,
            "threshold": self.threshold,
        }


def binomial_band(delta: float, trials: int, sigmas: float = 3.0) -> float:
    """Largest acceptable failure rate: ``delta + sigmas * sqrt(delta (1 - delta) / trials)``."""
    return delta + sigmas * math.sqrt(delta * (1.0 - delta) / trials)


def _map_trials(fn, trials, threads):
    if threads > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(trials)))
    return [fn(t) for t in range(trials)]


def _check_trials(trials):
    if int(trials) != trials or trials < 1:
        raise ParameterError(f"trials={trials} must be a positive integer")


def _check_inner(a, b, p: ProbabilityVector):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions differ: {a.shape} x {b.shape}")
    if p.n != a.shape[1]:
        raise DimensionError(f"probabilities over {p.n} indices, inner dimension {a.shape[1]}")
    return a, b


def _sketched_product(plan: SamplingPlan, a, b):
    # A W^T W B with W sampling the shared inner index
    return apply_sketch(plan, a.T).T @ apply_sketch(plan, b)


def matmul_bound(a, b, p: ProbabilityVector, s: int) -> float:
    """``sum_i ||A_{*i}||^2 ||B_{i*}||^2 / (s p_i)``; infinite if a needed index has p_i = 0."""
    a, b = _check_inner(a, b, p)
    w = np.sum(a * a, axis=0) * np.sum(b * b, axis=1)
    return _weighted_sum(w, p.p) / s


def matmul_beta_bound(a, b, p: ProbabilityVector, s: int) -> float:
    """``||A||_F^2 ||B||_F^2 / (beta s)``."""
    a, b = _check_inner(a, b, p)
    return float(np.sum(a * a) * np.sum(b * b)) / (p.beta * s)


def matmul_expectation(a, b, p: ProbabilityVector, s: int) -> float:
    """Exact ``E ||A W^T W B - A B||_F^2``.

    One draw ``Y = A_{*j} B_{j*} / p_j`` has mean ``AB``; the estimate is the
    average of ``s`` i.i.d. draws, so the expected squared error is
    ``(E||Y||_F^2 - ||AB||_F^2) / s``.
    """
    a, b = _check_inner(a, b, p)
    ab = a @ b
    w = np.sum(a * a, axis=0) * np.sum(b * b, axis=1)
    return (_weighted_sum(w, p.p) - float(np.sum(ab * ab))) / s


def trace_bound(a, b, p: ProbabilityVector, s: int) -> float:
    """``sum_i (BA)_ii^2 / (s p_i)``."""
    a, b = _check_inner(a, b, p)
    _check_square(a, b)
    diag = np.einsum("ij,ji->i", b, a)
    return _weighted_sum(diag * diag, p.p) / s


def trace_expectation(a, b, p: ProbabilityVector, s: int) -> float:
    """Exact ``E (tr(A W^T W B - A B))^2``, same derivation as :func:`matmul_expectation`."""
    a, b = _check_inner(a, b, p)
    _check_square(a, b)
    diag = np.einsum("ij,ji->i", b, a)
    return (_weighted_sum(diag * diag, p.p) - float(np.trace(a @ b)) ** 2) / s


def _check_square(a, b):
    if a.shape[0] != b.shape[1]:
        raise DimensionError(f"AB is {a.shape[0]}x{b.shape[1]}, not square")


def _weighted_sum(w, p) -> float:
    need = w > 0
    if np.any(need & (p <= 0)):
        warnings.warn("an index with nonzero contribution has zero probability; bound is infinite")
        return math.inf
    return float(np.sum(w[need] / p[need]))


def enumerate_outcomes(p: ProbabilityVector, s: int):
    """Yield ``(probability, plan)`` for every index sequence of length ``s``.

    Sequences containing a zero-probability index are skipped.
    """
    n = p.n
    if n**s > MAX_ENUMERATION:
        raise ParameterError(f"{n}^{s} outcome sequences exceed the enumeration limit {MAX_ENUMERATION}")
    support = [i for i in range(n) if p.p[i] > 0]
    for seq in itertools.product(support, repeat=s):
        weight = float(np.prod(p.p[list(seq)]))
        yield weight, plan_from_indices(p, seq)


def enumerate_matmul_error(a, b, p: ProbabilityVector, s: int) -> float:
    """Probability-weighted mean of ``||A W^T W B - A B||_F^2`` over all outcomes."""
    a, b = _check_inner(a, b, p)
    ab = a @ b
    total = 0.0
    for weight, plan in enumerate_outcomes(p, s):
        diff = _sketched_product(plan, a, b) - ab
        total += weight * float(np.sum(diff * diff))
    return total


def enumerate_trace_error(a, b, p: ProbabilityVector, s: int) -> float:
    a, b = _check_inner(a, b, p)
    _check_square(a, b)
    tr = float(np.trace(a @ b))
    total = 0.0
    for weight, plan in enumerate_outcomes(p, s):
        total += weight * (float(np.trace(_sketched_product(plan, a, b))) - tr) ** 2
    return total


def matmul_error_trials(a, b, p: ProbabilityVector, s: int, trials: int, seed: int, threads: int = 1) -> TrialStats:
    """Sampled ``||A W^T W B - A B||_F^2``; failures count exceedances of :func:`matmul_bound`."""
    a, b = _check_inner(a, b, p)
    _check_trials(trials)
    ab = a @ b
    bound = matmul_bound(a, b, p, s)

    def one(t):
        plan = build_sampling_plan(p, s, derive_seed(seed, t))
        diff = _sketched_product(plan, a, b) - ab
        return float(np.sum(diff * diff))

    return TrialStats.from_values(_map_trials(one, trials, threads), threshold=bound)


def trace_error_trials(a, b, p: ProbabilityVector, s: int, trials: int, seed: int, threads: int = 1) -> TrialStats:
    """Sampled ``(tr(A W^T W B - A B))^2``; failures count exceedances of :func:`trace_bound`."""
    a, b = _check_inner(a, b, p)
    _check_square(a, b)
    _check_trials(trials)
    tr = float(np.trace(a @ b))
    bound = trace_bound(a, b, p, s)

    def one(t):
        plan = build_sampling_plan(p, s, derive_seed(seed, t))
        return (float(np.trace(_sketched_product(plan, a, b))) - tr) ** 2

    return TrialStats.from_values(_map_trials(one, trials, threads), threshold=bound)


def spectral_concentration_trials(
    a, p: ProbabilityVector, s: int, eps: float, trials: int, seed: int, threads: int = 1
) -> TrialStats:
    """Sampled ``||A W^T W A^T - A A^T||_2`` with ``W`` sampling the columns of ``a``.

    Requires ``||a||_2 <= 1``; failures count trials whose error exceeds ``eps``.
    """
    a = as_matrix(a)
    _check_trials(trials)
    if p.n != a.shape[1]:
        raise DimensionError(f"probabilities over {p.n} indices, a has {a.shape[1]} columns")
    if np.linalg.norm(a, 2) > 1.0 + 1e-10:
        raise ParameterError("spectral concentration needs ||A||_2 <= 1; rescale the input")
    gram = a @ a.T
    at = a.T

    def one(t):
        plan = build_sampling_plan(p, s, derive_seed(seed, t))
        wat = apply_sketch(plan, at)
        return float(np.linalg.norm(wat.T @ wat - gram, 2))

    return TrialStats.from_values(_map_trials(one, trials, threads), threshold=eps)


@dataclass(frozen=True)
class SchemeSetup:
    """Everything a scheme trial needs that does not depend on the draw."""

    a: np.ndarray
    svd: ThinSVD
    k: int
    scheme: str
    probs: ProbabilityVector
    sigma_tilde: SigmaTilde
    s: int


def prepare_scheme(a, k: int, scheme: str, eps: float, delta: float, s: Optional[int] = None) -> SchemeSetup:
    """Probabilities, ``Sigma~`` and the sample size for ``scheme`` on ``a``.

    ``uniform`` and ``leverage`` use the binary ``Sigma~``; ``ridge`` uses the
    ridge weights.  ``s`` defaults to the scheme's sample-size formula.
    """
    a = as_matrix(a)
    svd = thin_svd(a)
    probs, ctx = probabilities_for(scheme, a, k, svd=svd)
    st = sigma_tilde_ridge(ctx) if ctx is not None else sigma_tilde_leverage(svd, k)
    if s is None:
        s = sample_size_for(probs.scheme, k, eps, delta)
    return SchemeSetup(a=a, svd=svd, k=int(k), scheme=probs.scheme, probs=probs, sigma_tilde=st, s=int(s))


def run_scheme_trials(
    setup: SchemeSetup,
    trials: int,
    seed: int,
    x_samples: int = 0,
    threads: int = 1,
    plan_factory: Optional[Callable[[SchemeSetup, int], SamplingPlan]] = None,
) -> list:
    """One JSON-ready record per trial: seed, s, condition values and PCP errors.

    With ``x_samples > 0`` each record also carries the maximum ``pcp_error``
    over that many Haar bases plus the adversarial basis.  ``plan_factory``
    replaces the random plan (test hook); it receives the setup and the
    trial seed.
    """
    _check_trials(trials)
    a, svd, k = setup.a, setup.svd, setup.k
    d = a.shape[1]
    adv = adversarial_basis(svd, k) if x_samples > 0 else None

    def one(t):
        tseed = derive_seed(seed, t)
        if plan_factory is None:
            plan = build_sampling_plan(setup.probs, setup.s, tseed)
        else:
            plan = plan_factory(setup, tseed)
        rep = evaluate_conditions(a, plan, setup.sigma_tilde, k, svd=svd)
        rec = {
            "trial": t,
            "seed": tseed,
            "scheme": setup.scheme,
            "s": plan.s,
            "lhs1": rep.lhs1,
            "lhs2": rep.lhs2,
            "lhs3": rep.lhs3,
            "lhs4": rep.lhs4,
            "eps_effective": rep.eps_effective,
            "certified_error": rep.certified_error,
        }
        if x_samples > 0:
            wa = apply_sketch(plan, a)
            xseed = derive_seed(tseed, 1)
            errs = [pcp_error(a, wa, adv)]
            errs += [pcp_error(a, wa, haar_orthonormal(d, d - k, derive_seed(xseed, j))) for j in range(x_samples)]
            rec["pcp_adversarial"] = errs[0]
            rec["pcp_max"] = float(max(errs))
        return rec

    return _map_trials(one, trials, threads)


def scheme_failure_rate(
    a,
    k: int,
    scheme: str,
    eps: float,
    delta: float,
    trials: int,
    seed: int,
    threads: int = 1,
    s: Optional[int] = None,
    plan_factory=None,
) -> TrialStats:
    """How often the measured ``eps_effective`` exceeds ``eps`` at the scheme's sample size."""
    setup = prepare_scheme(a, k, scheme, eps, delta, s=s)
    records = run_scheme_trials(setup, trials, seed, threads=threads, plan_factory=plan_factory)
    return TrialStats.from_values([r["eps_effective"] for r in records], threshold=eps)


def scheme_constant(setup: SchemeSetup) -> float:
    """Worst-case bound constant: 5 for binary ``Sigma~``, ``4 + 2 sqrt 2`` for ridge."""
    return 4.0 + 2.0 * math.sqrt(2.0) if setup.scheme == "ridge" else 5.0


def pcp_failure_rate(
    a,
    k: int,
    scheme: str,
    eps: float,
    delta: float,
    trials: int,
    x_samples: int,
    seed: int,
    threads: int = 1,
    s: Optional[int] = None,
) -> TrialStats:
    """How often the max observed PCP error exceeds ``constant * eps``."""
    setup = prepare_scheme(a, k, scheme, eps, delta, s=s)
    records = run_scheme_trials(setup, trials, seed, x_samples=x_samples, threads=threads)
    return TrialStats.from_values([r["pcp_max"] for r in records], threshold=scheme_constant(setup) * eps)


def error_vs_s(setup: SchemeSetup, s_values, trials: int, seed: int, eps: float, threads: int = 1) -> list:
    """Aggregate rows (one per ``s``) for plotting error against sample size."""
    rows = []
    for s in s_values:
        sub = SchemeSetup(**{**setup.__dict__, "s": int(s)})
        recs = run_scheme_trials(sub, trials, derive_seed(seed, int(s)), threads=threads)
        stats = TrialStats.from_values([r["eps_effective"] for r in recs], threshold=eps)
        rows.append(
            {
                "scheme": setup.scheme,
                "s": int(s),
                "trials": stats.trials,
                "mean_eps_effective": stats.mean,
                "max_eps_effective": stats.max,
                "failures": stats.failures,
                "failure_rate": stats.failure_rate,
            }
        )
    return rows


def write_jsonl(path_or_file, records) -> None:
    lines = "".join(json.dumps(r) + "\n" for r in records)
    if hasattr(path_or_file, "write"):
        path_or_file.write(lines)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(lines)


def write_csv_rows(fh, rows) -> None:
    if not rows:
        return
    writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def kmeans_demo(
    a,
    k: int,
    eps: float,
    delta: float,
    trials: int,
    seed: int,
    n_random: int = 50,
    n_lloyd: int = 5,
    lloyd_iterations: int = 3,
    threads: int = 1,
) -> list:
    """Cost preservation of column clusterings under the mixed leverage sketch.

    The assignments are fixed by ``seed``: ``n_random`` uniformly random ones
    and ``n_lloyd`` random starts refined by a few Lloyd steps on ``a``.  Each
    trial draws one sketch and records the largest relative cost gap.
    """
    from .clustering import ClusterAssignment, lloyd_refine, sketched_clustering_gap

    setup = prepare_scheme(a, k, "leverage", eps, delta)
    a = setup.a
    d = a.shape[1]
    base = derive_seed(seed, 2**31 - 1)
    randoms = [ClusterAssignment.random(d, k, derive_seed(base, j)) for j in range(n_random)]
    refined = [
        lloyd_refine(a, ClusterAssignment.random(d, k, derive_seed(base, n_random + j)), lloyd_iterations)
        for j in range(n_lloyd)
    ]

    def one(t):
        tseed = derive_seed(seed, t)
        plan = build_sampling_plan(setup.probs, setup.s, tseed)
        wa = apply_sketch(plan, a)
        rep = evaluate_conditions(a, plan, setup.sigma_tilde, k, svd=setup.svd)
        gap_r = max(sketched_clustering_gap(a, wa, c) for c in randoms) if randoms else 0.0
        gap_l = max(sketched_clustering_gap(a, wa, c) for c in refined) if refined else 0.0
        return {
            "trial": t,
            "seed": tseed,
            "s": plan.s,
            "max_gap_random": gap_r,
            "max_gap_lloyd": gap_l,
            "eps_effective": rep.eps_effective,
            "certified_error": rep.certified_error,
        }

    return _map_trials(one, trials, threads)
