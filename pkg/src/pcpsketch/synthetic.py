"""Seeded synthetic test matrices and the inline generator-spec syntax.

Generator specs look like ``gaussian:100x20``, ``powerlaw:300x40:alpha=1.0``
or ``lowrank:200x50:r=5:noise=0.01``; ``mixture:50x400:clusters=3`` builds
a Gaussian mixture whose *columns* are the points.
"""
from __future__ import annotations

import re

import numpy as np

from .errors import ParameterError
from .linalg import haar_orthonormal


def gaussian(n, d, seed):
    return np.random.default_rng(seed).standard_normal((n, d))


def powerlaw(n, d, alpha=1.0, seed=0):
    """``U diag(i^-alpha) V^T`` with Haar ``U`` and ``V`` of width ``min(n, d)``."""
    r = min(n, d)
    ss = np.random.SeedSequence(seed).spawn(2)
    u = haar_orthonormal(n, r, ss[0]).matrix
    v = haar_orthonormal(d, r, ss[1]).matrix
    sigma = np.arange(1, r + 1, dtype=np.float64) ** (-alpha)
    return (u * sigma) @ v.T


def lowrank(n, d, r=5, noise=0.01, seed=0):
    """Rank-``r`` Gaussian product plus i.i.d. Gaussian noise of size ``noise``."""
    rng = np.random.default_rng(seed)
    left = rng.standard_normal((n, r))
    right = rng.standard_normal((r, d))
    return left @ right / np.sqrt(r) + noise * rng.standard_normal((n, d))


def gaussian_mixture(dim, points, clusters=3, spread=4.0, seed=0):
    """``dim x points`` matrix of mixture samples (one point per column) and true labels."""
    rng = np.random.default_rng(seed)
    centers = spread * rng.standard_normal((dim, clusters))
    labels = np.arange(points) % clusters
    rng.shuffle(labels)
    a = centers[:, labels] + rng.standard_normal((dim, points))
    return a, labels


_SHAPE = re.compile(r"^(\d+)x(\d+)$")


def parse_generator(spec: str):
    """Split ``"name:NxD:key=val:..."`` into ``(name, n, d, params)``."""
    parts = spec.strip().split(":")
    if len(parts) < 2:
        raise ParameterError(f"generator spec {spec!r} needs at least name:NxD")
    name = parts[0].lower()
    match = _SHAPE.match(parts[1])
    if not match:
        raise ParameterError(f"bad shape {parts[1]!r} in generator spec {spec!r}")
    n, d = int(match.group(1)), int(match.group(2))
    if n < 1 or d < 1:
        raise ParameterError(f"generator shape must be positive, got {n}x{d}")
    params = {}
    for item in parts[2:]:
        key, sep, val = item.partition("=")
        if not sep:
            raise ParameterError(f"bad parameter {item!r} in generator spec {spec!r}")
        params[key.strip()] = float(val)
    return name, n, d, params


def generate(spec: str, seed: int) -> np.ndarray:
    name, n, d, params = parse_generator(spec)
    try:
        if name == "gaussian":
            return gaussian(n, d, seed)
        if name == "powerlaw":
            return powerlaw(n, d, alpha=params.get("alpha", 1.0), seed=seed)
        if name == "lowrank":
            return lowrank(n, d, r=int(params.get("r", 5)), noise=params.get("noise", 0.01), seed=seed)
        if name == "mixture":
            a, _ = gaussian_mixture(
                n, d, clusters=int(params.get("clusters", 3)), spread=params.get("spread", 4.0), seed=seed
            )
            return a
    except ValueError as exc:
        raise ParameterError(f"generator {spec!r}: {exc}") from exc
    raise ParameterError(f"unknown generator {name!r}")
