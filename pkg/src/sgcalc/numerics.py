"""Small numerical helpers shared across modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_RADII",
    "LimitResult",
    "fibonacci_directions",
    "richardson_limit",
    "orthonormal_complement",
    "mesh_directions",
    "tangent_bases",
]

# radial sequence r_k = 4 * 2^k, k = 0..8
DEFAULT_RADII = 4.0 * 2.0 ** np.arange(9)


@dataclass(frozen=True)
class LimitResult:
    value: np.ndarray
    change: np.ndarray  # |last extrapolant - previous extrapolant|
    converged: np.ndarray


def richardson_limit(samples, radii=DEFAULT_RADII, levels: int = 2, tol: float = 1e-5) -> LimitResult:
    """Extrapolate ``samples[k] ~ c0 + c1/r_k + ...`` to r -> infinity.

    ``samples`` has shape (K, ...) and ``radii`` must double from one entry
    to the next.  Each level of the Richardson table removes one more power
    of 1/r; the leading level removes the 1/r term.  Convergence means the
    last two extrapolants agree to ``tol`` relative to max(1, |value|).
    """
    v = np.asarray(samples, dtype=float)
    radii = np.asarray(radii, dtype=float)
    ratio = radii[1:] / radii[:-1]
    if not np.allclose(ratio, ratio[0]):
        raise ValueError("radii must form a geometric sequence")
    q = ratio[0]
    table = v
    for j in range(1, levels + 1):
        f = q**j
        table = (f * table[1:] - table[:-1]) / (f - 1.0)
    value = table[-1]
    change = np.abs(table[-1] - table[-2])
    converged = change <= tol * np.maximum(1.0, np.abs(value))
    return LimitResult(value, change, converged)


def fibonacci_directions(dim: int, n: int = 32) -> np.ndarray:
    """Nearly uniform unit vectors on S^{dim-1}; shape (m, dim), m <= n."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = 2 * np.pi * (np.arange(n) + 0.5) / n
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if dim == 3:
        i = np.arange(n) + 0.5
        z = 1 - 2 * i / n
        phi = np.pi * (3 - np.sqrt(5)) * i
        rad = np.sqrt(1 - z * z)
        return np.stack([rad * np.cos(phi), rad * np.sin(phi), z], axis=1)
    # higher dimensions: deterministic normalized Halton-like Gaussian draws
    rng = np.random.default_rng(12345 + dim)
    g = rng.standard_normal((n, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def orthonormal_complement(u: np.ndarray) -> np.ndarray:
    """Columns spanning the orthogonal complement of the unit vector ``u``."""
    u = np.asarray(u, dtype=float).reshape(-1)
    n = u.size
    q, _ = np.linalg.qr(np.column_stack([u, np.eye(n)]))
    return q[:, 1:n]


def mesh_directions(dim: int, n: int = 32) -> np.ndarray:
    """Coordinate axes (+e_i, then -e_i) followed by Fibonacci directions."""
    axes = np.concatenate([np.eye(dim), -np.eye(dim)])
    return np.concatenate([axes, fibonacci_directions(dim, n)]) if dim > 1 else axes


def tangent_bases(U: np.ndarray) -> np.ndarray:
    """Orthonormal bases of the complements of unit rows of ``U``.

    Shape (N, n) in, (N, n, n-1) out.  Built from Householder reflections,
    so it is smooth in ``U`` away from the switching hyperplane u_1 = 0.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    N, n = U.shape
    sign = np.where(U[:, 0] >= 0, 1.0, -1.0)
    v = U.copy()
    v[:, 0] += sign
    vv = np.sum(v * v, axis=1)
    H = np.eye(n)[None] - 2.0 * v[:, :, None] * v[:, None, :] / vv[:, None, None]
    return H[:, :, 1:]
