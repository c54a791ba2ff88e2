"""Radial compactification of R^d onto the open unit ball and symbol transport.

Outside the ball of radius 3 the map is ``x -> (x/|x|)(1 - 1/|x|)``.  Inside
we write ``iota(x) = x * Q(|x|^2)`` where ``Q`` is the quadratic Taylor
polynomial at ``r^2 = 9`` of ``(r - 1)/r^2``.  This choice is C^2 across
``|x| = 3``, smooth at the origin and strictly increasing (checked in tests).

The boundary defining function is ``1 - h(y)`` with ``h(y) = |y|`` for
``|y| > 2/3`` and ``h(y) = |y|^2 q(|y|^2)`` below, ``q`` being the quadratic
Taylor polynomial of ``v**-0.5`` at ``v = 4/9`` (C^2 matching again).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .expr import Expression
from .numerics import DEFAULT_RADII, richardson_limit

__all__ = [
    "FACES",
    "BoundaryError",
    "FacePoint",
    "NotClassicalError",
    "RadialProfile",
    "PROFILE",
    "iota",
    "iota_inv",
    "bdf",
    "face_classify",
    "transport",
    "transport_many",
    "transport_field",
    "compact_distance",
    "boundary_mesh",
    "face_points",
]

FACES = ("interior", "e", "psi", "psie")
INNER = 3.0
H_SWITCH = 2.0 / 3.0
BOUNDARY_GAP = 1e-12


class BoundaryError(ValueError):
    """A boundary point was given where an interior point is required."""


class NotClassicalError(ArithmeticError):
    """Radial extrapolation did not settle, so no boundary value exists."""


@dataclass(frozen=True)
class RadialProfile:
    """Scalar profiles ``rho`` and ``h`` behind the compactification."""

    def rho(self, r):
        r = np.asarray(r, dtype=float)
        u = r * r
        inner = r * (2.0 / 9.0 - (u - 9.0) / 162.0 + (u - 9.0) ** 2 / 5832.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            outer = (r - 1.0) / r
        return np.where(r >= INNER, outer, inner)

    def rho_inv(self, value: float) -> float:
        if value >= 2.0 / 3.0:
            return 1.0 / (1.0 - value)
        if value <= 0.0:
            return 0.0
        return brentq(lambda r: float(self.rho(r)) - value, 0.0, INNER, xtol=1e-16)

    def h(self, norm):
        n = np.asarray(norm, dtype=float)
        v = n * n
        w = v - 4.0 / 9.0
        inner = v * (1.5 - 27.0 / 16.0 * w + 729.0 / 256.0 * w * w)
        return np.where(n > H_SWITCH, n, inner)


PROFILE = RadialProfile()


def iota(x) -> np.ndarray:
    """Map points of R^d (shape (..., d)) into the open unit ball."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(r > 0, PROFILE.rho(r) / np.where(r > 0, r, 1.0), 2.0 / 9.0 + 9.0 / 162.0 + 81.0 / 5832.0)
    return x * scale


def iota_inv(y) -> np.ndarray:
    """Inverse of :func:`iota` on the open ball (shape (..., d))."""
    y = np.asarray(y, dtype=float)
    flat = y.reshape(-1, y.shape[-1]) if y.ndim else y.reshape(1, 1)
    out = np.empty_like(flat)
    for i, p in enumerate(flat):
        n = float(np.linalg.norm(p))
        if n >= 1.0 - BOUNDARY_GAP:
            raise BoundaryError("boundary point not invertible")
        if n == 0.0:
            out[i] = 0.0
        elif n > 2.0 / 3.0:
            out[i] = p / n / (1.0 - n)
        else:
            out[i] = p / n * PROFILE.rho_inv(n)
    return out.reshape(y.shape)


def bdf(y) -> np.ndarray:
    """Boundary defining function ``1 - h(y)`` (positive inside, zero on the sphere)."""
    y = np.asarray(y, dtype=float)
    return 1.0 - PROFILE.h(np.linalg.norm(y, axis=-1))


@dataclass(frozen=True)
class FacePoint:
    """A point of B^d x B^s tagged with its boundary stratum."""

    face: str
    y: tuple
    gamma: tuple

    def __post_init__(self):
        if self.face not in FACES:
            raise ValueError(f"unknown face {self.face!r}")

    @property
    def index(self) -> int:
        return int(self.face in ("e", "psie")) + int(self.face in ("psi", "psie"))

    @property
    def y_arr(self) -> np.ndarray:
        return np.asarray(self.y, dtype=float)

    @property
    def gamma_arr(self) -> np.ndarray:
        return np.asarray(self.gamma, dtype=float)

    def to_json(self) -> dict:
        return {"face": self.face, "y": list(map(float, self.y)), "gamma": list(map(float, self.gamma))}

    @classmethod
    def from_json(cls, data: dict) -> "FacePoint":
        p = face_classify(data["y"], data["gamma"])
        if "face" in data and data["face"] != p.face:
            raise ValueError(f"face label {data['face']!r} does not match the point ({p.face})")
        return p


def face_classify(y: Sequence[float], gamma: Sequence[float], tol: float = 1e-9) -> FacePoint:
    """Stratum of ``(y, gamma)``; norms within ``tol`` of one are snapped to the sphere."""
    y = np.asarray(y, dtype=float).reshape(-1)
    g = np.asarray(gamma, dtype=float).reshape(-1)
    ny, ng = np.linalg.norm(y), np.linalg.norm(g)
    if ny > 1 + tol or ng > 1 + tol:
        raise ValueError(f"invalid point: |y|={ny:.6g}, |gamma|={ng:.6g} outside the closed ball")
    on_e = abs(ny - 1.0) <= tol
    on_psi = g.size > 0 and abs(ng - 1.0) <= tol
    if on_e:
        y = y / ny
    if on_psi:
        g = g / ng
    face = {(False, False): "interior", (True, False): "e", (False, True): "psi", (True, True): "psie"}[
        (on_e, bool(on_psi))
    ]
    return FacePoint(face, tuple(y.tolist()), tuple(g.tolist()))


def _order_tuple(order) -> tuple[float, float]:
    if hasattr(order, "m_e"):
        return float(order.m_e), float(order.m_psi)
    return float(order[0]), float(order[1])


def transport_field(
    fn,
    order,
    ys: np.ndarray,
    gammas: np.ndarray,
    on_e: np.ndarray,
    on_psi: np.ndarray,
    radii=DEFAULT_RADII,
    tol: float = 1e-5,
):
    """Transport a batch-evaluated field ``fn(X, T) -> (N, ...)`` to B^d x B^s.

    Interior factors use the exact formula; factors on the sphere are sent to
    infinity along ``r_k`` and extrapolated.  Returns ``(values, converged,
    change)``; ``converged`` is reduced over trailing axes.
    """
    m_e, m_psi = _order_tuple(order)
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    gammas = np.asarray(gammas, dtype=float).reshape(ys.shape[0], -1)
    on_e = np.asarray(on_e, dtype=bool)
    on_psi = np.asarray(on_psi, dtype=bool)
    n = ys.shape[0]
    x_fixed = np.zeros_like(ys)
    t_fixed = np.zeros_like(gammas)
    w_fixed = np.ones(n)
    for i in range(n):
        if not on_e[i]:
            x_fixed[i] = iota_inv(ys[i])
            w_fixed[i] *= float(bdf(ys[i])) ** m_e
        if not on_psi[i] and gammas.shape[1]:
            t_fixed[i] = iota_inv(gammas[i])
            w_fixed[i] *= float(bdf(gammas[i])) ** m_psi
    radii = np.asarray(radii, dtype=float)
    k = radii.size
    X = np.where(on_e[None, :, None], radii[:, None, None] * ys[None], x_fixed[None])
    T = np.where(on_psi[None, :, None], radii[:, None, None] * gammas[None], t_fixed[None])
    scale = np.ones((k, n))
    scale *= np.where(on_e[None], radii[:, None] ** (-m_e), 1.0)
    scale *= np.where(on_psi[None], radii[:, None] ** (-m_psi), 1.0)
    vals = np.asarray(fn(X.reshape(k * n, -1), T.reshape(k * n, -1)), dtype=float)
    tail = vals.shape[1:]
    vals = vals.reshape((k, n) + tail)
    extra = (None,) * len(tail)
    samples = vals * (scale * w_fixed[None])[(...,) + extra]
    boundary = (on_e | on_psi)[(...,) + extra]
    lim = richardson_limit(samples, radii, tol=tol)
    values = np.where(boundary, lim.value, samples[0])
    converged = np.where(boundary, lim.converged, True)
    change = np.where(boundary, lim.change, 0.0)
    if tail:
        axes = tuple(range(1, 1 + len(tail)))
        converged = np.all(converged, axis=axes)
        change = np.max(change, axis=axes)
    return values, converged, change


def transport_many(
    a: Expression,
    order,
    ys: np.ndarray,
    gammas: np.ndarray,
    on_e: np.ndarray,
    on_psi: np.ndarray,
    radii=DEFAULT_RADII,
    tol: float = 1e-5,
):
    """Vectorised transport of an expression; see :func:`transport_field`."""
    return transport_field(a.evaluate, order, ys, gammas, on_e, on_psi, radii, tol)


def transport(a: Expression, order, p: FacePoint, radii=DEFAULT_RADII, tol: float = 1e-5) -> float:
    """Value at ``p`` of the compactified symbol ``bdf^m_e * bdf^m_psi * a``."""
    on_e = p.face in ("e", "psie")
    on_psi = p.face in ("psi", "psie")
    vals, ok, change = transport_many(
        a, order, p.y_arr[None], p.gamma_arr[None], np.array([on_e]), np.array([on_psi]), radii, tol
    )
    if not ok[0]:
        raise NotClassicalError(
            f"not classical at {p.to_json()}: extrapolants still move by {change[0]:.3g}"
        )
    return float(vals[0])


def compact_distance(p, q) -> float:
    """Chordal distance between points of R^n after compactification."""
    return float(np.linalg.norm(iota(np.asarray(p, float)) - iota(np.asarray(q, float))))


def boundary_mesh(d: int, s: int, n_dir: int = 32, radii=(0.0, 0.3, 0.6, 0.9)):
    """Sample points on the three boundary strata of B^d x B^s.

    Returns ``(ys, gammas, on_e, on_psi)``.  Interior ball factors use the
    given compactified radii times the mesh directions (plus the centre).
    """
    from .numerics import mesh_directions

    def ball(dim):
        if dim == 0:
            return np.zeros((1, 0))
        dirs = mesh_directions(dim, n_dir)
        pts = [np.zeros((1, dim))] + [r * dirs for r in radii if r > 0]
        return np.concatenate(pts)

    sx = mesh_directions(d, n_dir)
    bx = ball(d)
    parts = []
    # exit face: unit y, interior gamma
    bt = ball(s)
    parts.append((np.repeat(sx, len(bt), 0), np.tile(bt, (len(sx), 1)), True, False))
    if s:
        st = mesh_directions(s, n_dir)
        parts.append((np.repeat(bx, len(st), 0), np.tile(st, (len(bx), 1)), False, True))
        parts.append((np.repeat(sx, len(st), 0), np.tile(st, (len(sx), 1)), True, True))
    ys = np.concatenate([p[0] for p in parts])
    gs = np.concatenate([p[1] for p in parts])
    on_e = np.concatenate([np.full(len(p[0]), p[2]) for p in parts])
    on_psi = np.concatenate([np.full(len(p[0]), p[3]) for p in parts])
    return ys, gs, on_e, on_psi


def face_points(ys, gammas, on_e, on_psi) -> list:
    """FacePoint objects for mesh rows."""
    names = {(False, False): "interior", (True, False): "e", (False, True): "psi", (True, True): "psie"}
    return [
        FacePoint(names[(bool(a), bool(b))], tuple(map(float, y)), tuple(map(float, g)))
        for y, g, a, b in zip(ys, gammas, on_e, on_psi)
    ]
