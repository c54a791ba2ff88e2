"""Boundary stationary sets of a phase, their Lagrangian images and tangent frames.

On each boundary face the stationary set is the zero set of
``grad_t phi^face``.  Sphere factors (x on the e face, t on the psi face,
both at the corner) are unit vectors; the conic scaling is fixed by that
choice.  The Lagrangian image uses ``xi = grad_x phi^face``: it is a finite
vector on the e face and is normalized to a direction on the others.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .compactification import iota
from .numerics import fibonacci_directions, tangent_bases
from .phase import BOUNDARY_FACES, PhaseFunction, face_jets

__all__ = [
    "SearchConfig",
    "StationaryPoint",
    "LagrangianPoint",
    "StationaryCloud",
    "stationary_solve",
    "lambda_extend",
    "tangent_frame",
    "lagrangian_cloud",
    "all_faces",
    "neatness_report",
    "NeatnessReport",
    "compact_embedding",
    "write_cloud_csv",
]

_CHUNK = 4096
_DIVERGED = 1e8
XI_FLOOR = 1e-8


@dataclass(frozen=True)
class SearchConfig:
    n_directions: int = 64
    radii: tuple = (0.25, 0.5, 1.0, 2.0, 4.0)
    newton_tol: float = 1e-10
    keep_tol: float = 1e-9
    max_iter: int = 50
    dedupe: float = 1e-4
    seeds: tuple | None = None  # optional explicit (X, T) seed arrays


@dataclass(frozen=True)
class StationaryPoint:
    face: str
    x: np.ndarray  # unit on e / psie faces
    t: np.ndarray  # unit on psi / psie faces
    residual: float
    singular_values: tuple

    @property
    def min_singular_value(self) -> float:
        return float(min(self.singular_values)) if self.singular_values else 0.0

    def to_json(self) -> dict:
        return {
            "face": self.face,
            "x": self.x.tolist(),
            "t": self.t.tolist(),
            "residual": self.residual,
            "singular_values": list(self.singular_values),
        }


@dataclass(frozen=True)
class LagrangianPoint:
    face: str
    x: np.ndarray  # unit on e / psie faces
    xi: np.ndarray  # finite on e, unit on psi / psie
    xi_conic: np.ndarray  # grad_x phi^face, unnormalized
    source: StationaryPoint
    frame: np.ndarray | None = None  # rows (dx, dxi) in conic coordinates

    def to_json(self) -> dict:
        return {
            "face": self.face,
            "x": self.x.tolist(),
            "xi": self.xi.tolist(),
            "frame": None if self.frame is None else self.frame.tolist(),
        }


@dataclass
class StationaryCloud:
    face: str
    d: int
    s: int
    points: list
    lagrangian: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    def lambda_array(self) -> np.ndarray:
        """Compactified Lagrangian points, shape (n, 2d)."""
        if not self.lagrangian:
            return np.zeros((0, 2 * self.d))
        return np.array([lambda_embedding(p) for p in self.lagrangian])


# --- face systems -------------------------------------------------------------


def _flags(face: str) -> tuple[bool, bool]:
    if face not in BOUNDARY_FACES:
        raise ValueError(f"unknown face {face!r}")
    return face in ("e", "psie"), face in ("psi", "psie")


def _system(phi: PhaseFunction, face: str, X, T, order: int = 2):
    """``F = grad_t phi^face`` and, for order 2, the reduced Jacobian and bases."""
    d, s = phi.d, phi.s
    sx, st = _flags(face)
    Fs, Js, Bxs, Bts = [], [], [], []
    for start in range(0, X.shape[0], _CHUNK):
        sl = slice(start, start + _CHUNK)
        jets = face_jets(phi, face, X[sl], T[sl], order)
        F = jets.gradient()[:, d:]
        Fs.append(F)
        if order < 2:
            continue
        H = jets.hessian()
        Jx, Jt = H[:, d:, :d], H[:, d:, d:]
        Bx = tangent_bases(X[sl]) if sx else None
        Bt = tangent_bases(T[sl]) if st else None
        if sx:
            Jx = Jx @ Bx
        if st:
            Jt = Jt @ Bt
        Js.append(np.concatenate([Jx, Jt], axis=2))
        Bxs.append(Bx)
        Bts.append(Bt)
    F = np.concatenate(Fs) if Fs else np.zeros((0, s))
    if order < 2:
        return F
    J = np.concatenate(Js)
    Bx = np.concatenate(Bxs) if sx else None
    Bt = np.concatenate(Bts) if st else None
    return F, J, Bx, Bt


def _retract(face, d, X, T, step, Bx, Bt):
    sx, st = _flags(face)
    nx = d - 1 if sx else d
    ex, et = step[:, :nx], step[:, nx:]
    dX = np.einsum("nij,nj->ni", Bx, ex) if sx else ex
    dT = np.einsum("nij,nj->ni", Bt, et) if st else et
    Xn, Tn = X + dX, T + dT
    if sx:
        Xn /= np.linalg.norm(Xn, axis=1, keepdims=True)
    if st:
        Tn /= np.linalg.norm(Tn, axis=1, keepdims=True)
    return Xn, Tn


def _seeds(d: int, s: int, face: str, cfg: SearchConfig):
    if cfg.seeds is not None:
        X, T = (np.atleast_2d(np.asarray(a, float)) for a in cfg.seeds)
        sx, st = _flags(face)
        if sx:
            X = X / np.linalg.norm(X, axis=1, keepdims=True)
        if st:
            T = T / np.linalg.norm(T, axis=1, keepdims=True)
        return X, T
    sx, st = _flags(face)

    def factor(dim, sphere):
        dirs = fibonacci_directions(dim, cfg.n_directions)
        if sphere:
            return dirs
        return np.concatenate([np.zeros((1, dim))] + [r * dirs for r in cfg.radii])

    xs, ts = factor(d, sx), factor(s, st)
    return np.repeat(xs, len(ts), axis=0), np.tile(ts, (len(xs), 1))


def _newton(phi: PhaseFunction, face: str, X, T, cfg: SearchConfig):
    d = phi.d
    sx, st = _flags(face)
    X, T = X.copy(), T.copy()
    status = np.zeros(X.shape[0], dtype=int)  # 0 active, 1 converged, -1 failed
    for _ in range(cfg.max_iter):
        act = np.flatnonzero(status == 0)
        if act.size == 0:
            break
        F, J, Bx, Bt = _system(phi, face, X[act], T[act])
        r2 = np.sum(F * F, axis=1)
        done = np.sqrt(r2) <= cfg.newton_tol
        status[act[done]] = 1
        keep = ~done
        act, F, J, r2 = act[keep], F[keep], J[keep], r2[keep]
        if act.size == 0:
            break
        Bx = Bx[keep] if sx else None
        Bt = Bt[keep] if st else None
        # minimum-norm Gauss-Newton step
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(J, rcond=1e-12), F)
        alpha = np.ones(act.size)
        pending = np.ones(act.size, dtype=bool)
        Xa, Ta = X[act], T[act]
        for _ in range(30):
            idx = np.flatnonzero(pending)
            if idx.size == 0:
                break
            Xn, Tn = _retract(face, d, Xa[idx], Ta[idx], alpha[idx, None] * step[idx], _sub(Bx, idx), _sub(Bt, idx))
            Fn = _system(phi, face, Xn, Tn, order=1)
            ok = np.sum(Fn * Fn, axis=1) <= (1.0 - 1e-4 * alpha[idx]) * r2[idx]
            good = idx[ok]
            X[act[good]], T[act[good]] = Xn[ok], Tn[ok]
            pending[good] = False
            alpha[idx[~ok]] *= 0.5
        # no descent possible: accept if already at roundoff level, else give up
        stalled = act[pending]
        status[stalled] = np.where(np.sqrt(r2[pending]) <= cfg.keep_tol, 1, -1)
        big = np.zeros(X.shape[0], dtype=bool)
        if not sx:
            big |= np.linalg.norm(X, axis=1) > _DIVERGED
        if not st:
            big |= np.linalg.norm(T, axis=1) > _DIVERGED
        status[big & (status == 0)] = -1
    # final check on points that ran out of iterations
    act = np.flatnonzero(status == 0)
    if act.size:
        F = _system(phi, face, X[act], T[act], order=1)
        status[act[np.linalg.norm(F, axis=1) <= cfg.newton_tol]] = 1
    return X, T, status


def _sub(B, idx):
    return None if B is None else B[idx]


def compact_embedding(face: str, X, T) -> np.ndarray:
    """Points of C^face in B^d x B^s (sphere factors unchanged, others through iota)."""
    sx, st = _flags(face)
    Y = X if sx else iota(X)
    G = T if st else iota(T)
    return np.concatenate([Y, G], axis=1)


def _dedupe(points: np.ndarray, radius: float) -> np.ndarray:
    """Indices kept by a greedy pass in input order."""
    if len(points) == 0:
        return np.zeros(0, dtype=int)
    tree = cKDTree(points)
    removed = np.zeros(len(points), dtype=bool)
    kept = []
    for i in range(len(points)):
        if removed[i]:
            continue
        kept.append(i)
        for j in tree.query_ball_point(points[i], radius):
            removed[j] = True
    return np.asarray(kept, dtype=int)


def stationary_solve(phi, face: str, search: SearchConfig | None = None) -> StationaryCloud:
    """Solve ``grad_t phi^face = 0`` from a grid of seeds.

    Returns the converged, deduplicated points with residual at most
    ``keep_tol`` (recomputed independently) and the singular values of the
    face Jacobian at each point.  An empty cloud is a valid result.
    """
    phi = PhaseFunction.of(phi)
    cfg = search or SearchConfig()
    d, s = phi.d, phi.s
    X0, T0 = _seeds(d, s, face, cfg)
    X, T, status = _newton(phi, face, X0, T0, cfg)
    ok = np.flatnonzero(status == 1)
    X, T = X[ok], T[ok]
    kept = _dedupe(compact_embedding(face, X, T), cfg.dedupe)
    X, T = X[kept], T[kept]
    points = []
    if len(X):
        F, J, _, _ = _system(phi, face, X, T)
        res = np.linalg.norm(F, axis=1)
        for i in np.flatnonzero(res <= cfg.keep_tol):
            sv = np.linalg.svd(J[i], compute_uv=False)
            points.append(StationaryPoint(face, X[i].copy(), T[i].copy(), float(res[i]), tuple(map(float, sv))))
    meta = {
        "n_seeds": int(X0.shape[0]),
        "n_converged": int(ok.size),
        "dedupe_radius": cfg.dedupe,
        "newton_tol": cfg.newton_tol,
    }
    return StationaryCloud(face, d, s, points, [], meta)


# --- Lagrangian image -------------------------------------------------------------


def _lambda_batch(phi: PhaseFunction, face: str, X, T, frames: bool):
    """Conic ``xi = grad_x phi^face`` and, optionally, tangent frames, for many points."""
    d, s = phi.d, phi.s
    sx, st = _flags(face)
    G, frame_list = [], []
    for start in range(0, X.shape[0], _CHUNK):
        sl = slice(start, start + _CHUNK)
        jets = face_jets(phi, face, X[sl], T[sl], 2 if frames else 1)
        G.append(jets.gradient()[:, :d])
        if not frames:
            continue
        H = jets.hessian()
        n = H.shape[0]
        Bx = tangent_bases(X[sl]) if sx else np.broadcast_to(np.eye(d), (n, d, d))
        Bt = tangent_bases(T[sl]) if st else np.broadcast_to(np.eye(s), (n, s, s))
        J = np.concatenate([H[:, d:, :d] @ Bx, H[:, d:, d:] @ Bt], axis=2)
        _, sv, Vt = np.linalg.svd(J)
        smax = sv.max(axis=1) if sv.size else np.zeros(n)
        rank = np.sum(sv > 1e-6 * smax[:, None], axis=1) if sv.size else np.zeros(n, int)
        bad = np.flatnonzero((rank < s) | (smax == 0))
        if bad.size:
            raise ValueError(f"degenerate stationary point: Jacobian rank {int(rank[bad[0]])} < {s}")
        kernel = np.swapaxes(Vt[:, s:, :], 1, 2)  # (n, unknowns, unknowns - s)
        nx = Bx.shape[2]
        dX = np.swapaxes(Bx @ kernel[:, :nx], 1, 2)
        dT = np.swapaxes(Bt @ kernel[:, nx:], 1, 2)
        dXi = dX @ np.swapaxes(H[:, :d, :d], 1, 2) + dT @ np.swapaxes(H[:, :d, d:], 1, 2)
        frame_list.append(np.concatenate([dX, dXi], axis=2))
    G = np.concatenate(G) if G else np.zeros((0, d))
    F = np.concatenate(frame_list) if frame_list else None
    return G, F


def _make_lagrangian(face, p, g, frame):
    if face == "e":
        xi = g.copy()
    else:
        n = float(np.linalg.norm(g))
        if n <= XI_FLOOR:
            raise ValueError(
                f"λ̃_φ undefined here: grad_x phi^{face} vanishes at x={p.x.tolist()}, t={p.t.tolist()}"
                " (inconsistent with admissibility)"
            )
        xi = g / n
    return LagrangianPoint(face, p.x.copy(), xi, g.copy(), p, frame)


def lambda_extend(phi, p: StationaryPoint, with_frame: bool = False) -> LagrangianPoint:
    """Image of a stationary point under the extended map ``(x, t) -> (x, grad_x phi)``.

    On the e face ``xi`` is the finite vector ``grad_x phi^e``; on the psi
    and corner faces it is the direction of ``grad_x phi^face``.
    """
    phi = PhaseFunction.of(phi)
    G, F = _lambda_batch(phi, p.face, p.x[None], p.t[None], with_frame)
    return _make_lagrangian(p.face, p, G[0], None if F is None else F[0])


def tangent_frame(phi, p: StationaryPoint) -> np.ndarray:
    """Tangent vectors of the Lagrangian component at the image of ``p``.

    The kernel of the reduced face Jacobian (sphere factors in tangent
    charts, so the conic direction is already removed) is pushed forward
    by ``(dx, dt) -> (dx, (dx . grad_x) grad_x phi + (dt . grad_t) grad_x phi)``.
    Rows of the result are ``(dx, dxi)``; there are ``d - 1`` of them on the
    e and psi faces and ``d - 2`` at the corner.
    """
    phi = PhaseFunction.of(phi)
    _, F = _lambda_batch(phi, p.face, p.x[None], p.t[None], True)
    return F[0]


def lambda_embedding(p: LagrangianPoint) -> np.ndarray:
    """Compactified coordinates of a Lagrangian point in B^d x B^d."""
    x = p.x if p.face in ("e", "psie") else iota(p.x)
    xi = iota(p.xi) if p.face == "e" else p.xi
    return np.concatenate([x, xi])


def lagrangian_cloud(phi, face: str, search: SearchConfig | None = None, frames: bool = True) -> StationaryCloud:
    """Stationary cloud of one face together with its Lagrangian image."""
    phi = PhaseFunction.of(phi)
    cloud = stationary_solve(phi, face, search)
    if cloud.points:
        X = np.array([p.x for p in cloud.points])
        T = np.array([p.t for p in cloud.points])
        G, F = _lambda_batch(phi, face, X, T, frames)
        cloud.lagrangian = [
            _make_lagrangian(face, p, G[i], None if F is None else F[i]) for i, p in enumerate(cloud.points)
        ]
    return cloud


def all_faces(phi, search: SearchConfig | None = None, frames: bool = True) -> dict:
    return {f: lagrangian_cloud(phi, f, search, frames) for f in BOUNDARY_FACES}


# --- neatness ------------------------------------------------------------------------


@dataclass
class NeatnessReport:
    consistent: bool
    unmatched: list
    frame_dims: dict
    frame_errors: list

    def to_json(self) -> dict:
        return {
            "verdict": "consistent" if self.consistent else "inconsistent",
            "unmatched_corner_points": self.unmatched,
            "frame_dims": self.frame_dims,
            "frame_errors": self.frame_errors,
        }


def _family_limit(phi, face, x, t, R, cfg):
    """Follow the ``face`` family towards the corner point ``(x, t)``.

    A seed is placed at distance ``R`` along the non-sphere factor and
    Newton is run; the converged point's compactified image is returned,
    or None.
    """
    X0 = (R * x)[None] if face == "psi" else x[None]
    T0 = (R * t)[None] if face == "e" else t[None]
    X, T, status = _newton(phi, face, X0, T0, cfg)
    if status[0] != 1:
        return None
    return compact_embedding(face, X, T)[0]


def neatness_report(phi, clouds: dict, tol: float = 1e-3, R: float = 1e4) -> NeatnessReport:
    """Corner points must be limits of both side families; frame sizes must match.

    For every corner point, e-face and psi-face families are followed out
    to distance ``R`` and must land within ``tol`` (compactified chordal
    distance) of the corner point.
    """
    phi = PhaseFunction.of(phi)
    d = phi.d
    cfg = SearchConfig()
    unmatched = []
    corner = clouds.get("psie")
    for p in corner.points if corner is not None else []:
        target = np.concatenate([p.x, p.t])
        for side in ("e", "psi"):
            y = _family_limit(phi, side, p.x, p.t, R, cfg)
            dist = np.inf if y is None else float(np.linalg.norm(y - target))
            if dist > tol:
                unmatched.append({"x": p.x.tolist(), "t": p.t.tolist(), "family": side, "distance": dist})
    expected = {"e": d - 1, "psi": d - 1, "psie": d - 2}
    dims, errors = {}, []
    for face, cloud in clouds.items():
        sizes = sorted({lp.frame.shape[0] for lp in cloud.lagrangian if lp.frame is not None})
        dims[face] = sizes
        if any(k != expected[face] for k in sizes):
            errors.append({"face": face, "sizes": sizes, "expected": expected[face]})
    return NeatnessReport(not unmatched and not errors, unmatched, dims, errors)


def write_cloud_csv(clouds, path) -> None:
    """CSV with columns face, x1..xd, xi1..xid, residual, min_singular_value."""
    clouds = list(clouds.values()) if isinstance(clouds, dict) else list(clouds)
    d = clouds[0].d if clouds else 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["face"] + [f"x{i + 1}" for i in range(d)] + [f"xi{i + 1}" for i in range(d)] + ["residual", "min_singular_value"])
        for cloud in clouds:
            for lp in cloud.lagrangian:
                w.writerow(
                    [lp.face]
                    + [f"{v:.17g}" for v in lp.x]
                    + [f"{v:.17g}" for v in lp.xi]
                    + [f"{lp.source.residual:.6g}", f"{lp.source.min_singular_value:.6g}"]
                )
