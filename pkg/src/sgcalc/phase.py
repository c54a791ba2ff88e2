"""SG-classical phase functions of order (1, 1): admissibility and non-degeneracy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import (
    ClassicalSymbol,
    PrincipalTriple,
    compatibility_check,
    component_jets,
    principal_part,
)
from .compactification import boundary_mesh, face_points, transport_field
from .expr import Expression
from .numerics import mesh_directions, orthonormal_complement, tangent_bases
from .symbols import OrderPair, check_estimates, weight

__all__ = [
    "PhaseFunction",
    "AdmissibilityReport",
    "NondegeneracyReport",
    "big_phi",
    "admissibility_check",
    "face_jets",
    "face_jacobian",
    "nondegeneracy_check",
    "nondegeneracy_batch",
    "split_remainder",
]

PHASE_ORDER = OrderPair(1.0, 1.0)
BOUNDARY_FACES = ("e", "psi", "psie")
RANK_RTOL = 1e-6


@dataclass(frozen=True)
class PhaseFunction:
    """Real phase ``phi(x, t)`` of order (1, 1), optionally with its triple."""

    symbol: ClassicalSymbol

    def __post_init__(self):
        if tuple(self.symbol.order) != (1.0, 1.0):
            raise ValueError("phase functions must have order (1, 1)")
        if self.symbol.base.s < 1:
            raise ValueError("a phase function needs at least one fiber variable")
        if self.symbol.triple is not None:
            rep = compatibility_check(self.symbol.triple, PHASE_ORDER)
            if not rep.passed:
                raise ValueError(f"declared principal triple is not compatible: {rep.witness}")

    @classmethod
    def parse(cls, text: str, d: int, s: int, triple=None) -> "PhaseFunction":
        tri = PrincipalTriple.parse(triple, d, s) if triple is not None else None
        return cls(ClassicalSymbol(Expression.parse(text, d, s), PHASE_ORDER, tri))

    @classmethod
    def of(cls, value, triple: PrincipalTriple | None = None) -> "PhaseFunction":
        if isinstance(value, PhaseFunction):
            return value
        if isinstance(value, ClassicalSymbol):
            return cls(value)
        return cls(ClassicalSymbol(value, PHASE_ORDER, triple))

    @property
    def expr(self) -> Expression:
        return self.symbol.base

    @property
    def triple(self) -> PrincipalTriple | None:
        return self.symbol.triple

    @property
    def d(self) -> int:
        return self.expr.d

    @property
    def s(self) -> int:
        return self.expr.s

    def __str__(self) -> str:
        return str(self.expr)


def big_phi(phi, x, t) -> np.ndarray | float:
    """``<x>^2 |grad_x phi|^2 + <t>^2 |grad_t phi|^2`` at one or many points."""
    phi = PhaseFunction.of(phi)
    X, T = phi.expr.points(x, t)
    g = phi.expr.jets(X, T, 1).gradient()
    gx, gt = g[:, : phi.d], g[:, phi.d :]
    out = weight(X) ** 2 * np.sum(gx * gx, axis=1) + weight(T) ** 2 * np.sum(gt * gt, axis=1)
    out = np.atleast_1d(out)
    return float(out[0]) if np.ndim(x) <= 1 and out.size == 1 else out


@dataclass
class AdmissibilityReport:
    admissible: bool
    interior_min: float
    boundary_min: float
    R: float
    eps_ell: float
    witness: dict
    boundary_witness: dict

    @property
    def verdict(self) -> str:
        return "admissible" if self.admissible else "not admissible"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "interior_min_ratio": self.interior_min,
            "boundary_min": self.boundary_min,
            "R": self.R,
            "eps_ell": self.eps_ell,
            "witness": self.witness,
            "boundary_witness": self.boundary_witness,
        }


def _dyadic_mesh(d: int, s: int, R: float, n_dir: int, top: int):
    radii = np.concatenate([[0.0], 2.0 ** np.arange(0, top + 1)])
    xs = np.concatenate([np.zeros((1, d))] + [r * mesh_directions(d, n_dir) for r in radii[1:]])
    ts = np.concatenate([np.zeros((1, s))] + [r * mesh_directions(s, n_dir) for r in radii[1:]])
    X = np.repeat(xs, len(ts), axis=0)
    T = np.tile(ts, (len(xs), 1))
    keep = np.linalg.norm(X, axis=1) + np.linalg.norm(T, axis=1) >= R
    return X[keep], T[keep]


def _gradient_field(phi: PhaseFunction, part: str):
    d = phi.d

    def fn(X, T):
        g = phi.expr.jets(X, T, 1).gradient()
        return g[:, :d] if part == "x" else g[:, d:]

    return fn


def admissibility_check(phi, R: float = 8.0, eps_ell: float = 1e-6, n_dir: int = 16, top: int = 12) -> AdmissibilityReport:
    """Ellipticity of ``big_phi`` away from a compact set, plus its boundary form.

    The interior part is the minimum of ``big_phi / (<x>^2 <t>^2)`` over a
    dyadic mesh restricted to ``|x| + |t| >= R``.  The boundary part is the
    minimum over a mesh of the three faces of the length of the transported
    pair ``(grad_x phi, grad_t phi)`` with orders (0, 1) and (1, 0).
    """
    phi = PhaseFunction.of(phi)
    d, s = phi.d, phi.s
    X, T = _dyadic_mesh(d, s, R, n_dir, top)
    ratio = big_phi(phi, X, T) / (weight(X) ** 2 * weight(T) ** 2)
    i = int(np.argmin(ratio))
    witness = {"x": X[i].tolist(), "t": T[i].tolist(), "ratio": float(ratio[i])}

    ys, gs, on_e, on_psi = boundary_mesh(d, s, n_dir=32)
    gx, ok_x, _ = transport_field(_gradient_field(phi, "x"), (0, 1), ys, gs, on_e, on_psi)
    gt, ok_t, _ = transport_field(_gradient_field(phi, "t"), (1, 0), ys, gs, on_e, on_psi)
    norms = np.sqrt(np.sum(gx * gx, axis=1) + np.sum(gt * gt, axis=1))
    norms = np.where(ok_x & ok_t, norms, 0.0)
    j = int(np.argmin(norms))
    bpoint = face_points(ys[j : j + 1], gs[j : j + 1], on_e[j : j + 1], on_psi[j : j + 1])[0]
    bwitness = dict(bpoint.to_json(), value=float(norms[j]))
    ok = bool(ratio[i] > eps_ell and norms[j] > eps_ell)
    return AdmissibilityReport(ok, float(ratio[i]), float(norms[j]), R, eps_ell, witness, bwitness)


# --- face components and non-degeneracy ---------------------------------------


def face_jets(phi, face: str, X, T, order: int, source: str | None = None):
    """Jets of the ``face`` component of ``phi``.

    The declared triple is used when present, otherwise radial limits.
    """
    phi = PhaseFunction.of(phi)
    if source is None:
        source = "declared" if phi.triple is not None else "limit"
    return component_jets(phi.symbol, face, X, T, order, source=source)


def face_jacobian(phi, face: str, x, t, source: str | None = None):
    """Jacobian of ``grad_t phi^face`` in face-adapted coordinates.

    Sphere factors (x on the e face, t on the psi face, both at the corner)
    are differentiated along an orthonormal tangent basis at the point;
    ball factors use plain coordinates.  Returns ``(J, values)`` where
    ``values`` is ``grad_t phi^face`` at the point.
    """
    phi = PhaseFunction.of(phi)
    d, s = phi.d, phi.s
    x = np.asarray(x, float).reshape(d)
    t = np.asarray(t, float).reshape(s)
    H = face_jets(phi, face, x[None], t[None], 2, source).hessian()[0]
    g = face_jets(phi, face, x[None], t[None], 1, source).gradient()[0]
    Fx = H[d:, :d]  # d(grad_t)/dx, shape (s, d)
    Ft = H[d:, d:]
    if face in ("e", "psie"):
        Fx = Fx @ orthonormal_complement(x)
    if face in ("psi", "psie"):
        Ft = Ft @ orthonormal_complement(t)
    return np.hstack([Fx, Ft]), g[d:]


@dataclass
class NondegeneracyReport:
    rank: int
    smallest_singular_value: float
    largest_singular_value: float
    nondegenerate: bool

    @property
    def verdict(self) -> str:
        return "non-degenerate" if self.nondegenerate else "degenerate"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "rank": self.rank,
            "smallest_singular_value": self.smallest_singular_value,
            "largest_singular_value": self.largest_singular_value,
        }


def singular_rank(J: np.ndarray, s: int, rtol: float = RANK_RTOL):
    sv = np.linalg.svd(J, compute_uv=False) if J.size else np.zeros(0)
    smax = float(sv.max()) if sv.size else 0.0
    rank = int(np.sum(sv > rtol * smax)) if smax > 0 else 0
    smallest = float(sv[s - 1]) if sv.size >= s else 0.0
    return rank, smallest, smax


def nondegeneracy_check(phi, point, source: str | None = None) -> NondegeneracyReport:
    """Rank test of the face Jacobian at a stationary point.

    ``point`` is anything with ``face``, ``x`` and ``t`` attributes (a
    stationary point), with ``x`` (resp. ``t``) a unit vector on the
    e (resp. psi) side.
    """
    phi = PhaseFunction.of(phi)
    face = getattr(point, "face", None)
    if face not in BOUNDARY_FACES:
        raise ValueError(f"invalid input: stationary point must lie on a boundary face, got {face!r}")
    J, _ = face_jacobian(phi, face, point.x, point.t, source)
    rank, smallest, largest = singular_rank(J, phi.s)
    return NondegeneracyReport(rank, smallest, largest, rank == phi.s and smallest > RANK_RTOL * largest)


def nondegeneracy_batch(phi, face: str, X, T, source: str | None = None):
    """Vectorized rank test at many points of one face.

    Returns ``(ranks, smallest, largest, nondegenerate)`` arrays with the
    same thresholds as :func:`nondegeneracy_check`.  Singular values do not
    depend on the choice of tangent basis, so the two agree.
    """
    phi = PhaseFunction.of(phi)
    if face not in BOUNDARY_FACES:
        raise ValueError(f"invalid input: stationary points must lie on a boundary face, got {face!r}")
    d, s = phi.d, phi.s
    X = np.atleast_2d(np.asarray(X, float)).reshape(-1, d)
    T = np.atleast_2d(np.asarray(T, float)).reshape(-1, s)
    if len(X) == 0:
        empty = np.zeros(0)
        return empty.astype(int), empty, empty, empty.astype(bool)
    H = face_jets(phi, face, X, T, 2, source).hessian()
    Fx, Ft = H[:, d:, :d], H[:, d:, d:]
    if face in ("e", "psie"):
        Fx = Fx @ tangent_bases(X)
    if face in ("psi", "psie"):
        Ft = Ft @ tangent_bases(T)
    sv = np.linalg.svd(np.concatenate([Fx, Ft], axis=2), compute_uv=False)
    largest = sv.max(axis=1)
    ranks = np.sum(sv > RANK_RTOL * largest[:, None], axis=1) * (largest > 0)
    smallest = sv[:, s - 1] if sv.shape[1] >= s else np.zeros(len(X))
    ok = (ranks == s) & (smallest > RANK_RTOL * largest)
    return ranks, smallest, largest, ok


def split_remainder(phi, check: bool = True):
    """Split ``phi = phi_p + r`` with ``phi_p`` the glued principal part.

    The remainder ``r`` is of order (0, 0) and can be moved into an
    amplitude as the factor ``exp(i r)``.  Requires a declared triple.
    """
    phi = PhaseFunction.of(phi)
    if phi.triple is None:
        raise ValueError("splitting off the remainder needs a declared principal triple")
    principal = principal_part(phi.triple)
    rest = phi.expr - principal
    if check:
        rep = check_estimates(rest, (0, 0), max_deriv=1)
        if not rep.passed:
            raise ValueError(f"remainder is not of order (0, 0): {rep.witness}")
    return PhaseFunction(ClassicalSymbol(principal, PHASE_ORDER, phi.triple)), rest
