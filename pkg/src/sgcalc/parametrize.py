"""Phases from Lagrangian graph data, round trips, and principal-level equivalence.

Coordinates are split as ``x = (x', x'')`` with ``x'`` the first ``s``
entries; the fiber variable ``t`` plays the role of ``xi'``.  Graph data
are vectors of expressions on ``(x, t)`` that may only involve ``x''``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial import cKDTree

from .classical import ClassicalSymbol, PrincipalTriple, homogeneity_error, principal_part
from .expr import BinOp, Call, Const, Expression, Neg, Pow, Var, Vec
from .numerics import DEFAULT_RADII, richardson_limit
from .phase import PHASE_ORDER, BOUNDARY_FACES, PhaseFunction, face_jets
from .stationary import (
    SearchConfig,
    StationaryPoint,
    all_faces,
    lambda_embedding,
    lambda_extend,
)
from .symbols import weight

__all__ = [
    "LagrangianGraphData",
    "BuiltPhase",
    "Signature",
    "RoundtripReport",
    "EquivalenceVerdict",
    "NoSmallSolution",
    "build_phase",
    "extract_graph_data",
    "roundtrip_verify",
    "signature_of",
    "hessian_signature",
    "solve_W",
    "equivalence_check",
]

HOMOGENEITY_RTOL = 1e-9
IDENTITY_TOL = 1e-8
CONORMAL_TOL = 1e-7
ROUNDTRIP_TOL = 1e-4
MATCH_TOL = 1e-4
VALUE_TOL = 1e-6
STATIONARY_TOL = 1e-8


# --- graph data -----------------------------------------------------------------


def _walk(node):
    yield node
    if isinstance(node, (Neg,)):
        yield from _walk(node.arg)
    elif isinstance(node, BinOp):
        yield from _walk(node.left)
        yield from _walk(node.right)
    elif isinstance(node, Pow):
        yield from _walk(node.base)
    elif isinstance(node, Call):
        for a in node.args:
            yield from _walk(a)


def _as_vector(items, d: int, s: int, length: int, name: str) -> tuple:
    items = list(items or [])
    if len(items) != length:
        raise ValueError(f"invalid input: {name} needs {length} components, got {len(items)}")
    out = []
    for f in items:
        f = Expression.parse(f, d, s) if isinstance(f, str) else f
        if (f.d, f.s) != (d, s):
            raise ValueError(f"invalid input: {name} has dimensions {(f.d, f.s)}, expected {(d, s)}")
        for node in _walk(f.root):
            if isinstance(node, Vec) and node.kind == "x":
                raise ValueError(f"invalid input: {name} may not use the whole vector x, only x{s + 1}..x{d}")
            if isinstance(node, Var) and node.kind == "x" and node.index <= s:
                raise ValueError(f"invalid input: {name} depends on x{node.index}; only x{s + 1}..x{d} are allowed")
        out.append(f)
    return tuple(out)


@dataclass(frozen=True)
class LagrangianGraphData:
    """Graph parametrization of the two side components of a Lagrangian.

    * ``e_position`` (s components) and ``e_covector`` (d - s components)
      describe the e-side component ``{(e_position, x''; t, e_covector)}``;
      ``e_position`` is 1-homogeneous and ``e_covector`` 0-homogeneous in ``x''``.
    * ``psi_position`` (s components) and ``psi_covector`` (d - s components)
      describe the psi-side component; ``psi_position`` is 0-homogeneous
      and ``psi_covector`` 1-homogeneous in ``t``.
    * ``corner`` optionally fixes the corner component of the built phase.
    """

    d: int
    s: int
    e_position: tuple
    e_covector: tuple
    psi_position: tuple
    psi_covector: tuple
    corner: Expression | None = None

    def __post_init__(self):
        d, s = self.d, self.s
        if not 1 <= s <= d:
            raise ValueError("invalid input: need 1 <= s <= d")
        m = d - s
        object.__setattr__(self, "e_position", _as_vector(self.e_position, d, s, s, "e_position"))
        object.__setattr__(self, "e_covector", _as_vector(self.e_covector, d, s, m, "e_covector"))
        object.__setattr__(self, "psi_position", _as_vector(self.psi_position, d, s, s, "psi_position"))
        object.__setattr__(self, "psi_covector", _as_vector(self.psi_covector, d, s, m, "psi_covector"))
        if isinstance(self.corner, str):
            object.__setattr__(self, "corner", Expression.parse(self.corner, d, s))

    @classmethod
    def zero_section(cls, d: int) -> "LagrangianGraphData":
        """Graph data of the Fourier phase ``x . t`` with ``s = d``."""
        return cls(d, d, ["0"] * d, [], ["0"] * d, [])

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "s": self.s,
            "e_position": [str(f) for f in self.e_position],
            "e_covector": [str(f) for f in self.e_covector],
            "psi_position": [str(f) for f in self.psi_position],
            "psi_covector": [str(f) for f in self.psi_covector],
            "corner": None if self.corner is None else str(self.corner),
        }

    # expression helpers

    def _zero(self) -> Expression:
        return Expression(Const(0.0), self.d, self.s)

    def _pairing(self, first, second) -> Expression:
        terms = [a * b for a, b in zip(first, second) if not (_is_zero(a) or _is_zero(b))]
        out = terms[0] if terms else self._zero()
        for term in terms[1:]:
            out = out + term
        return out

    def _vars(self, kind: str, indices) -> list:
        return [Expression(Var(kind, i), self.d, self.s) for i in indices]

    def primed_x(self) -> list:
        return self._vars("x", range(1, self.s + 1))

    def double_primed_x(self) -> list:
        return self._vars("x", range(self.s + 1, self.d + 1))

    def fiber(self) -> list:
        return self._vars("t", range(1, self.s + 1))


def _is_zero(f: Expression) -> bool:
    return isinstance(f.root, Const) and f.root.value == 0.0


def _sample(d, s, n, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-3, 3, (n, d))
    T = rng.uniform(-3, 3, (n, s))
    for A, lo in ((X[:, s:], s < d), (T, True)):
        if lo:
            small = np.linalg.norm(A, axis=1) < 0.3
            A[small] += 0.7
    return X, T


def check_graph_data(G: LagrangianGraphData, n: int = 20, seed: int = 0) -> dict:
    """Largest homogeneity errors (relative) and identity residuals (absolute).

    Raises ``ValueError`` ("invalid input") if a homogeneity error exceeds
    1e-9.  Identity residuals are returned, not judged.
    """
    homog = {}
    for name, items, dx, dt in (
        ("e_position", G.e_position, 1.0, None),
        ("e_covector", G.e_covector, 0.0, None),
        ("psi_position", G.psi_position, None, 0.0),
        ("psi_covector", G.psi_covector, None, 1.0),
    ):
        err = max((homogeneity_error(f, dx, dt, n=n, seed=seed) for f in items), default=0.0)
        homog[name] = err
        if err > HOMOGENEITY_RTOL:
            raise ValueError(f"invalid input: {name} is not homogeneous of the declared degree (rel. error {err:.3g})")
    return {"homogeneity": homog, "identities": graph_identities(G, n, seed)}


def graph_identities(G: LagrangianGraphData, n: int = 20, seed: int = 0) -> dict:
    """Residuals of the four graph identities at random points.

    ``e_position + grad_t(x'' . e_covector) = 0``,
    ``grad_x''(t . psi_position) + psi_covector = 0``,
    ``(x'' . grad_x'') e_covector = 0`` and ``(t . grad_t) psi_position = 0``.
    """
    d, s = G.d, G.s
    X, T = _sample(d, s, n, seed)
    out = {}
    e_gen = G._pairing(G.double_primed_x(), G.e_covector)
    g = e_gen.jets(X, T, 1).gradient()[:, d:]
    pos = np.stack([f.evaluate(X, T) for f in G.e_position], axis=1)
    out["e_position"] = float(np.abs(pos + g).max())
    psi_gen = G._pairing(G.fiber(), G.psi_position)
    g = psi_gen.jets(X, T, 1).gradient()[:, s:d]
    cov = np.stack([f.evaluate(X, T) for f in G.psi_covector], axis=1) if G.psi_covector else np.zeros((n, 0))
    out["psi_covector"] = float(np.abs(g + cov).max()) if cov.size else 0.0
    euler_x = 0.0
    for f in G.e_covector:
        gx = f.jets(X, T, 1).gradient()[:, s:d]
        euler_x = max(euler_x, float(np.abs(np.sum(X[:, s:] * gx, axis=1)).max()))
    out["e_covector_euler"] = euler_x
    euler_t = 0.0
    for f in G.psi_position:
        gt = f.jets(X, T, 1).gradient()[:, d:]
        euler_t = max(euler_t, float(np.abs(np.sum(T * gt, axis=1)).max()))
    out["psi_position_euler"] = euler_t
    return out


# --- building the phase ---------------------------------------------------------------


@dataclass(frozen=True)
class BuiltPhase:
    e: Expression
    psi: Expression
    psie: Expression
    phase: PhaseFunction
    checks: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.e, self.psi, self.psie, self.phase))


def _radial_limit(f: Expression, X, T, along: str):
    radii = DEFAULT_RADII
    samples = []
    for r in radii:
        samples.append(f.evaluate(r * X, T) / r if along == "x" else f.evaluate(X, r * T) / r)
    return richardson_limit(np.array(samples), radii).value


def conormality_defect(e_part: Expression, psi_part: Expression, n: int = 20, seed: int = 0) -> float:
    """Largest ``|lim_t e_part - lim_x psi_part|`` at random corner directions."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, e_part.d))
    T = rng.normal(size=(n, e_part.s))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    T /= np.linalg.norm(T, axis=1, keepdims=True)
    a = _radial_limit(e_part, X, T, "t")
    b = _radial_limit(psi_part, X, T, "x")
    return float(np.abs(a - b).max())


def _plus(a: Expression, b: Expression) -> Expression:
    if _is_zero(b) or (isinstance(b.root, Neg) and isinstance(b.root.arg, Const) and b.root.arg.value == 0.0):
        return a
    return a + b


def build_phase(G: LagrangianGraphData, fiber_offset=None) -> BuiltPhase:
    """Phase whose side components are parametrized by ``G``.

    ``phi_e = x' . t + x'' . e_covector`` and
    ``phi_psi = x' . t - psi_position . t``, glued with the default
    excisions.  The discarded fiber variables ``xi''`` are frozen at
    ``fiber_offset`` (default 0); neither component depends on them.
    """
    d, s = G.d, G.s
    offset = np.zeros(d - s) if fiber_offset is None else np.asarray(fiber_offset, float).reshape(d - s)
    checks = check_graph_data(G)
    base = G._pairing(G.primed_x(), G.fiber())
    phi_e = _plus(base, G._pairing(G.double_primed_x(), G.e_covector))
    phi_psi = _plus(base, -G._pairing(G.psi_position, G.fiber()))
    defect = conormality_defect(phi_e, phi_psi)
    checks["conormality_defect"] = defect
    if not defect <= CONORMAL_TOL:
        raise ValueError(f"graph data violates conormality (corner defect {defect:.3g})")
    bad = {k: v for k, v in checks["identities"].items() if not v <= IDENTITY_TOL}
    if bad:
        raise ValueError(f"invalid input: graph identities fail {bad}")
    if G.corner is not None:
        corner = G.corner
    elif homogeneity_error(phi_e, None, 1.0) <= HOMOGENEITY_RTOL:
        corner = phi_e
    elif homogeneity_error(phi_psi, 1.0, None) <= HOMOGENEITY_RTOL:
        corner = phi_psi
    else:
        raise ValueError("invalid input: neither side component is bihomogeneous; supply a corner component")
    triple = PrincipalTriple(phi_e, phi_psi, corner)
    glued = principal_part(triple)
    checks["fiber_offset"] = offset.tolist()
    return BuiltPhase(phi_e, phi_psi, corner, PhaseFunction(ClassicalSymbol(glued, PHASE_ORDER, triple)), checks)


def extract_graph_data(phi, search: SearchConfig | None = None) -> LagrangianGraphData:
    """Graph data read off the stationary clouds of a phase with ``d = s = 1``.

    The psi component is ``{(c_sign, t)}`` with ``c_sign`` the x-value of the
    stationary point over ``t = sign``; the e component must be empty.
    """
    phi = PhaseFunction.of(phi)
    if (phi.d, phi.s) != (1, 1):
        raise ValueError("graph extraction is only supported for d = s = 1")
    clouds = all_faces(phi, search, frames=False)
    if len(clouds["e"]):
        raise ValueError("graph extraction needs an empty e component")
    values = {}
    for p in clouds["psi"].points:
        key = 1 if p.t[0] > 0 else -1
        if key in values and abs(values[key] - p.x[0]) > 1e-8:
            raise ValueError("psi component is not a graph over the fiber sphere")
        values[key] = float(p.x[0])
    if set(values) != {1, -1}:
        raise ValueError("psi component does not cover both fiber directions")
    mean = 0.5 * (values[1] + values[-1])
    half = 0.5 * (values[1] - values[-1])
    pos = Expression(Const(mean), 1, 1)
    if half != 0.0:
        odd = Expression(Const(half), 1, 1) * Expression.parse("t1/norm2(t)", 1, 1)
        pos = odd if mean == 0.0 else pos + odd
    return LagrangianGraphData(1, 1, ["0"], [], [pos], [])


# --- round trip -------------------------------------------------------------------------


@dataclass
class RoundtripReport:
    hausdorff: dict
    passed: bool
    tol: float
    diagnosis: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        return {
            "hausdorff": {k: (v if np.isfinite(v) else None) for k, v in self.hausdorff.items()},
            "tol": self.tol,
            "verdict": self.verdict,
            "diagnosis": self.diagnosis,
        }


def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    """Symmetric Hausdorff distance between point sets (inf if exactly one is empty)."""
    if len(A) == 0 and len(B) == 0:
        return 0.0
    if len(A) == 0 or len(B) == 0:
        return float("inf")
    ab = cKDTree(B).query(A)[0].max()
    ba = cKDTree(A).query(B)[0].max()
    return float(max(ab, ba))


def roundtrip_verify(phi_src, phi_rec, search: SearchConfig | None = None, tol: float = ROUNDTRIP_TOL) -> RoundtripReport:
    """Per-face Hausdorff distance between the compactified Lagrangian clouds."""
    src = all_faces(PhaseFunction.of(phi_src), search, frames=False)
    rec = all_faces(PhaseFunction.of(phi_rec), search, frames=False)
    dist, notes = {}, []
    for face in BOUNDARY_FACES:
        A, B = src[face].lambda_array(), rec[face].lambda_array()
        dist[face] = hausdorff(A, B)
        if (len(A) == 0) != (len(B) == 0):
            side = "reconstruction" if len(B) == 0 else "source"
            notes.append(f"{face} component empty for the {side} only")
        elif dist[face] > tol:
            notes.append(f"{face} clouds differ by {dist[face]:.3g}")
    return RoundtripReport(dist, all(v <= tol for v in dist.values()), tol, notes)


# --- signatures and the W equation --------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    n_plus: int
    n_minus: int
    n_zero: int

    def __iter__(self):
        return iter((self.n_plus, self.n_minus, self.n_zero))

    def to_json(self) -> list:
        return [self.n_plus, self.n_minus, self.n_zero]


def signature_of(H: np.ndarray, rtol: float = 1e-8) -> Signature:
    """Inertia of a symmetric matrix; eigenvalues below ``rtol * max|eig|`` count as zero."""
    H = np.asarray(H, float)
    ev = np.linalg.eigvalsh(0.5 * (H + H.T)) if H.size else np.zeros(0)
    cut = rtol * (np.abs(ev).max() if ev.size else 0.0)
    plus = int(np.sum(ev > cut))
    minus = int(np.sum(ev < -cut))
    return Signature(plus, minus, int(ev.size) - plus - minus)


def hessian_signature(phi, p) -> Signature:
    """Signature of the fiber Hessian of the face component at ``p``.

    Sphere factors of ``p`` are already unit vectors, which is the
    representative where the weighted Hessian is evaluated.
    """
    phi = PhaseFunction.of(phi)
    H = face_jets(phi, p.face, np.asarray(p.x, float)[None], np.asarray(p.t, float)[None], 2).hessian()[0]
    return signature_of(H[phi.d :, phi.d :])


class NoSmallSolution(ValueError):
    pass


def solve_W(B, C, tol: float = 1e-12, max_iter: int = 200, bound: float = 1e3, residual_tol: float = 1e-10) -> np.ndarray:
    """Solve ``W + W^T C W = B`` by the iteration ``W <- B - W^T C W`` from ``W = B``."""
    B = np.atleast_2d(np.asarray(B, float))
    C = np.atleast_2d(np.asarray(C, float))
    W = B.copy()
    for _ in range(max_iter):
        nxt = B - W.T @ C @ W
        if not np.all(np.isfinite(nxt)) or np.linalg.norm(nxt) > bound:
            raise NoSmallSolution("no small solution found (iterates diverge)")
        step = np.linalg.norm(nxt - W)
        W = nxt
        if step <= tol:
            break
    else:
        raise NoSmallSolution(f"no small solution found within {max_iter} iterations")
    residual = np.linalg.norm(W + W.T @ C @ W - B)
    if residual > residual_tol:
        raise NoSmallSolution(f"no small solution found (residual {residual:.3g})")
    return W


# --- equivalence ---------------------------------------------------------------------------


@dataclass
class EquivalenceVerdict:
    same_lagrangian: bool
    values_agree: bool
    signatures_match: bool
    solver_W: np.ndarray | None
    verdict: str
    distance: float = 0.0
    value_gap: float = 0.0
    matched: dict = field(default_factory=dict)
    witness: dict | None = None

    def to_json(self) -> dict:
        return {
            "same_lagrangian": self.same_lagrangian,
            "values_agree": self.values_agree,
            "signatures_match": self.signatures_match,
            "solver_W": None if self.solver_W is None else np.asarray(self.solver_W).tolist(),
            "verdict": self.verdict,
            "distance": self.distance if np.isfinite(self.distance) else None,
            "value_gap": self.value_gap,
            "matched": self.matched,
            "witness": self.witness,
        }


def _region_filter(region) -> Callable:
    if region is None:
        return lambda p: True
    if callable(region):
        return region

    def inside(p):
        for key, vec in (("x_norm", p.x), ("t_norm", p.t)):
            bounds = region.get(key)
            # bounds only restrict finite (non-sphere) factors
            if bounds is None or (key == "x_norm" and p.face != "psi") or (key == "t_norm" and p.face != "e"):
                continue
            n = float(np.linalg.norm(vec))
            if not bounds[0] <= n <= bounds[1]:
                return False
        return True

    return inside


def _image_system(phi: PhaseFunction, face: str, x, target, tvec):
    d, s = phi.d, phi.s
    sphere = face in ("psi", "psie")
    nt = float(np.linalg.norm(tvec))
    tn = tvec / nt if sphere else tvec
    jets = face_jets(phi, face, x[None], tn[None], 2)
    g = jets.gradient()[0]
    H = jets.hessian()[0]
    gx, gt = g[:d], g[d:]
    Hxt, Htt = H[:d, d:], H[d:, d:]
    if face == "e":
        img, dimg = gx, Hxt
    else:
        n = max(float(np.linalg.norm(gx)), 1e-300)
        img = gx / n
        dimg = (np.eye(d) - np.outer(img, img)) / n @ Hxt
    res = np.concatenate([gt, img - target])
    J = np.vstack([Htt, dimg])
    if sphere:
        J = J @ ((np.eye(s) - np.outer(tn, tn)) / nt)
    return res, J, tn


def _polish(phi: PhaseFunction, face: str, x, target, t0):
    """Fiber point over ``x`` whose stationary image is ``(x, target)``."""
    fun = lambda t: _image_system(phi, face, x, target, t)[0]  # noqa: E731
    jac = lambda t: _image_system(phi, face, x, target, t)[1]  # noqa: E731
    sol = least_squares(fun, np.asarray(t0, float), jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    _, _, tn = _image_system(phi, face, x, target, sol.x)
    return tn


def _transported_value(phi: PhaseFunction, face: str, x, t) -> float:
    v = float(face_jets(phi, face, x[None], t[None], 0).value[0])
    if face == "psi":
        v /= float(weight(x[None])[0])
    if face == "e":
        v /= float(weight(t[None])[0])
    return v


def _match_side(phi_a, cloud_a, phi_b, cloud_b, keep, max_points):
    """Match points of ``cloud_a`` on the Lagrangian of ``phi_b``.

    Returns a list of dicts with the polished partner, or ``None`` entries
    for points without a partner.
    """
    face = cloud_a.face
    pts = [lp for lp in cloud_a.lagrangian if keep(lp.source)]
    if len(pts) > max_points:
        pts = [pts[i] for i in np.linspace(0, len(pts) - 1, max_points).round().astype(int)]
    others = [lp for lp in cloud_b.lagrangian if keep(lp.source)] or list(cloud_b.lagrangian)
    out = []
    if not pts:
        return out
    if not others:
        return [{"a": lp, "b": None, "distance": float("inf")} for lp in pts]
    tree = cKDTree(np.array([lambda_embedding(q) for q in others]))
    for lp in pts:
        img = lambda_embedding(lp)
        _, j = tree.query(img)
        x = lp.x
        t = _polish(phi_b, face, x, lp.xi, others[j].source.t)
        gt = face_jets(phi_b, face, x[None], t[None], 1).gradient()[0, phi_b.d :]
        res = float(np.linalg.norm(gt))
        partner = StationaryPoint(face, x.copy(), t, res, ())
        lq = lambda_extend(phi_b, partner) if res <= STATIONARY_TOL else None
        dist = float(np.linalg.norm(lambda_embedding(lq) - img)) if lq is not None else float("inf")
        out.append({"a": lp, "b": partner if lq is not None else None, "distance": dist})
    return out


def equivalence_check(
    phi1,
    phi2,
    region=None,
    search: SearchConfig | None = None,
    match_tol: float = MATCH_TOL,
    value_tol: float = VALUE_TOL,
    max_points: int = 64,
) -> EquivalenceVerdict:
    """Necessary conditions for two phases to be equivalent at the principal level.

    Stationary points of each phase (restricted to ``region``) are matched
    onto the other phase's Lagrangian: the nearest cloud point by
    compactified image seeds a least-squares polish of the fiber variable
    over the same base point.  Matched pairs are then compared by their
    transported phase values and by the signatures of their fiber Hessians.

    ``region`` is None, a predicate on stationary points, or a mapping with
    optional ``x_norm`` (psi face) and ``t_norm`` (e face) bounds.
    """
    phi1 = PhaseFunction.of(phi1)
    phi2 = PhaseFunction.of(phi2)
    if (phi1.d, phi1.s) != (phi2.d, phi2.s):
        raise ValueError("invalid input: phases have different dimensions")
    keep = _region_filter(region)
    c1 = all_faces(phi1, search, frames=False)
    c2 = all_faces(phi2, search, frames=False)
    distance, gap = 0.0, 0.0
    same = values = sigs = True
    witness = None
    matched = {}
    for face in BOUNDARY_FACES:
        forward = _match_side(phi1, c1[face], phi2, c2[face], keep, max_points)
        backward = _match_side(phi2, c2[face], phi1, c1[face], keep, max_points)
        matched[face] = len(forward)
        for k, pairs in enumerate((forward, backward)):
            first, second = (phi1, phi2) if k == 0 else (phi2, phi1)
            for m in pairs:
                a = m["a"].source
                distance = max(distance, m["distance"])
                if m["b"] is None or m["distance"] > match_tol:
                    if same:
                        witness = {"check": "lagrangian", "face": face, "x": a.x.tolist(), "t": a.t.tolist(), "phase": k + 1}
                    same = False
                    continue
                b = m["b"]
                dv = abs(_transported_value(first, face, a.x, a.t) - _transported_value(second, face, b.x, b.t))
                gap = max(gap, dv)
                if dv > value_tol and values:
                    values = False
                    witness = witness or {"check": "value", "face": face, "x": a.x.tolist(), "gap": dv}
                sa, sb = hessian_signature(first, a), hessian_signature(second, b)
                if sa != sb and sigs:
                    sigs = False
                    witness = witness or {
                        "check": "signature",
                        "face": face,
                        "x": a.x.tolist(),
                        "t": a.t.tolist(),
                        "signatures": [sa.to_json(), sb.to_json()] if k == 0 else [sb.to_json(), sa.to_json()],
                    }
    if not same:
        verdict = "Lagrangians differ"
    elif not values:
        verdict = "values differ"
    elif not sigs:
        verdict = "signature mismatch"
    else:
        verdict = "equivalent (principal level)"
    return EquivalenceVerdict(same, values, sigs, None, verdict, distance, gap, matched, witness)
