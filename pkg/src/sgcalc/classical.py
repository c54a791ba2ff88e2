"""Classical SG symbols: principal triples, principal parts and boundary checks.

A classical symbol of order ``(m_e, m_psi)`` has three leading homogeneous
components:

* ``e``    : ``a_e(x, t)``, homogeneous of degree ``m_e`` in ``x``;
* ``psi``  : ``a_psi(x, t)``, homogeneous of degree ``m_psi`` in ``t``;
* ``psie`` : ``a_psie(x, t)``, homogeneous in both.

They are obtained here as extrapolated radial limits of jets, so derivatives
of the components come for free (derivatives commute with the limits).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compactification import NotClassicalError, boundary_mesh, face_points, transport_many
from .expr import BinOp, Call, Const, Expression, JetBatch, Vec
from .numerics import DEFAULT_RADII, richardson_limit
from .symbols import OrderPair

__all__ = [
    "COMPONENTS",
    "ClassicalSymbol",
    "Excision",
    "PrincipalTriple",
    "CompatibilityReport",
    "EllipticityReport",
    "component_jets",
    "principal_component",
    "extend_homogeneous",
    "principal_part",
    "compatibility_check",
    "ellipticity_check",
]

COMPONENTS = ("e", "psi", "psie")
_ALIASES = {"e": "e", "psi": "psi", "ψ": "psi", "psie": "psie", "ψe": "psie"}
HOMOGENEITY_SCALES = (2.0, 3.0, 5.0)


def _which(which: str) -> str:
    try:
        return _ALIASES[which]
    except KeyError:
        raise ValueError(f"unknown component {which!r}; use one of {COMPONENTS}") from None


@dataclass(frozen=True)
class Excision:
    """Smooth cut-off ``chi(z) = S((|z| - inner)/(outer - inner))``, clamped to [0, 1]."""

    inner: float = 1.0
    outer: float = 2.0

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise ValueError("excision needs 0 < inner < outer")

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        n = np.abs(z) if z.ndim == 0 else np.linalg.norm(z, axis=-1)
        u = np.clip((n - self.inner) / (self.outer - self.inner), 0.0, 1.0)
        return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)

    def node(self, kind: str) -> Call:
        return Call("excise", (Vec(kind), Const(self.inner), Const(self.outer)))


@dataclass(frozen=True)
class PrincipalTriple:
    e: Expression
    psi: Expression
    psie: Expression

    def __post_init__(self):
        dims = {(f.d, f.s) for f in (self.e, self.psi, self.psie)}
        if len(dims) != 1:
            raise ValueError("triple components have different dimensions")

    @property
    def dims(self) -> tuple[int, int]:
        return self.e.d, self.e.s

    def component(self, which: str) -> Expression:
        return getattr(self, _which(which))

    @classmethod
    def parse(cls, texts, d: int, s: int) -> "PrincipalTriple":
        e, psi, psie = (Expression.parse(t, d, s) for t in texts)
        return cls(e, psi, psie)


def _random_points(d, s, n, rng):
    X = rng.uniform(-3, 3, (n, d))
    T = rng.uniform(-3, 3, (n, s))
    # keep away from the singular sets of homogeneous functions
    X[np.linalg.norm(X, axis=1) < 0.1] += 0.5
    if s:
        T[np.linalg.norm(T, axis=1) < 0.1] += 0.5
    return X, T


def homogeneity_error(f: Expression, degree_x: float | None, degree_t: float | None, n: int = 20, seed: int = 0):
    """Largest relative error of ``f(mu x, mu' t) = mu^deg ...`` over mu in {2, 3, 5}."""
    rng = np.random.default_rng(seed)
    X, T = _random_points(f.d, f.s, n, rng)
    base = f.evaluate(X, T)
    worst = 0.0
    for mu in HOMOGENEITY_SCALES:
        mx = mu if degree_x is not None else 1.0
        mt = mu if degree_t is not None else 1.0
        expect = base * mx ** (degree_x or 0.0) * mt ** (degree_t or 0.0)
        got = f.evaluate(mx * X, mt * T)
        err = np.abs(got - expect) / np.maximum(np.abs(expect), 1e-300)
        err = np.where(np.abs(expect) + np.abs(got) < 1e-14, 0.0, err)
        worst = max(worst, float(err.max()))
    return worst


@dataclass(frozen=True)
class ClassicalSymbol:
    """A symbol expression with its order and, optionally, a declared triple."""

    base: Expression
    order: OrderPair
    triple: PrincipalTriple | None = None

    def __post_init__(self):
        object.__setattr__(self, "order", OrderPair.of(self.order))
        if self.triple is not None:
            if self.triple.dims != self.dims:
                raise ValueError("declared triple has the wrong dimensions")
            self.check_homogeneity()

    @property
    def dims(self) -> tuple[int, int]:
        return self.base.d, self.base.s

    def check_homogeneity(self, rtol: float = 1e-9) -> None:
        """Raise ``ValueError`` if a declared component has the wrong degree."""
        m_e, m_psi = self.order
        t = self.triple
        for name, f, dx, dt in (
            ("e", t.e, m_e, None),
            ("psi", t.psi, None, m_psi),
            ("psie", t.psie, m_e, m_psi),
        ):
            err = homogeneity_error(f, dx, dt)
            if err > rtol:
                raise ValueError(f"declared {name} component is not homogeneous of the stated degree (rel. error {err:.3g})")


def _as_symbol(a, order=None) -> ClassicalSymbol:
    if isinstance(a, ClassicalSymbol):
        return a
    if order is None:
        raise TypeError("order is required for a bare Expression")
    return ClassicalSymbol(a, OrderPair.of(order))


def _scaled_jets(a: ClassicalSymbol, which: str, X, T, order: int, radii):
    """Richardson-extrapolated jets of the ``which`` component.

    Returns ``(JetBatch, converged)``.  The derivative ``D_t^alpha D_x^beta``
    of the scaled sample picks up ``r^{|beta|}`` (x scaled) or
    ``r^{|alpha|}`` (t scaled), which is how derivatives of the component
    are computed.
    """
    f = a.base
    d, s = f.d, f.s
    m_e, m_psi = a.order
    X, T = f.points(X, T)
    n = X.shape[0]
    radii = np.asarray(radii, dtype=float)
    k = radii.size
    sx = which in ("e", "psie")
    st = which in ("psi", "psie")
    Xs = (radii[:, None, None] * X[None]) if sx else np.broadcast_to(X, (k, n, d))
    Ts = (radii[:, None, None] * T[None]) if st else np.broadcast_to(T, (k, n, s))
    jets = f.jets(Xs.reshape(k * n, d), Ts.reshape(k * n, s), order)
    alg = jets._alg
    coef = jets._coef.reshape(len(alg.monomials), k, n)
    deg_x = np.array([sum(m[:d]) for m in alg.monomials], dtype=float)
    deg_t = np.array([sum(m[d:]) for m in alg.monomials], dtype=float)
    expo = np.zeros_like(deg_x)
    if sx:
        expo += deg_x - m_e
    if st:
        expo += deg_t - m_psi
    samples = coef * radii[None, :, None] ** expo[:, None, None]
    lim = richardson_limit(np.moveaxis(samples, 1, 0), radii)
    converged = np.all(lim.converged, axis=0)
    return JetBatch(d, s, order, alg, lim.value), converged


def _check_directions(which, X, T, tol=1e-9):
    if which in ("e", "psie") and np.any(np.abs(np.linalg.norm(X, axis=1) - 1.0) > tol):
        raise ValueError("the x direction must be a unit vector for this component")
    if which in ("psi", "psie") and np.any(np.abs(np.linalg.norm(T, axis=1) - 1.0) > tol):
        raise ValueError("the t direction must be a unit vector for this component")


def component_jets(a, which: str, x, t, order: int = 0, *, source: str = "limit", radii=DEFAULT_RADII):
    """Jets of a principal component at a batch of points.

    Parameters
    ----------
    a : ClassicalSymbol
    which : {"e", "psi", "psie"}
    x, t : array_like
        Points; for the limit source the scaled factor must be a unit vector.
    order : int
        Jet order.
    source : {"limit", "declared"}
        Radial extrapolation of the base symbol or the declared triple.
    """
    which = _which(which)
    a = _as_symbol(a)
    if source == "declared":
        if a.triple is None:
            raise ValueError("no declared triple")
        f = a.triple.component(which)
        return f.jets(x, t, order)
    X, T = a.base.points(x, t)
    _check_directions(which, X, T)
    jets, ok = _scaled_jets(a, which, X, T, order, radii)
    if not np.all(ok):
        i = int(np.argmin(ok))
        raise NotClassicalError(
            f"not classical in the {which} expansion at x={X[i].tolist()}, t={T[i].tolist()}"
        )
    return jets


def principal_component(
    a,
    which: str,
    x,
    t,
    alpha=None,
    beta=None,
    *,
    order=None,
    cross_check: bool = True,
    rtol: float = 1e-6,
) -> float:
    """Value of ``D_t^alpha D_x^beta`` of one principal component at a point.

    Unit directions are required in the scaled factors.  When the symbol has
    a declared triple the extrapolated value is compared against it.
    """
    a = _as_symbol(a, order)
    which = _which(which)
    d, s = a.dims
    alpha = tuple(alpha) if alpha is not None else (0,) * s
    beta = tuple(beta) if beta is not None else (0,) * d
    k = sum(alpha) + sum(beta)
    jets = component_jets(a, which, x, t, k)
    value = float(jets.derivative(alpha, beta)[0])
    if cross_check and a.triple is not None:
        ref = float(a.triple.component(which).jets(x, t, k).derivative(alpha, beta)[0])
        if abs(ref - value) > rtol * max(1.0, abs(ref)):
            raise ValueError(
                f"declared {which} component disagrees with the radial limit ({ref:.12g} vs {value:.12g})"
            )
    return value


def extend_homogeneous(a, which: str, x, t, *, order=None) -> np.ndarray:
    """Evaluate a component at arbitrary nonzero points by homogeneity.

    The limit is taken at the normalized directions and rescaled by
    ``|x|^m_e`` and/or ``|t|^m_psi``.
    """
    a = _as_symbol(a, order)
    which = _which(which)
    X, T = a.base.points(x, t)
    m_e, m_psi = a.order
    scale = np.ones(X.shape[0])
    if which in ("e", "psie"):
        nx = np.linalg.norm(X, axis=1)
        X = X / nx[:, None]
        scale *= nx**m_e
    if which in ("psi", "psie"):
        nt = np.linalg.norm(T, axis=1)
        T = T / nt[:, None]
        scale *= nt**m_psi
    return scale * component_jets(a, which, X, T, 0).value


def principal_part(triple: PrincipalTriple, excisions=(Excision(), Excision())) -> Expression:
    """Glue a triple into ``chi_e a_e + chi_psi (a_psi - chi_e a_psie)``.

    The result is an ordinary :class:`Expression`; the cut-offs appear as
    ``excise`` nodes, so jets are exact and the singular homogeneous factors
    are never differentiated where the cut-off vanishes.
    """
    d, s = triple.dims
    chi_e, chi_psi = excisions
    ce, cp = chi_e.node("x"), chi_psi.node("t")
    root = BinOp(
        "+",
        BinOp("*", ce, triple.e.root),
        BinOp("*", cp, BinOp("-", triple.psi.root, BinOp("*", ce, triple.psie.root))),
    )
    return Expression(root, d, s)


@dataclass
class CompatibilityReport:
    passed: bool
    max_error: float
    witness: dict | None
    n_pairs: int

    def to_json(self) -> dict:
        return {"passed": self.passed, "max_error": self.max_error, "witness": self.witness, "n_pairs": self.n_pairs}


def _unit_pairs(d, s, n, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    T = rng.standard_normal((n, s))
    return X / np.linalg.norm(X, axis=1, keepdims=True), T / np.linalg.norm(T, axis=1, keepdims=True)


def compatibility_check(triple: PrincipalTriple, order, n_pairs: int = 20, tol: float = 1e-6, seed: int = 0):
    """Check that both iterated limits of the triple agree with its corner part.

    The psi-limit of ``a_e`` and the e-limit of ``a_psi`` are extrapolated
    at random unit direction pairs and compared with ``a_psie``.
    """
    order = OrderPair.of(order)
    d, s = triple.dims
    X, T = _unit_pairs(d, s, n_pairs, seed)
    corner = triple.psie.evaluate(X, T)
    sym_e = ClassicalSymbol(triple.e, order)
    sym_p = ClassicalSymbol(triple.psi, order)
    from_e, ok_e = _scaled_jets(sym_e, "psi", X, T, 0, DEFAULT_RADII)
    from_p, ok_p = _scaled_jets(sym_p, "e", X, T, 0, DEFAULT_RADII)
    scale = np.maximum(1.0, np.abs(corner))
    err = np.maximum(np.abs(from_e.value - corner), np.abs(from_p.value - corner)) / scale
    err = np.where(ok_e & ok_p, err, np.inf)
    i = int(np.argmax(err))
    worst = float(err[i])
    witness = None
    if worst > tol:
        witness = {
            "x_dir": X[i].tolist(),
            "t_dir": T[i].tolist(),
            "psi_limit_of_e": float(from_e.value[i]),
            "e_limit_of_psi": float(from_p.value[i]),
            "corner": float(corner[i]),
        }
    return CompatibilityReport(worst <= tol, worst, witness, n_pairs)


@dataclass
class EllipticityReport:
    elliptic: bool
    min_abs: float
    max_abs: float
    argmin: dict
    face_minima: dict
    eps_ell: float
    face_argmin: dict | None = None

    @property
    def verdict(self) -> str:
        return "elliptic" if self.elliptic else "not elliptic"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "min_abs": self.min_abs,
            "max_abs": self.max_abs,
            "argmin": self.argmin,
            "face_minima": self.face_minima,
            "eps_ell": self.eps_ell,
            "face_argmin": self.face_argmin,
        }


def ellipticity_check(a, eps_ell: float = 1e-6, n_dir: int = 32, *, order=None) -> EllipticityReport:
    """Minimum of ``|transported a|`` over a mesh of the three boundary faces.

    The symbol is elliptic when that minimum exceeds ``eps_ell`` times the
    largest sampled value.  Ties in the minimum go to the lowest mesh index.
    """
    a = _as_symbol(a, order)
    d, s = a.dims
    ys, gs, on_e, on_psi = boundary_mesh(d, s, n_dir)
    vals, ok, change = transport_many(a.base, a.order, ys, gs, on_e, on_psi)
    if not np.all(ok):
        i = int(np.argmin(ok))
        raise NotClassicalError(f"not classical at y={ys[i].tolist()}, gamma={gs[i].tolist()}")
    mags = np.abs(vals)
    i = int(np.argmin(mags))  # argmin returns the first index on ties
    vmax = float(mags.max())
    labels = np.where(on_e & on_psi, "psie", np.where(on_e, "e", "psi"))
    minima, where = {}, {}
    for f in ("e", "psi", "psie"):
        idx = np.flatnonzero(labels == f)
        if idx.size:
            j = idx[np.argmin(mags[idx])]
            minima[f] = float(mags[j])
            where[f] = face_points(ys[j : j + 1], gs[j : j + 1], on_e[j : j + 1], on_psi[j : j + 1])[0].to_json()
    point = face_points(ys[i : i + 1], gs[i : i + 1], on_e[i : i + 1], on_psi[i : i + 1])[0]
    min_abs = float(mags[i])
    elliptic = min_abs > eps_ell * max(vmax, 1e-300)
    return EllipticityReport(elliptic, min_abs, vmax, point.to_json(), minima, eps_ell, where)
