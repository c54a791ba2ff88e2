"""Regularized oscillatory integrals and a localized decay probe.

``<I_phi(a), u>`` is computed as the ``eps -> 0`` limit of

    integral exp(i phi(x, t)) a(x, t) u(x) exp(-eps (|x|^2 + |t|^2)) dt dx

with dense trapezoid quadrature for every ``eps`` on a ladder and a
quadratic extrapolation in ``eps``.  The t-integral is carried out in
shells of growing max-norm; each shell gets its own x-step, and the
outward sweep stops once the inner x-integrals are negligible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .compactification import iota
from .expr import Expression
from .phase import PhaseFunction

__all__ = [
    "TestFunction",
    "OscIntResult",
    "RegularizationError",
    "WavefrontProbe",
    "oscint_eval",
    "direct_pairing",
    "probe_packet",
    "wavefront_probe",
    "probe_grid",
    "probe_distances",
    "write_probe_csv",
]

DEFAULT_EPS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
DEFAULT_SCALES = (2.0, 4.0, 8.0, 16.0, 32.0)
ENVELOPE_CUT = 40.0  # x-range keeps exp(-q) >= exp(-40)
STEPS_PER_PERIOD = 16
MAX_POINTS = 400_000_000
CHUNK = 2_000_000
SHELL_WIDTH = 2.0
TAIL_RTOL = 1e-13
SLOPE_THRESHOLD = -3.0
PROBE_FLOOR = 1e-9


class RegularizationError(ArithmeticError):
    """Raised when the extrapolants in eps do not settle."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class TestFunction:
    """``u(x) = p(x) exp(-(x - c)^T Q (x - c)) exp(-i w . x)``.

    ``Q`` must be symmetric positive definite, which makes ``u`` a Schwartz
    function.  ``p`` is an expression in x (``s = 0``), a string, or a number.
    """

    __test__ = False  # not a pytest class

    d: int
    envelope: np.ndarray
    center: np.ndarray = None
    prefactor: Expression | None = None
    frequency: np.ndarray = None

    def __post_init__(self):
        d = self.d
        Q = np.atleast_2d(np.asarray(self.envelope, float))
        if Q.shape != (d, d):
            raise ValueError(f"invalid input: envelope must be {d}x{d}")
        if not np.allclose(Q, Q.T) or np.linalg.eigvalsh(Q).min() <= 0:
            raise ValueError("invalid input: envelope must be symmetric positive definite")
        object.__setattr__(self, "envelope", Q)
        c = np.zeros(d) if self.center is None else np.asarray(self.center, float).reshape(d)
        object.__setattr__(self, "center", c)
        w = np.zeros(d) if self.frequency is None else np.asarray(self.frequency, float).reshape(d)
        object.__setattr__(self, "frequency", w)
        p = self.prefactor
        if isinstance(p, (int, float)):
            p = Expression.parse(repr(float(p)), d, 0)
        elif isinstance(p, str):
            p = Expression.parse(p, d, 0)
        if p is not None and (p.d, p.s) != (d, 0):
            raise ValueError("invalid input: prefactor must be an expression in x only")
        object.__setattr__(self, "prefactor", p)

    @classmethod
    def gaussian(cls, d: int, width: float = 1.0, center=None, prefactor=None, frequency=None) -> "TestFunction":
        """``exp(-|x - c|^2 / (2 width^2))`` times optional factors."""
        return cls(d, np.eye(d) / (2 * width**2), center, prefactor, frequency)

    def half_widths(self) -> np.ndarray:
        return np.sqrt(ENVELOPE_CUT * np.diag(np.linalg.inv(self.envelope)))

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, float).reshape(-1, self.d)
        Y = X - self.center
        q = np.einsum("ni,ij,nj->n", Y, self.envelope, Y)
        out = np.exp(-q) * np.exp(-1j * (X @ self.frequency))
        if self.prefactor is not None:
            out = out * self.prefactor.evaluate(X, np.zeros((len(X), 0)))
        return out

    def l1_scale(self) -> float:
        """L1 norm of the Gaussian envelope."""
        return float(np.pi ** (self.d / 2) / np.sqrt(np.linalg.det(self.envelope)))

    def to_json(self) -> dict:
        return {
            "envelope": self.envelope.tolist(),
            "center": self.center.tolist(),
            "prefactor": None if self.prefactor is None else str(self.prefactor),
            "frequency": self.frequency.tolist(),
        }


@dataclass
class OscIntResult:
    value: complex
    eps: tuple
    values: list
    extrapolants: list
    residual: float
    diagnostics: list = field(default_factory=list)

    def to_json(self) -> dict:
        cx = lambda z: [float(np.real(z)), float(np.imag(z))]  # noqa: E731
        return {
            "value": cx(self.value),
            "eps": list(self.eps),
            "values": [cx(v) for v in self.values],
            "extrapolants": [cx(v) for v in self.extrapolants],
            "residual": self.residual,
            "diagnostics": self.diagnostics,
        }


# --- quadrature --------------------------------------------------------------------


def _as_amplitude(a, d: int, s: int) -> Expression:
    if a is None:
        a = 1.0
    if isinstance(a, (int, float)):
        return Expression.parse(repr(float(a)), d, s)
    if isinstance(a, str):
        return Expression.parse(a, d, s)
    a = getattr(a, "base", a)  # classical symbols
    if (a.d, a.s) != (d, s):
        raise ValueError("invalid input: amplitude dimensions differ from the phase")
    return a


def _axis_grid(center: float, half: float, h: float) -> np.ndarray:
    k = int(np.ceil(half / h))
    return center + h * np.arange(-k, k + 1)


def _product(axes) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _cube(dim: int, radius: float, n: int = 9) -> np.ndarray:
    return _product([np.linspace(-radius, radius, n)] * dim)


def _grad_bounds(phase: Expression, xs: np.ndarray, ts: np.ndarray):
    """Largest |grad_x| and |grad_t| of ``phase`` over the product of samples."""
    d = phase.d
    X = np.repeat(xs, len(ts), axis=0)
    T = np.tile(ts, (len(xs), 1))
    gx, gt = 0.0, 0.0
    for start in range(0, len(X), CHUNK):
        g = phase.jets(X[start : start + CHUNK], T[start : start + CHUNK], 1).gradient()
        gx = max(gx, float(np.linalg.norm(g[:, :d], axis=1).max()))
        gt = max(gt, float(np.linalg.norm(g[:, d:], axis=1).max()))
    return gx, gt


def _shell_indices(s: int, lo: int, hi: int) -> np.ndarray:
    """Integer points k in Z^s with lo <= |k|_inf < hi."""
    if s == 1:
        k = np.arange(lo, hi)
        k = np.concatenate([-k[::-1][k[::-1] > 0], k]) if lo == 0 else np.concatenate([-k[::-1], k])
        return k[:, None]
    full = _product([np.arange(-hi + 1, hi)] * s).astype(int)
    m = np.abs(full).max(axis=1)
    return full[(m >= lo) & (m < hi)]


class _Integrand:
    def __init__(self, phi: PhaseFunction, a: Expression, u: TestFunction, shift: Expression | None):
        self.phi, self.a, self.u, self.shift = phi, a, u, shift
        self.d, self.s = phi.d, phi.s
        self.phase = phi.expr if shift is None else phi.expr + shift
        self.half = u.half_widths()
        self.x_radius = float(np.linalg.norm(np.abs(u.center) + self.half))
        xs = _product([np.linspace(c - h, c + h, 33 if self.d == 1 else 17) for c, h in zip(u.center, self.half)])
        self.x_samples = xs
        self.x_curv = float(np.sqrt(np.linalg.eigvalsh(u.envelope).max()))

    def theta_step(self, L: float) -> float:
        _, gt = _grad_bounds(self.phase, self.x_samples, _cube(self.s, L, 33 if self.s == 1 else 9))
        return min(np.pi / (STEPS_PER_PERIOD / 2 * max(1.25 * gt, 1e-12)), 0.25)

    def x_grid(self, radius: float):
        gx, _ = _grad_bounds(self.phase, self.x_samples, _cube(self.s, max(radius, 1e-3), 5))
        gx = 1.25 * gx + float(np.linalg.norm(self.u.frequency))
        h = min(np.pi / (STEPS_PER_PERIOD / 2 * max(gx, 1e-12)), 0.5 / self.x_curv, 0.25)
        axes = [_axis_grid(c, hw, h) for c, hw in zip(self.u.center, self.half)]
        return _product(axes), h

    def block(self, X, UX, T, Dx):
        """Inner x-sums ``G(t)`` (without weights) for every t in ``T``.

        ``Dx`` holds one x-damping column per eps; the result has shape
        ``(len(T), Dx.shape[1])``.
        """
        nx = len(X)
        out = []
        step = max(1, CHUNK // max(nx, 1))
        for start in range(0, len(T), step):
            Tc = T[start : start + step]
            XX = np.repeat(X, len(Tc), axis=0)
            TT = np.tile(Tc, (nx, 1))
            ph = self.phase.evaluate(XX, TT)
            amp = self.a.evaluate(XX, TT)
            base = (np.exp(1j * ph) * amp).reshape(nx, len(Tc)) * UX[:, None]
            out.append(base.T @ Dx)
        return np.concatenate(out)


def _regularized(integrand: _Integrand, eps, theta_radius: float | None = None, sweep: bool = True):
    """Regularized pairings for every eps in ``eps``, sharing one sweep.

    Each eps truncates t at ``6 / sqrt(eps)`` (or ``theta_radius``).
    Returns (values, diagnostics).
    """
    s, d = integrand.s, integrand.d
    eps = np.asarray(eps, float)
    if theta_radius is None:
        L = 6.0 / np.sqrt(eps)
    else:
        L = np.full(eps.shape, float(theta_radius))
    h_t = integrand.theta_step(float(L.max()))
    k_max = int(np.ceil(L.max() / h_t)) + 1
    width = max(1, int(np.ceil(SHELL_WIDTH / h_t)))
    min_radius = 2.0 * float(np.linalg.norm(integrand.u.frequency)) + 4.0
    total = np.zeros(eps.size, complex)
    mass = np.zeros(eps.size)
    done = np.zeros(eps.size, bool)
    used = np.zeros(eps.size)
    quiet = np.zeros(eps.size, int)
    points, lo = 0, 0
    h_x_all = []
    while lo < k_max and not done.all():
        hi = min(lo + width, k_max)
        T = h_t * _shell_indices(s, lo, hi)
        X, h_x = integrand.x_grid(hi * h_t)
        h_x_all.append(h_x)
        points += len(X) * len(T)
        if points > MAX_POINTS:
            raise ValueError("quadrature grid too large for the dense path")
        Dx = np.exp(-np.outer(np.sum(X * X, axis=1), eps))
        G = integrand.block(X, integrand.u(X), T, Dx) * h_x**d
        tn = np.abs(T).max(axis=1)
        G *= np.exp(-np.outer(np.sum(T * T, axis=1), eps))
        G[tn[:, None] > L[None, :]] = 0.0
        G[:, done] = 0.0
        w = h_t**s
        total += G.sum(axis=0) * w
        mass += np.abs(G).sum(axis=0) * w
        peak = np.abs(G).max(axis=0)
        lo = hi
        active = ~done
        used[active] = np.minimum(hi * h_t, L[active])
        # an eps is finished at its truncation or once its inner integrals vanish
        if sweep and hi * h_t >= min_radius:
            small = peak <= TAIL_RTOL * mass
            quiet = np.where(small, quiet + 1, 0)
            done |= quiet >= 2
        done |= hi * h_t >= L
    diags = [
        {
            "eps": float(e),
            "theta_truncation": float(Lk),
            "theta_radius_used": float(r),
            "theta_step": h_t,
            "x_step_min": min(h_x_all),
            "x_step_max": max(h_x_all),
            "points": points,
        }
        for e, Lk, r in zip(eps, L, used)
    ]
    return [complex(v) for v in total], diags


def _quadratic_at_zero(e, v) -> complex:
    e0, e1, e2 = e
    l0 = e1 * e2 / ((e0 - e1) * (e0 - e2))
    l1 = e0 * e2 / ((e1 - e0) * (e1 - e2))
    l2 = e0 * e1 / ((e2 - e0) * (e2 - e1))
    return l0 * v[0] + l1 * v[1] + l2 * v[2]


def oscint_eval(phi, a, u: TestFunction, eps_ladder=DEFAULT_EPS, phase_shift=None) -> OscIntResult:
    """``<I_phi(a), u>`` by Gaussian regularization and extrapolation in eps.

    ``phase_shift`` is an optional real expression ``r`` whose factor
    ``exp(i r)`` multiplies the amplitude (for remainders split off a phase).
    For a test function modulated at frequency ``w`` the ladder is scaled
    by ``(1 + |w|)^-2``, which keeps ``eps |w|^2`` small.  Raises
    :class:`RegularizationError` when the extrapolants stop settling along
    the ladder.
    """
    phi = PhaseFunction.of(phi)
    d, s = phi.d, phi.s
    if u.d != d:
        raise ValueError("invalid input: test function dimension differs from the phase")
    if isinstance(phase_shift, str):
        phase_shift = Expression.parse(phase_shift, d, s)
    ladder = tuple(sorted((float(e) for e in eps_ladder), reverse=True))
    if len(ladder) < 3:
        raise ValueError("invalid input: the eps ladder needs at least three entries")
    # a modulated test function lives at frequency |w|; damping must stay below it
    shrink = (1.0 + float(np.linalg.norm(u.frequency))) ** -2
    eps = tuple(e * shrink for e in ladder)
    integrand = _Integrand(phi, _as_amplitude(a, d, s), u, phase_shift)
    values, diags = _regularized(integrand, eps)
    extr = [_quadratic_at_zero(eps[j : j + 3], values[j : j + 3]) for j in range(len(eps) - 2)]
    value = extr[-1]
    changes = [abs(extr[j + 1] - extr[j]) for j in range(len(extr) - 1)]
    residual = changes[-1] if changes else 0.0
    noise = 1e-10 * max(1.0, abs(value))
    if len(changes) >= 2 and changes[-1] > changes[-2] and changes[-1] > noise:
        raise RegularizationError(
            "regularization unstable",
            {"eps": list(eps), "values": [str(v) for v in values], "changes": changes},
        )
    return OscIntResult(value, eps, values, extr, float(residual), diags)


def direct_pairing(phi, a, u: TestFunction, theta_radius: float = 12.0, phase_shift=None) -> complex:
    """Unregularized dense quadrature over ``|t|_inf <= theta_radius`` (Schwartz amplitudes only)."""
    phi = PhaseFunction.of(phi)
    if isinstance(phase_shift, str):
        phase_shift = Expression.parse(phase_shift, phi.d, phi.s)
    integrand = _Integrand(phi, _as_amplitude(a, phi.d, phi.s), u, phase_shift)
    values, _ = _regularized(integrand, [0.0], theta_radius=theta_radius, sweep=False)
    return values[0]


# --- wave-front probe ----------------------------------------------------------------------


@dataclass
class WavefrontProbe:
    x0: np.ndarray
    direction: np.ndarray
    scales: tuple
    magnitudes: list
    floors: list
    slope: float
    verdict: str

    @property
    def flagged(self) -> bool:
        return self.verdict == "possible wave-front direction"

    def to_json(self) -> dict:
        return {
            "x0": self.x0.tolist(),
            "direction": self.direction.tolist(),
            "scales": list(self.scales),
            "magnitudes": self.magnitudes,
            "floors": self.floors,
            "slope": self.slope,
            "verdict": self.verdict,
        }


def probe_packet(d: int, x0, direction, scale: float) -> TestFunction:
    """``exp(-scale |x - x0|^2 / 2) exp(-i scale direction . x)``."""
    return TestFunction(d, 0.5 * scale * np.eye(d), x0, None, scale * np.asarray(direction, float))


def wavefront_probe(phi, a, x0, xi_dir, scale_ladder=DEFAULT_SCALES, eps_ladder=DEFAULT_EPS) -> WavefrontProbe:
    """Decay rate of ``F(lam) = <I_phi(a), packet(x0, xi_dir, lam)>`` along the scale ladder.

    The packet is a Gaussian of width ``lam^(-1/2)`` at ``x0`` modulated by
    ``exp(-i lam xi_dir . x)``.  The fitted slope of ``log|F|`` against
    ``log lam`` is the decay exponent; values below a resolution floor
    (``1e-9 (2 pi)^s`` times the packet's L1 norm) are clipped to it.  The
    verdict is "regular direction" when the slope is at most -3 or when
    every value past the first scale lies below the floor.
    """
    phi = PhaseFunction.of(phi)
    d = phi.d
    x0 = np.asarray(x0, float).reshape(d)
    xi = np.asarray(xi_dir, float).reshape(d)
    norm = float(np.linalg.norm(xi))
    if norm == 0:
        raise ValueError("invalid input: probe direction must be nonzero")
    xi = xi / norm
    mags, floors = [], []
    for lam in scale_ladder:
        u = probe_packet(d, x0, xi, lam)
        res = oscint_eval(phi, a, u, eps_ladder)
        mags.append(float(abs(res.value)))
        floors.append(PROBE_FLOOR * (2 * np.pi) ** phi.s * u.l1_scale())
    logs = np.log(np.asarray(scale_ladder, float))
    clipped = np.log(np.maximum(mags, floors))
    slope = float(np.polyfit(logs, clipped, 1)[0])
    below = all(m <= f for m, f in zip(mags[1:], floors[1:]))
    regular = slope <= SLOPE_THRESHOLD or below
    verdict = "regular direction" if regular else "possible wave-front direction"
    return WavefrontProbe(x0, xi, tuple(scale_ladder), mags, floors, slope, verdict)


def probe_grid(phi, a, locations, directions, **kw) -> list:
    return [wavefront_probe(phi, a, x0, xi, **kw) for x0 in locations for xi in directions]


def probe_distances(probes, clouds) -> list:
    """Compactified distance from each probe ``(iota(x0), xi)`` to the Lagrangian clouds."""
    pts = [c.lambda_array() for c in (clouds.values() if isinstance(clouds, dict) else clouds)]
    pts = [p for p in pts if len(p)]
    cloud = np.concatenate(pts) if pts else np.zeros((0, 0))
    out = []
    for p in probes:
        y = np.concatenate([iota(p.x0), p.direction])
        out.append(float(np.linalg.norm(cloud - y, axis=1).min()) if len(cloud) else float("inf"))
    return out


def write_probe_csv(probes, path) -> None:
    """CSV with columns x0, xi, slope, verdict (indexed per component when d > 1)."""
    probes = list(probes)
    d = len(probes[0].x0) if probes else 1
    xcols = ["x0"] if d == 1 else [f"x0_{i + 1}" for i in range(d)]
    xicols = ["xi"] if d == 1 else [f"xi_{i + 1}" for i in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(xcols + xicols + ["slope", "verdict"])
        for p in probes:
            w.writerow([repr(float(v)) for v in p.x0] + [repr(float(v)) for v in p.direction] + [repr(p.slope), p.verdict])
