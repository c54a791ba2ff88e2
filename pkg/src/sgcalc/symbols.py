"""SG symbol classes: order bookkeeping, weights and sampled estimate checks.

A symbol ``a(x, t)`` of order ``(m_e, m_psi)`` satisfies

    |D_t^alpha D_x^beta a| <= C <x>^(m_e - |beta|) <t>^(m_psi - |alpha|)

with ``<v> = sqrt(1 + |v|^2)``.  :func:`check_estimates` records the
smallest constants compatible with a finite sample set and flags growth
along dyadic rays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import Expression
from .numerics import fibonacci_directions

__all__ = ["OrderPair", "SampleConfig", "EstimateReport", "weight", "check_estimates"]

SLOPE_LIMIT = 0.1
_CHUNK = 16384


def weight(v) -> np.ndarray | float:
    """Japanese bracket sqrt(1 + |v|^2) along the last axis."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return float(np.sqrt(1.0 + v * v))
    out = np.sqrt(1.0 + np.sum(v * v, axis=-1))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class OrderPair:
    m_e: float
    m_psi: float

    def __post_init__(self):
        if not (np.isfinite(self.m_e) and np.isfinite(self.m_psi)):
            raise ValueError("orders must be finite")

    def __add__(self, other: "OrderPair") -> "OrderPair":
        return OrderPair(self.m_e + other.m_e, self.m_psi + other.m_psi)

    def __sub__(self, other: "OrderPair") -> "OrderPair":
        return OrderPair(self.m_e - other.m_e, self.m_psi - other.m_psi)

    def __iter__(self):
        return iter((self.m_e, self.m_psi))

    @classmethod
    def of(cls, value) -> "OrderPair":
        if isinstance(value, OrderPair):
            return value
        m_e, m_psi = value
        return cls(float(m_e), float(m_psi))


@dataclass(frozen=True)
class SampleConfig:
    """Sample set: dyadic rays through Fibonacci directions plus a random box."""

    radius_exponents: tuple = tuple(range(11))
    n_directions: int = 32
    n_uniform: int = 200
    box: float = 8.0
    seed: int = 0
    top_radii: int = 4
    extra_x: np.ndarray | None = field(default=None, compare=False)
    extra_t: np.ndarray | None = field(default=None, compare=False)


@dataclass
class EstimateReport:
    order: OrderPair
    max_deriv: int
    constants: dict  # (alpha, beta) -> observed constant
    slopes: dict  # (alpha, beta) -> largest fitted ray slope
    verdict: str  # "pass" or "suspected-violation"
    witness: dict | None = None
    n_samples: int = 0

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def constant(self, alpha=None, beta=None) -> float:
        """Observed constant for ``(alpha, beta)``; omitted indices mean zero."""
        a0, b0 = next(iter(self.constants))
        alpha = tuple(alpha) if alpha is not None else (0,) * len(a0)
        beta = tuple(beta) if beta is not None else (0,) * len(b0)
        return self.constants[(alpha, beta)]

    def to_json(self) -> dict:
        key = lambda ab: f"a{list(ab[0])}b{list(ab[1])}"
        return {
            "order": [self.order.m_e, self.order.m_psi],
            "max_deriv": self.max_deriv,
            "verdict": self.verdict,
            "constants": {key(k): float(v) for k, v in self.constants.items()},
            "slopes": {key(k): float(v) for k, v in self.slopes.items()},
            "witness": self.witness,
            "n_samples": self.n_samples,
        }


def _grid(d: int, s: int, cfg: SampleConfig):
    radii = 2.0 ** np.asarray(cfg.radius_exponents, dtype=float)
    dx = fibonacci_directions(d, cfg.n_directions)
    xs = (radii[:, None, None] * dx[None]).reshape(-1, d)  # (R*A, d)
    if s:
        dt = fibonacci_directions(s, cfg.n_directions)
        ts = (radii[:, None, None] * dt[None]).reshape(-1, s)
        shape = (radii.size, dx.shape[0], radii.size, dt.shape[0])
    else:
        ts = np.zeros((1, 0))
        shape = (radii.size, dx.shape[0], 1, 1)
    X = np.repeat(xs, ts.shape[0], axis=0)
    T = np.tile(ts, (xs.shape[0], 1))
    return X, T, shape


def _jets_chunked(a: Expression, X, T, order: int):
    """Yield (slice, JetBatch) over manageable chunks."""
    for start in range(0, X.shape[0], _CHUNK):
        sl = slice(start, min(start + _CHUNK, X.shape[0]))
        yield sl, a.jets(X[sl], T[sl], order)


def _ray_slopes(logw: np.ndarray, logscale: np.ndarray, top: int, has_t: bool):
    """Largest least-squares slope over x-rays, t-rays and diagonal rays.

    ``logw`` and ``logscale`` have shape (R, A, R', B).  Returns the maximal
    slope and the grid index (i, a, j, b) of the outermost point on that ray.
    """
    best = (-np.inf, None)

    def fit(lw, ls):
        lm, sm = lw.mean(axis=0), ls.mean(axis=0)
        var = ((ls - sm) ** 2).sum(axis=0)
        cov = ((ls - sm) * (lw - lm)).sum(axis=0)
        return np.where(var > 0, cov / np.where(var > 0, var, 1.0), 0.0)

    R = logw.shape[0]
    idx = np.arange(R - top, R)
    # x-rays: vary i with (a, j, b) fixed
    sl = fit(logw[idx], logscale[idx])  # (A, R', B)
    k = np.unravel_index(np.argmax(sl), sl.shape)
    if sl[k] > best[0]:
        best = (float(sl[k]), (R - 1, k[0], k[1], k[2]))
    if has_t:
        sl = fit(np.moveaxis(logw, 2, 0)[idx], np.moveaxis(logscale, 2, 0)[idx])  # (R, A, B)
        k = np.unravel_index(np.argmax(sl), sl.shape)
        if sl[k] > best[0]:
            best = (float(sl[k]), (k[0], k[1], R - 1, k[2]))
        lw = np.stack([logw[i, :, i, :] for i in idx])
        ls = np.stack([logscale[i, :, i, :] for i in idx])
        sl = fit(lw, ls)  # (A, B)
        k = np.unravel_index(np.argmax(sl), sl.shape)
        if sl[k] > best[0]:
            best = (float(sl[k]), (R - 1, k[0], R - 1, k[1]))
    return best


def check_estimates(
    a: Expression,
    order,
    max_deriv: int = 2,
    sampler: SampleConfig | None = None,
) -> EstimateReport:
    """Observed SG constants of ``a`` at ``order`` and a growth verdict.

    Parameters
    ----------
    a : Expression
        Symbol to test.
    order : OrderPair or pair of floats
        Claimed order ``(m_e, m_psi)``.
    max_deriv : int
        All ``(alpha, beta)`` with ``|alpha| + |beta| <= max_deriv`` are checked.
    sampler : SampleConfig
        Sample set; the default is the dyadic ray grid plus 200 box points.

    Returns
    -------
    EstimateReport
        ``verdict`` is ``"suspected-violation"`` when some multi-index has a
        weighted derivative whose log grows faster than 0.1 times
        ``log(<x><t>)`` across the outermost dyadic radii.
    """
    if not 0 <= max_deriv <= 3:
        raise ValueError("max_deriv must lie in [0, 3]")
    cfg = sampler or SampleConfig()
    order = OrderPair.of(order)
    d, s = a.d, a.s
    Xg, Tg, shape = _grid(d, s, cfg)
    rng = np.random.default_rng(cfg.seed)
    U = rng.uniform(-cfg.box, cfg.box, size=(cfg.n_uniform, d + s))
    parts_x = [Xg, U[:, :d]]
    parts_t = [Tg, U[:, d:]]
    if cfg.extra_x is not None:
        parts_x.append(np.asarray(cfg.extra_x, float).reshape(-1, d))
        parts_t.append(np.asarray(cfg.extra_t, float).reshape(-1, s))
    X = np.concatenate(parts_x)
    T = np.concatenate(parts_t)
    ng = Xg.shape[0]

    wx = weight(X) if d else np.ones(X.shape[0])
    wt = weight(T) if s else np.ones(X.shape[0])
    logscale = (np.log(wx) + np.log(wt))[:ng].reshape(shape)

    indices = None
    weighted = {}
    for sl, jets in _jets_chunked(a, X, T, max_deriv):
        if indices is None:
            indices = list(jets.multi_indices())
            for ab in indices:
                weighted[ab] = np.empty(X.shape[0])
        for alpha, beta in indices:
            w = np.abs(jets.derivative(alpha, beta))
            w = w * wx[sl] ** (sum(beta) - order.m_e) * wt[sl] ** (sum(alpha) - order.m_psi)
            weighted[(alpha, beta)][sl] = w

    constants = {ab: float(np.max(weighted[ab])) for ab in indices}
    reference = max(constants.values())
    slopes = {}
    worst = (-np.inf, None, None)
    for ab in indices:
        w = weighted[ab]
        c = constants[ab]
        # values below a thousandth of this constant, or at roundoff level
        # relative to the largest constant, carry no growth information
        floor = max(1e-3 * c, 1e-9 * reference, 1e-300)
        logw = np.log(np.maximum(w[:ng], floor)).reshape(shape)
        slope, where = _ray_slopes(logw, logscale, cfg.top_radii, s > 0)
        slopes[ab] = slope
        if slope > worst[0]:
            worst = (slope, where, ab)

    verdict = "pass"
    witness = None
    slope, where, ab = worst
    if slope > SLOPE_LIMIT:
        verdict = "suspected-violation"
        flat = np.ravel_multi_index(where, shape)
        witness = {
            "x": X[flat].tolist(),
            "t": T[flat].tolist(),
            "alpha": list(ab[0]),
            "beta": list(ab[1]),
            "slope": slope,
            "weighted_value": float(weighted[ab][flat]),
        }
    return EstimateReport(order, max_deriv, constants, slopes, verdict, witness, X.shape[0])
