"""Canonical one-forms at infinity and the SG-Lagrangian validator.

Points and tangent vectors live in conic (non-compact) coordinates of
T*R^d = R^d x R^d: a tangent vector is ``(dx, dxi)``.

* ``alpha_psi((x, xi), (dx, dxi)) = xi . dx``
* ``alpha_e((x, xi), (dx, dxi)) = -x . dxi``
* ``omega(u, v) = dxi_u . dx_v - dxi_v . dx_u``, so that d(alpha_e) = omega.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "oneform_eval",
    "omega",
    "exit_field",
    "d_alpha_e",
    "LagrangianData",
    "LagrangianReport",
    "lagrangian_validate",
]

ONEFORMS = ("psi", "e")


def oneform_eval(kind: str, point, tangent) -> float | np.ndarray:
    """Pair ``alpha_psi`` or ``alpha_e`` at ``point = (x, xi)`` with ``tangent = (dx, dxi)``.

    Both arguments may be pairs of vectors or flat arrays of length 2d
    (with leading batch axes).
    """
    if kind not in ONEFORMS:
        raise ValueError(f"kind must be one of {ONEFORMS}")
    x, xi = _pair(point)
    dx, dxi = _pair(tangent)
    out = np.sum(xi * dx, axis=-1) if kind == "psi" else -np.sum(x * dxi, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _pair(v):
    if isinstance(v, tuple) and len(v) == 2:
        return np.asarray(v[0], float), np.asarray(v[1], float)
    v = np.asarray(v, float)
    d = v.shape[-1] // 2
    return v[..., :d], v[..., d:]


def omega(u, v) -> float | np.ndarray:
    """Canonical symplectic form ``dxi_u . dx_v - dxi_v . dx_u``."""
    ux, uxi = _pair(u)
    vx, vxi = _pair(v)
    out = np.sum(uxi * vx, axis=-1) - np.sum(vxi * ux, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def exit_field(point) -> np.ndarray:
    """Radial field in x, ``rho_e = x . grad_x``, as the tangent vector ``(x, 0)``."""
    x, xi = _pair(point)
    return np.concatenate([x, np.zeros_like(xi)], axis=-1)


def d_alpha_e(point, u, v, h: float = 1.0) -> float:
    """``u(alpha_e(v)) - v(alpha_e(u))`` for constant fields ``u``, ``v`` at ``point``.

    The directional derivatives are central differences, exact here because
    ``alpha_e`` is linear in the base point.
    """
    p = np.concatenate(_pair(point))
    u = np.concatenate(_pair(u))
    v = np.concatenate(_pair(v))

    def along(w, z):
        return (oneform_eval("e", p + h * w, z) - oneform_eval("e", p - h * w, z)) / (2 * h)

    return along(u, v) - along(v, u)


@dataclass
class LagrangianData:
    """Per-face conic points ``(x, xi)`` with tangent frames.

    ``faces[face]`` is a list of ``(x, xi, frame)`` with ``frame`` an array
    of rows ``(dx, dxi)`` or None when missing.
    """

    d: int
    faces: dict
    neatness: object | None = None

    @classmethod
    def from_clouds(cls, clouds: dict, neatness=None) -> "LagrangianData":
        faces = {}
        d = None
        for face, cloud in clouds.items():
            d = cloud.d
            faces[face] = [(lp.x, lp.xi_conic, lp.frame) for lp in cloud.lagrangian]
        return cls(d if d is not None else 1, faces, neatness)


@dataclass
class LagrangianReport:
    alpha_psi_max: float
    alpha_e_max: float
    corner_pairing_max: float
    frame_dims: dict
    passed: bool
    witness: dict | None = None
    notes: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        return {
            "alpha_psi_max": self.alpha_psi_max,
            "alpha_e_max": self.alpha_e_max,
            "corner_pairing_max": self.corner_pairing_max,
            "frame_dims": self.frame_dims,
            "verdict": self.verdict,
            "witness": self.witness,
            "notes": self.notes,
        }


def _scaled_forms(x, xi, frame):
    """Relative values of both one-forms on each frame row."""
    dx, dxi = frame[:, : x.size], frame[:, x.size :]
    scale = np.linalg.norm(x) * np.linalg.norm(dxi, axis=1) + np.linalg.norm(xi) * np.linalg.norm(dx, axis=1)
    scale = np.where(scale > 0, scale, 1.0)
    a_psi = np.abs(dx @ xi) / scale
    a_e = np.abs(dxi @ x) / scale
    return a_psi, a_e


def lagrangian_validate(L: LagrangianData, tol: float = 1e-8) -> LagrangianReport:
    """Check the vanishing of the one-forms and corner conormality.

    ``alpha_psi`` must vanish on psi-face frames, ``alpha_e`` on e-face
    frames, both on corner frames, and ``<x, xi>`` (for unit vectors) at
    corner points.  Values are relative to ``|x||dxi| + |xi||dx|``.  Frame
    sizes must be d-1 on the e and psi faces and d-2 at the corner.
    Empty faces pass.
    """
    d = L.d
    expected = {"e": d - 1, "psi": d - 1, "psie": d - 2}
    worst = {"psi": 0.0, "e": 0.0, "pair": 0.0}
    witness = None
    dims = {}
    dims_ok = True
    notes = []

    def record(key, value, face, x, xi, row):
        nonlocal witness
        if value > worst[key]:
            worst[key] = value
            if value > tol and (witness is None or value > witness["value"]):
                witness = {"check": key, "face": face, "x": x.tolist(), "xi": xi.tolist(), "tangent": row, "value": value}

    for face, items in L.faces.items():
        sizes = set()
        for x, xi, frame in items:
            x = np.asarray(x, float)
            xi = np.asarray(xi, float)
            if frame is None:
                raise ValueError(f"invalid input: missing tangent frame on the {face} face")
            frame = np.asarray(frame, float).reshape(-1, 2 * d)
            sizes.add(frame.shape[0])
            a_psi, a_e = _scaled_forms(x, xi, frame)
            if face in ("psi", "psie") and frame.shape[0]:
                k = int(np.argmax(a_psi))
                record("psi", float(a_psi[k]), face, x, xi, frame[k].tolist())
            if face in ("e", "psie") and frame.shape[0]:
                k = int(np.argmax(a_e))
                record("e", float(a_e[k]), face, x, xi, frame[k].tolist())
            if face == "psie":
                pairing = abs(float(x @ xi)) / max(np.linalg.norm(x) * np.linalg.norm(xi), 1e-300)
                record("pair", pairing, face, x, xi, None)
        dims[face] = sorted(sizes)
        if any(k != expected[face] for k in sizes):
            dims_ok = False
            notes.append(f"{face} frames have sizes {sorted(sizes)}, expected {expected[face]}")
        if not items:
            notes.append(f"{face} component empty (vacuous pass)")
    neat_ok = True
    if L.neatness is not None:
        neat_ok = bool(L.neatness.consistent)
        if not neat_ok:
            notes.append("corner points are not limits of the face families")
    passed = max(worst.values()) <= tol and dims_ok and neat_ok
    return LagrangianReport(worst["psi"], worst["e"], worst["pair"], dims, passed, witness, notes)
