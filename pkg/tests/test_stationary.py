import csv

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from sgcalc.numerics import fibonacci_directions
from sgcalc.phase import PhaseFunction, face_jets
from sgcalc.stationary import (
    SearchConfig,
    StationaryCloud,
    StationaryPoint,
    all_faces,
    compact_embedding,
    lagrangian_cloud,
    lambda_extend,
    neatness_report,
    stationary_solve,
    tangent_frame,
    write_cloud_csv,
)

DOT2 = PhaseFunction.parse("dot(x,t)", 2, 2, ("dot(x,t)", "dot(x,t)", "dot(x,t)"))
KG1 = PhaseFunction.parse("dot(x,t) - jb(t)", 1, 1, ("dot(x,t)", "dot(x,t) - norm2(t)", "dot(x,t)"))
CONE = PhaseFunction.parse(
    "x1*t1 + x2*jb(t)", 2, 1, ("x1*t1 + x2*jb(t)", "x1*t1 + x2*norm2(t)", "x1*t1 + x2*norm2(t)")
)


def sp(face, x, t):
    return StationaryPoint(face, np.asarray(x, float), np.asarray(t, float), 0.0, ())


# --- solver examples ---------------------------------------------------------


def test_dot_psi_face_is_origin_times_sphere():
    cloud = stationary_solve(DOT2, "psi")
    X = np.array([p.x for p in cloud.points])
    T = np.array([p.t for p in cloud.points])
    assert np.all(np.linalg.norm(X, axis=1) <= 1e-10)
    # every seeded direction is recovered
    seeded = fibonacci_directions(2, 64)
    dist = np.min(np.linalg.norm(seeded[:, None] - T[None], axis=2), axis=1)
    assert np.all(dist < 1e-9)


def test_dot_e_and_corner_faces_empty():
    assert len(stationary_solve(DOT2, "e")) == 0
    assert len(stationary_solve(DOT2, "psie")) == 0


def test_kg_psi_face_points():
    cloud = stationary_solve(KG1, "psi")
    pts = sorted((float(p.x[0]), float(p.t[0])) for p in cloud.points)
    assert len(pts) == 2
    np.testing.assert_allclose(pts, [(-1.0, -1.0), (1.0, 1.0)], atol=1e-10)
    assert len(stationary_solve(KG1, "e")) == 0 and len(stationary_solve(KG1, "psie")) == 0


def test_cone_phase_has_all_three_faces():
    clouds = all_faces(CONE)
    assert all(len(c) > 0 for c in clouds.values())
    corner = np.array([np.concatenate([p.x, p.t]) for p in clouds["psie"].points])
    r = 1 / np.sqrt(2)
    expected = {(r, -r, 1.0), (-r, r, 1.0), (r, r, -1.0), (-r, -r, -1.0)}
    got = {tuple(np.round(c, 9)) for c in corner}
    assert got == {tuple(np.round(e, 9)) for e in expected}


def test_residuals_reverified_independently():
    for phi in (DOT2, KG1, CONE):
        for face, cloud in all_faces(phi, frames=False).items():
            if not cloud.points:
                continue
            X = np.array([p.x for p in cloud.points])
            T = np.array([p.t for p in cloud.points])
            F = face_jets(phi, face, X, T, 1, source="limit").gradient()[:, phi.d :]
            assert np.all(np.linalg.norm(F, axis=1) <= 1e-9)


def test_dedupe_separation_and_unit_vectors():
    for face, cloud in all_faces(CONE, frames=False).items():
        X = np.array([p.x for p in cloud.points])
        T = np.array([p.t for p in cloud.points])
        emb = compact_embedding(face, X, T)
        if len(emb) > 1:
            assert pdist(emb).min() >= 1e-4
        if face in ("e", "psie"):
            np.testing.assert_allclose(np.linalg.norm(X, axis=1), 1, atol=1e-12)
        if face in ("psi", "psie"):
            np.testing.assert_allclose(np.linalg.norm(T, axis=1), 1, atol=1e-12)


def test_e_cloud_independent_of_conic_representative():
    dirs = fibonacci_directions(2, 64)
    ts = np.linspace(-3, 3, 7)[:, None]
    X = np.repeat(dirs, len(ts), 0)
    T = np.tile(ts, (len(dirs), 1))
    scales = np.random.default_rng(0).uniform(0.1, 50, size=(len(X), 1))
    a = stationary_solve(CONE, "e", SearchConfig(seeds=(X, T)))
    b = stationary_solve(CONE, "e", SearchConfig(seeds=(scales * X, T)))
    ea = compact_embedding("e", np.array([p.x for p in a.points]), np.array([p.t for p in a.points]))
    eb = compact_embedding("e", np.array([p.x for p in b.points]), np.array([p.t for p in b.points]))
    np.testing.assert_allclose(ea, eb, atol=1e-12)


# --- Lagrangian image -----------------------------------------------------------


def test_lambda_dot_psi_point():
    th = np.array([0.6, 0.8])
    lp = lambda_extend(DOT2, sp("psi", [0, 0], th))
    np.testing.assert_allclose(lp.x, 0)
    np.testing.assert_allclose(lp.xi, th, atol=1e-15)


def test_lambda_kg_points():
    lp = lambda_extend(KG1, sp("psi", [1.0], [1.0]))
    np.testing.assert_allclose([lp.x[0], lp.xi[0]], [1.0, 1.0])
    cloud = lagrangian_cloud(KG1, "psi")
    pairs = sorted((float(p.x[0]), float(p.xi[0])) for p in cloud.lagrangian)
    np.testing.assert_allclose(pairs, [(-1, -1), (1, 1)], atol=1e-10)


def test_lambda_e_face_is_finite_gradient():
    cloud = lagrangian_cloud(CONE, "e")
    for lp in cloud.lagrangian[:20]:
        t = lp.source.t[0]
        np.testing.assert_array_equal(lp.xi, lp.xi_conic)
        np.testing.assert_allclose(lp.xi, [t, np.sqrt(1 + t * t)], rtol=1e-14)


def test_lambda_undefined_where_gradient_vanishes():
    phi = PhaseFunction.parse("x1^2*t1/jb(x)", 1, 1)
    with pytest.raises(ValueError, match="λ̃_φ undefined here"):
        lambda_extend(phi, sp("psi", [0.0], [1.0]))


def test_lambda_preserves_stratum():
    for face, cloud in all_faces(CONE, frames=False).items():
        for lp in cloud.lagrangian:
            assert lp.face == face
            if face in ("e", "psie"):
                assert abs(np.linalg.norm(lp.x) - 1) < 1e-12
            if face in ("psi", "psie"):
                assert abs(np.linalg.norm(lp.xi) - 1) < 1e-12


# --- tangent frames -----------------------------------------------------------------


def test_dot_frame_is_vertical():
    F = tangent_frame(DOT2, sp("psi", [0, 0], [1.0, 0.0]))
    assert F.shape == (1, 4)
    np.testing.assert_allclose(F[0, :2], 0, atol=1e-15)
    assert abs(abs(F[0, 3]) - 1) < 1e-12  # the dt direction is perpendicular to t


def test_frame_sizes():
    assert tangent_frame(KG1, sp("psi", [1.0], [1.0])).shape == (0, 2)
    clouds = all_faces(CONE)
    assert {lp.frame.shape[0] for lp in clouds["e"].lagrangian} == {1}
    assert {lp.frame.shape[0] for lp in clouds["psi"].lagrangian} == {1}
    assert {lp.frame.shape[0] for lp in clouds["psie"].lagrangian} == {0}


def test_degenerate_point_frame_raises():
    phi = PhaseFunction.parse("x1^2*t1/jb(x)", 1, 1)
    with pytest.raises(ValueError, match="degenerate"):
        tangent_frame(phi, sp("psi", [0.0], [1.0]))


# --- neatness --------------------------------------------------------------------------


def test_neatness_consistent_examples():
    for phi in (DOT2, KG1, CONE):
        assert neatness_report(phi, all_faces(phi)).consistent


def test_neatness_flags_synthetic_corner_point():
    clouds = all_faces(DOT2)
    fake = sp("psie", [1.0, 0.0], [0.0, 1.0])
    clouds["psie"] = StationaryCloud("psie", 2, 2, [fake], [])
    rep = neatness_report(DOT2, clouds)
    assert not rep.consistent
    assert len(rep.unmatched) == 2


# --- Euler identities -------------------------------------------------------------------


@pytest.mark.parametrize("phi", [KG1, CONE, DOT2], ids=["kg", "cone", "dot"])
@pytest.mark.parametrize("source", ["declared", "limit"])
def test_euler_identities(phi, source):
    rng = np.random.default_rng(4)
    d, s = phi.d, phi.s
    X, T = rng.standard_normal((50, d)) * 3, rng.standard_normal((50, s)) * 3
    je = face_jets(phi, "e", X / np.linalg.norm(X, axis=1, keepdims=True), T, 1, source)
    # evaluate at unit x, where the limit source is defined, and use homogeneity
    Xh = X / np.linalg.norm(X, axis=1, keepdims=True)
    lhs = np.sum(Xh * je.gradient()[:, :d], axis=1)
    np.testing.assert_allclose(lhs, je.value, rtol=1e-9, atol=1e-9)
    Th = T / np.linalg.norm(T, axis=1, keepdims=True)
    jp = face_jets(phi, "psi", X, Th, 1, source)
    lhs = np.sum(Th * jp.gradient()[:, d:], axis=1)
    np.testing.assert_allclose(lhs, jp.value, rtol=1e-9, atol=1e-9)


# --- export --------------------------------------------------------------------------------


def test_cloud_csv_columns(tmp_path):
    path = tmp_path / "cloud.csv"
    write_cloud_csv(all_faces(CONE), path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["face", "x1", "x2", "xi1", "xi2", "residual", "min_singular_value"]
    assert {r[0] for r in rows[1:]} == {"e", "psi", "psie"}
