from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgcalc.phase import (
    PhaseFunction,
    admissibility_check,
    big_phi,
    face_jacobian,
    nondegeneracy_batch,
    nondegeneracy_check,
    split_remainder,
)
from sgcalc.stationary import all_faces


def pt(face, x, t):
    return SimpleNamespace(face=face, x=np.asarray(x, float), t=np.asarray(t, float))


def test_big_phi_examples():
    assert big_phi(PhaseFunction.parse("dot(x,t)", 1, 1), [1.0], [2.0]) == pytest.approx(13.0)
    assert big_phi(PhaseFunction.parse("dot(x,t)", 1, 1), [0.0], [0.0]) == 0.0
    assert big_phi(PhaseFunction.parse("dot(x,t) - jb(t)", 1, 1), [1.0], [0.0]) == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=4, max_size=4))
def test_big_phi_of_dot_closed_form(v):
    x, t = np.array(v[:2]), np.array(v[2:])
    expected = (1 + x @ x) * (t @ t) + (1 + t @ t) * (x @ x)
    assert big_phi(PhaseFunction.parse("dot(x,t)", 2, 2), x, t) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("text, d, s", [("dot(x,t)", 2, 2), ("dot(x,t)", 1, 1), ("dot(x,t) - jb(t)", 1, 1)])
def test_admissible_examples(text, d, s):
    rep = admissibility_check(PhaseFunction.parse(text, d, s))
    assert rep.admissible
    assert rep.interior_min > 0.5


def test_x1_t1_not_admissible_with_witness():
    rep = admissibility_check(PhaseFunction.parse("x1*t1", 2, 1))
    assert not rep.admissible
    assert rep.witness["x"] == [0.0, 8.0] and rep.witness["t"] == [0.0]
    assert rep.witness["ratio"] == 0.0
    assert rep.boundary_min == 0.0


def test_admissibility_ratio_non_negative():
    rep = admissibility_check(PhaseFunction.parse("x1*t1 + sin(x2)", 2, 1))
    assert rep.interior_min >= 0.0


def test_nondegeneracy_examples():
    rep = nondegeneracy_check(PhaseFunction.parse("dot(x,t)", 2, 2), pt("psi", [0, 0], [0.6, 0.8]))
    assert rep.nondegenerate and rep.rank == 2
    rep = nondegeneracy_check(PhaseFunction.parse("x1^2*t1/jb(x)", 1, 1), pt("psi", [0], [1]))
    assert not rep.nondegenerate and rep.rank == 0
    rep = nondegeneracy_check(PhaseFunction.parse("dot(x,t) - jb(t)", 1, 1), pt("psi", [1], [1]))
    assert rep.nondegenerate and rep.rank == 1


def test_nondegeneracy_rejects_interior_point():
    with pytest.raises(ValueError, match="invalid input"):
        nondegeneracy_check(PhaseFunction.parse("dot(x,t)", 1, 1), pt("interior", [0], [1]))


def test_face_jacobian_dot_psi_face_is_identity_in_x():
    J, g = face_jacobian(PhaseFunction.parse("dot(x,t)", 2, 2), "psi", [0, 0], [1, 0])
    np.testing.assert_allclose(J[:, :2], np.eye(2), atol=1e-9)
    np.testing.assert_allclose(g, 0, atol=1e-12)


def test_declared_and_limit_sources_agree():
    phi = PhaseFunction.parse("dot(x,t) - jb(t)", 2, 2, ("dot(x,t)", "dot(x,t) - norm2(t)", "dot(x,t)"))
    for face, x, t in (("psi", [0.3, 0.4], [0.6, 0.8]), ("e", [0.6, 0.8], [1.0, -2.0]), ("psie", [1, 0], [0, 1])):
        a, _ = face_jacobian(phi, face, x, t, "declared")
        b, _ = face_jacobian(phi, face, x, t, "limit")
        np.testing.assert_allclose(a, b, atol=1e-6)


def test_incompatible_declared_triple_rejected():
    with pytest.raises(ValueError, match="not compatible"):
        PhaseFunction.parse("dot(x,t)", 1, 1, ("dot(x,t)", "dot(x,t)", "0"))


def test_remainder_absorption():
    phi = PhaseFunction.parse("dot(x,t) - jb(t)", 1, 1, ("dot(x,t)", "dot(x,t) - norm2(t)", "dot(x,t)"))
    principal, rest = split_remainder(phi)
    rng = np.random.default_rng(0)
    X, T = rng.uniform(-30, 30, (50, 1)), rng.uniform(-30, 30, (50, 1))
    np.testing.assert_allclose(principal.expr.evaluate(X, T) + rest.evaluate(X, T), phi.expr.evaluate(X, T), atol=1e-10)
    assert admissibility_check(principal).admissible == admissibility_check(phi).admissible


@pytest.mark.parametrize(
    "text, d, s, triple",
    [
        ("dot(x,t) - jb(t)", 2, 2, ("dot(x,t)", "dot(x,t) - norm2(t)", "dot(x,t)")),
        ("x1*t1 + x2*jb(t)", 2, 1, ("x1*t1 + x2*jb(t)", "x1*t1 + x2*norm2(t)", "x1*t1 + x2*norm2(t)")),
    ],
)
def test_batched_nondegeneracy_matches_pointwise(text, d, s, triple):
    phi = PhaseFunction.parse(text, d, s, triple)
    for face, cloud in all_faces(phi, frames=False).items():
        pts = cloud.points[:40]
        if not pts:
            continue
        ranks, small, large, ok = nondegeneracy_batch(phi, face, [p.x for p in pts], [p.t for p in pts])
        for i, p in enumerate(pts):
            rep = nondegeneracy_check(phi, p)
            assert ranks[i] == rep.rank and ok[i] == rep.nondegenerate
            assert small[i] == pytest.approx(rep.smallest_singular_value, rel=1e-9, abs=1e-12)
            assert large[i] == pytest.approx(rep.largest_singular_value, rel=1e-9)


def test_batched_nondegeneracy_flags_planted_point():
    phi = PhaseFunction.parse("x1*t1", 2, 1)
    ranks, _, _, ok = nondegeneracy_batch(phi, "psi", [[0.0, 1.0], [0.0, 2.0]], [[1.0], [-1.0]])
    single = [nondegeneracy_check(phi, pt("psi", x, t)) for x, t in (([0.0, 1.0], [1.0]), ([0.0, 2.0], [-1.0]))]
    assert list(ok) == [r.nondegenerate for r in single]
    assert list(ranks) == [r.rank for r in single]
