import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgcalc.classical import (
    ClassicalSymbol,
    Excision,
    PrincipalTriple,
    compatibility_check,
    component_jets,
    ellipticity_check,
    extend_homogeneous,
    principal_component,
    principal_part,
)
from sgcalc.compactification import NotClassicalError
from sgcalc.expr import parse
from sgcalc.symbols import check_estimates

JBJB_TRIPLE = ("norm2(x)*jb(t)", "jb(x)*norm2(t)", "norm2(x)*norm2(t)")


def jbjb(d=1, s=1, declared=True):
    tri = PrincipalTriple.parse(JBJB_TRIPLE, d, s) if declared else None
    return ClassicalSymbol(parse("jb(x)*jb(t)", d, s), (1, 1), tri)


def _radial_oracle(f, x, t, which, m=(1, 1)):
    # plain r = 2^k samples followed by repeated Richardson elimination
    rs = 2.0 ** np.arange(4, 15)
    vals = []
    for r in rs:
        xx = np.asarray(x) * (r if which in ("e", "psie") else 1)
        tt = np.asarray(t) * (r if which in ("psi", "psie") else 1)
        p = (m[0] if which in ("e", "psie") else 0) + (m[1] if which in ("psi", "psie") else 0)
        vals.append(f(xx, tt) / r**p)
    v = np.array(vals)
    for j in (1, 2):
        v = (2**j * v[1:] - v[:-1]) / (2**j - 1)
    return v[-1]


# --- examples --------------------------------------------------------------


def test_e_component_of_bracket_product():
    a = jbjb()
    val = principal_component(a, "e", [1.0], [2.0])
    assert val == pytest.approx(math.sqrt(5), rel=1e-9)
    assert val == pytest.approx(_radial_oracle(a.base, [1.0], [2.0], "e"), rel=1e-9)


def test_psi_component_of_dot():
    assert principal_component(parse("dot(x,t)", 1, 1), "psi", [3.0], [1.0], order=(1, 1)) == pytest.approx(3.0)


@pytest.mark.parametrize("seed", range(5))
def test_corner_component_of_bracket_product_is_one(seed):
    rng = np.random.default_rng(seed)
    x, t = rng.standard_normal(2), rng.standard_normal(2)
    x, t = x / np.linalg.norm(x), t / np.linalg.norm(t)
    assert principal_component(jbjb(2, 2), "psie", x, t) == pytest.approx(1.0, abs=1e-9)


def test_direction_must_be_unit():
    with pytest.raises(ValueError):
        principal_component(jbjb(), "e", [2.0], [1.0])


def test_non_classical_symbol_raises():
    a = ClassicalSymbol(parse("jb(x)*cos(x1)", 1, 1), (1, 0))
    with pytest.raises(NotClassicalError, match="not classical in the e expansion"):
        principal_component(a, "e", [1.0], [0.0])


def test_declared_triple_cross_check_catches_wrong_declaration():
    wrong = PrincipalTriple.parse(("2*norm2(x)*jb(t)", "jb(x)*norm2(t)", "norm2(x)*norm2(t)"), 1, 1)
    a = ClassicalSymbol(parse("jb(x)*jb(t)", 1, 1), (1, 1), wrong)
    with pytest.raises(ValueError, match="disagrees"):
        principal_component(a, "e", [1.0], [2.0])


def test_declared_triple_homogeneity_enforced():
    bad = PrincipalTriple.parse(("jb(x)*jb(t)", "jb(x)*norm2(t)", "norm2(x)*norm2(t)"), 1, 1)
    with pytest.raises(ValueError, match="not homogeneous"):
        ClassicalSymbol(parse("jb(x)*jb(t)", 1, 1), (1, 1), bad)


def test_excision_profile():
    chi = Excision(1.0, 2.0)
    np.testing.assert_allclose(chi(np.array([0.0, 1.0, 1.5, 2.0, 5.0])[:, None]), [0, 0, 0.5, 1, 1])
    with pytest.raises(ValueError):
        Excision(2.0, 1.0)


def test_principal_part_value_at_large_point():
    ap = principal_part(PrincipalTriple.parse(JBJB_TRIPLE, 1, 1))
    expected = 10 * math.sqrt(101) + math.sqrt(101) * 10 - 100
    assert ap([10.0], [10.0]) == pytest.approx(expected, rel=1e-12)


def test_zero_triple_gives_zero():
    ap = principal_part(PrincipalTriple.parse(("0", "0", "0"), 2, 2))
    rng = np.random.default_rng(1)
    assert np.all(ap.evaluate(rng.normal(size=(50, 2)) * 5, rng.normal(size=(50, 2)) * 5) == 0)


def test_principal_part_has_jets_at_origin():
    ap = principal_part(PrincipalTriple.parse(JBJB_TRIPLE, 2, 2))
    jets = ap.jets(np.zeros((1, 2)), np.zeros((1, 2)), 2)
    assert np.all(jets.hessian() == 0)


def test_principal_part_reproduces_triple():
    tri = PrincipalTriple.parse(JBJB_TRIPLE, 2, 2)
    a = ClassicalSymbol(principal_part(tri), (1, 1), tri)
    rng = np.random.default_rng(3)
    for _ in range(5):
        x, t = rng.standard_normal(2), rng.standard_normal(2)
        xh, th = x / np.linalg.norm(x), t / np.linalg.norm(t)
        assert principal_component(a, "e", xh, t) == pytest.approx(tri.e(xh, t), rel=1e-8)
        assert principal_component(a, "psi", x, th) == pytest.approx(tri.psi(x, th), rel=1e-8)
        assert principal_component(a, "psie", xh, th) == pytest.approx(tri.psie(xh, th), rel=1e-8)


def test_compatibility_examples():
    assert compatibility_check(PrincipalTriple.parse(JBJB_TRIPLE, 2, 2), (1, 1)).passed
    assert compatibility_check(PrincipalTriple.parse(("0", "0", "0"), 2, 2), (1, 1)).passed
    rep = compatibility_check(PrincipalTriple.parse(("norm2(x)*jb(t)", "jb(x)*norm2(t)", "0"), 2, 2), (1, 1))
    assert not rep.passed
    assert rep.witness["corner"] == 0.0
    assert rep.witness["psi_limit_of_e"] == pytest.approx(1.0, abs=1e-8)


def test_ellipticity_examples():
    rep = ellipticity_check(jbjb(2, 2, declared=False))
    assert rep.elliptic and rep.min_abs == pytest.approx(1.0, abs=1e-8)
    rep = ellipticity_check(parse("1 + jb(x)*jb(t)", 2, 2), order=(1, 1))
    assert rep.elliptic and rep.min_abs == pytest.approx(1.0, abs=1e-8)
    rep = ellipticity_check(parse("dot(x,t)", 2, 2), order=(1, 1))
    assert not rep.elliptic
    corner = rep.face_argmin["psie"]
    assert abs(np.dot(corner["y"], corner["gamma"])) < 1e-12


# --- properties --------------------------------------------------------------


def test_derivative_commutation():
    a = jbjb(2, 2)
    rng = np.random.default_rng(11)
    multi = [((0, 0), (0, 0)), ((1, 0), (0, 0)), ((0, 1), (0, 0)), ((0, 0), (1, 0)), ((0, 0), (0, 1))]
    for which in ("e", "psi", "psie"):
        X = rng.standard_normal((20, 2))
        T = rng.standard_normal((20, 2))
        if which in ("e", "psie"):
            X /= np.linalg.norm(X, axis=1, keepdims=True)
        if which in ("psi", "psie"):
            T /= np.linalg.norm(T, axis=1, keepdims=True)
        lim = component_jets(a, which, X, T, 1)
        ref = component_jets(a, which, X, T, 1, source="declared")
        for alpha, beta in multi:
            np.testing.assert_allclose(lim.derivative(alpha, beta), ref.derivative(alpha, beta), atol=1e-6)


def test_homogeneous_extension():
    a = jbjb(2, 2, declared=False)
    rng = np.random.default_rng(5)
    X, T = rng.standard_normal((10, 2)) * 3, rng.standard_normal((10, 2)) * 3
    tri = PrincipalTriple.parse(JBJB_TRIPLE, 2, 2)
    for which in ("e", "psi", "psie"):
        got = extend_homogeneous(a, which, X, T)
        np.testing.assert_allclose(got, tri.component(which).evaluate(X, T), rtol=1e-8)
    # degree-one scaling in the homogeneous factor
    np.testing.assert_allclose(extend_homogeneous(a, "e", 2.5 * X, T), 2.5 * extend_homogeneous(a, "e", X, T), rtol=1e-12)
    np.testing.assert_allclose(extend_homogeneous(a, "psi", X, 4 * T), 4 * extend_homogeneous(a, "psi", X, T), rtol=1e-12)


def test_vanishing_principal_part_drops_order():
    a = parse("jb(x)*jb(t)", 2, 2)
    rest = a - principal_part(PrincipalTriple.parse(JBJB_TRIPLE, 2, 2))
    assert check_estimates(rest, (0, 0)).passed


@settings(max_examples=10, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(1.1, 3.0))
def test_excision_choice_does_not_change_triple(r1, ratio):
    tri = PrincipalTriple.parse(JBJB_TRIPLE, 2, 2)
    base = principal_part(tri)
    other = principal_part(tri, (Excision(r1, r1 * ratio), Excision(r1, r1 * ratio)))
    rng = np.random.default_rng(0)
    X = rng.standard_normal((8, 2))
    T = rng.standard_normal((8, 2))
    Xh = X / np.linalg.norm(X, axis=1, keepdims=True)
    Th = T / np.linalg.norm(T, axis=1, keepdims=True)
    for which, x, t in (("e", Xh, T), ("psi", X, Th), ("psie", Xh, Th)):
        u = component_jets(ClassicalSymbol(base, (1, 1)), which, x, t).value
        v = component_jets(ClassicalSymbol(other, (1, 1)), which, x, t).value
        np.testing.assert_allclose(u, v, atol=1e-8)
