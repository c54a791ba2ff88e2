import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgcalc.expr import parse
from sgcalc.symbols import OrderPair, SampleConfig, check_estimates, weight


def test_weight_examples():
    assert weight(np.zeros(3)) == 1.0
    assert weight([3.0, 4.0]) == pytest.approx(math.sqrt(26))
    assert weight([1.0]) == pytest.approx(math.sqrt(2))
    np.testing.assert_allclose(weight(np.array([[0.0], [1.0]])), [1.0, math.sqrt(2)])


def test_order_pair_adds_componentwise():
    assert OrderPair(1, 0.5) + OrderPair(-2, 1) == OrderPair(-1, 1.5)
    with pytest.raises(ValueError):
        OrderPair(float("inf"), 0)


def test_bracket_product_passes_with_unit_constant():
    rep = check_estimates(parse("jb(x)*jb(t)", 2, 2), (1, 1), max_deriv=2)
    assert rep.passed and rep.witness is None
    assert rep.constant() == pytest.approx(1.0, abs=1e-12)


def test_squared_bracket_at_wrong_order_is_flagged():
    rep = check_estimates(parse("jb(x)^2", 1, 1), (1, 0), max_deriv=2)
    assert rep.verdict == "suspected-violation"
    assert rep.witness["slope"] == pytest.approx(1.0, abs=0.02)
    assert set(rep.witness) >= {"x", "t", "alpha", "beta", "slope"}


def test_bilinear_form_constants():
    rep = check_estimates(parse("dot(x,t)", 1, 1), (1, 1), max_deriv=2)
    assert rep.passed
    assert rep.constant() <= 1.0
    assert rep.constant(alpha=(1,), beta=(1,)) == pytest.approx(1.0)
    # dense oracle: |x t| <= <x><t> on a grid over [-1e3, 1e3]^2
    g = np.linspace(-1e3, 1e3, 2001)
    X, T = np.meshgrid(g, g)
    assert np.max(np.abs(X * T) / np.sqrt((1 + X**2) * (1 + T**2))) <= 1.0


def test_report_serialises():
    rep = check_estimates(parse("jb(x)^2", 1, 1), (1, 0), max_deriv=1)
    data = rep.to_json()
    assert data["verdict"] == "suspected-violation"
    assert "a[0]b[0]" in data["constants"]


# pool of symbols with their true orders
_POOL = [
    ("jb(x)", (1, 0)),
    ("jb(t)", (0, 1)),
    ("dot(x,t)", (1, 1)),
    ("x1/jb(x)", (0, 0)),
    ("t2*jb(x)", (1, 1)),
    ("1/jb(t)", (0, -1)),
    ("exp(-jb(x))*0 + 2", (0, 0)),
    ("jb(x)*jb(t) - dot(x,t)", (1, 1)),
]


@settings(max_examples=12, deadline=None)
@given(st.sampled_from(_POOL), st.sampled_from(_POOL))
def test_product_passes_at_summed_order(pa, pb):
    cfg = SampleConfig(radius_exponents=tuple(range(9)), n_directions=12, n_uniform=50)
    a, b = parse(pa[0], 2, 2), parse(pb[0], 2, 2)
    ra = check_estimates(a, pa[1], 2, cfg)
    rb = check_estimates(b, pb[1], 2, cfg)
    assert ra.passed and rb.passed
    rab = check_estimates(a * b, OrderPair.of(pa[1]) + OrderPair.of(pb[1]), 2, cfg)
    assert rab.passed


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(_POOL), st.integers(0, 1000))
def test_constants_monotone_in_sample_set(entry, seed):
    a = parse(entry[0], 2, 2)
    base = SampleConfig(n_directions=8, n_uniform=40)
    rng = np.random.default_rng(seed)
    more = SampleConfig(
        n_directions=8,
        n_uniform=40,
        extra_x=rng.uniform(-50, 50, (30, 2)),
        extra_t=rng.uniform(-50, 50, (30, 2)),
    )
    r0 = check_estimates(a, entry[1], 2, base)
    r1 = check_estimates(a, entry[1], 2, more)
    for key, c in r0.constants.items():
        assert r1.constants[key] >= c
