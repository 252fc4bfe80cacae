"""Signomial arithmetic and fractional differentiation."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from akstar.caputo_quad import caputo_quad
from akstar.errors import (
    EvaluationDomainError,
    ExpressionClassError,
    FractionalDomainError,
    MalformedInputError,
)
from akstar.expr import AlphaContext, Signomial, coeff_distance, power_rule_factor

# frozen Gamma ratios, cross-checked against the quadrature oracle below
TWO_OVER_GAMMA_2P5 = 1.50450555612735        # Gamma(3)/Gamma(2.5)
ONE_OVER_GAMMA_1P5 = 1.1283791670955126      # Gamma(2)/Gamma(1.5)
GAMMA3_OVER_GAMMA_2P7 = 1.2947616535572537   # Gamma(3)/Gamma(2.7)


def sig(dim, *terms):
    return Signomial.from_terms(dim, [(c, e) for c, e in terms])


# -- normalize -----------------------------------------------------------


def test_like_terms_merge():
    s = sig(2, (2.0, [1, 0]), (3.0, [1, 0]))
    assert s.terms == {(1.0, 0.0): 5.0 + 0j}


def test_cancellation_gives_zero():
    s = sig(2, (1.0, [0, 0]), (-1.0, [0, 0]))
    assert s.is_zero


def test_single_term_identity():
    s = sig(2, (1.5, [0.5, 2]))
    assert s.terms == {(0.5, 2.0): 1.5 + 0j}


def test_non_finite_input_rejected():
    with pytest.raises(MalformedInputError):
        sig(2, (float("nan"), [0, 0]))
    with pytest.raises(MalformedInputError):
        sig(2, (1.0, [float("inf"), 0]))
    with pytest.raises(MalformedInputError):
        sig(2, (1.0, [0, 0, 0]))


def test_dead_zone_drops_debris():
    s = sig(2, (1.0, [1, 0]), (1e-16, [0, 1]))
    assert list(s.terms) == [(1.0, 0.0)]


# -- ring operations ------------------------------------------------------


def test_add_and_mul_examples():
    x = Signomial.coordinate(2, 0)
    y = Signomial.coordinate(2, 1)
    assert (x + y).terms == {(1.0, 0.0): 1 + 0j, (0.0, 1.0): 1 + 0j}

    root = sig(2, (1.0, [0.5, 0]))
    assert (root * root).terms == {(1.0, 0.0): 1 + 0j}

    prod = (x + y) * (x - y)
    assert prod.terms == {(2.0, 0.0): 1 + 0j, (0.0, 2.0): -1 + 0j}


def test_dim_mismatch_rejected():
    with pytest.raises(MalformedInputError):
        Signomial.coordinate(2, 0) + Signomial.coordinate(4, 0)


# -- classical partials ---------------------------------------------------


def test_partial_power_rule():
    s = sig(2, (1.0, [2, 1]))
    assert s.partial(0).terms == {(1.0, 1.0): 2 + 0j}
    assert sig(2, (1.0, [2, 0])).partial(1).is_zero
    assert sig(2, (1.0, [0.5, 0])).partial(0).terms == {(-0.5, 0.0): 0.5 + 0j}


# -- Caputo derivatives ----------------------------------------------------


def test_caputo_y_squared_matches_oracle():
    ctx = AlphaContext(alpha=0.5, n=1)
    d = sig(2, (1.0, [0, 2])).caputo(1, ctx)
    assert d.terms.keys() == {(0.0, 1.5)}
    coeff = d.terms[(0.0, 1.5)]
    assert coeff == pytest.approx(TWO_OVER_GAMMA_2P5, rel=1e-12)
    oracle = caputo_quad(lambda u: u ** 2, 1.0, 0.5).value
    assert abs(d.eval_at((1.0, 1.0)).real - oracle) / abs(oracle) < 1e-6


def test_caputo_constant_is_zero():
    ctx = AlphaContext(alpha=0.5, n=1)
    assert Signomial.constant(2, 7.0).caputo(0, ctx).is_zero


def test_caputo_passes_spectator_factors_through():
    ctx = AlphaContext(alpha=0.3, n=1)
    d = sig(2, (1.0, [2, 3])).caputo(0, ctx)
    assert d.terms.keys() == {(1.7, 3.0)}
    assert d.terms[(1.7, 3.0)] == pytest.approx(GAMMA3_OVER_GAMMA_2P7, rel=1e-12)
    # oracle at fixed y = 2: f(u) = u^2 * 2^3
    oracle = caputo_quad(lambda u: 8.0 * u ** 2, 1.3, 0.3).value
    val = d.eval_at((1.3, 2.0)).real
    assert abs(val - oracle) / abs(oracle) < 1e-6


def test_caputo_alpha_one_delegates_to_partial():
    ctx = AlphaContext(alpha=1.0, n=1)
    s = sig(2, (1.0, [2, 1]))
    assert coeff_distance(s.caputo(0, ctx), s.partial(0)) == 0.0


def test_caputo_negative_integer_exponent_raises():
    ctx = AlphaContext(alpha=0.5, n=1)
    s = sig(2, (1.0, [-1, 0]))
    with pytest.raises(FractionalDomainError, match="coordinate 0"):
        s.caputo(0, ctx)


def test_caputo_denominator_pole_kills_term():
    # p = -0.5, alpha = 0.5: Gamma(p+1-alpha) = Gamma(0) pole -> coefficient 0
    ctx = AlphaContext(alpha=0.5, n=1)
    s = sig(2, (1.0, [-0.5, 0]))
    assert s.caputo(0, ctx).is_zero


def test_caputo_linearity_on_random_pairs():
    rng = np.random.default_rng(7)
    ctx = AlphaContext(alpha=0.7, n=1)
    exp_grid = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0]
    for _ in range(200):
        def rand_sig():
            k = rng.integers(1, 4)
            return sig(2, *[
                (complex(rng.normal(), rng.normal()),
                 [exp_grid[rng.integers(len(exp_grid))],
                  exp_grid[rng.integers(len(exp_grid))]])
                for _ in range(k)
            ])
        a, b = rand_sig(), rand_sig()
        c = complex(rng.normal(), rng.normal())
        lhs = (a + b).caputo(0, ctx)
        rhs = a.caputo(0, ctx) + b.caputo(0, ctx)
        scale = max(lhs.max_abs_coeff(), 1.0)
        # float distributivity leaves ulp-level residue at most
        assert coeff_distance(lhs, rhs) <= 1e-12 * scale
        lhs2 = a.scale(c).caputo(1, ctx)
        rhs2 = a.caputo(1, ctx).scale(c)
        scale2 = max(lhs2.max_abs_coeff(), 1.0)
        assert coeff_distance(lhs2, rhs2) <= 1e-12 * scale2


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.0])
@pytest.mark.parametrize("point", [0.7, 1.0, 1.5, 2.0])
def test_caputo_converges_to_classical_as_alpha_to_one(p, point):
    s = sig(2, (1.0, [p, 0]))
    classical = s.partial(0).eval_at((point, 1.0)).real
    errs = []
    for alpha in (0.9, 0.99, 0.999):
        ctx = AlphaContext(alpha=alpha, n=1)
        errs.append(abs(s.caputo(0, ctx).eval_at((point, 1.0)).real - classical))
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.7])
@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9])
def test_power_rule_against_quadrature(p, alpha):
    s = sig(2, (1.0, [p, 0]))
    ctx = AlphaContext(alpha=alpha, n=1)
    d = s.caputo(0, ctx)
    for x in (0.5, 1.0, 2.0):
        oracle = caputo_quad(lambda u: u ** p, x, alpha).value
        assert abs(d.eval_at((x, 1.0)).real - oracle) / abs(oracle) < 1e-6


# -- reciprocal ------------------------------------------------------------


def test_reciprocal_examples():
    y = Signomial.coordinate(2, 1)
    assert y.reciprocal().terms == {(0.0, -1.0): 1 + 0j}

    s = sig(2, (2.0, [0.5, 0]))
    r = s.reciprocal()
    assert r.terms == {(-0.5, 0.0): 0.5 + 0j}

    with pytest.raises(ExpressionClassError):
        (Signomial.constant(2, 1.0) + Signomial.coordinate(2, 0)).reciprocal()


def test_mul_reciprocal_is_one():
    rng = np.random.default_rng(3)
    one = Signomial.constant(2, 1.0)
    for _ in range(50):
        c = complex(rng.normal(), rng.normal())
        s = sig(2, (c, [rng.normal(), rng.normal()]))
        prod = s * s.reciprocal()
        assert coeff_distance(prod, one) <= 1e-15


# -- evaluation -------------------------------------------------------------


def test_eval_examples():
    s = sig(2, (1.0, [2, 0]), (1.0, [0, 1]))
    assert s.eval_at((2.0, 3.0)) == pytest.approx(7.0)
    assert sig(2, (1.0, [0.5, 0])).eval_at((4.0, 1.0)) == pytest.approx(2.0)
    with pytest.raises(EvaluationDomainError):
        s.eval_at((0.0, 1.0))
    with pytest.raises(EvaluationDomainError):
        s.eval_at((1.0,))


# -- context -----------------------------------------------------------------


def test_alpha_context_validation():
    with pytest.raises(MalformedInputError):
        AlphaContext(alpha=1.5, n=1)
    with pytest.raises(MalformedInputError):
        AlphaContext(alpha=0.0, n=1)
    with pytest.raises(MalformedInputError):
        AlphaContext(alpha=0.5, n=0)
    ctx = AlphaContext(alpha=0.5, n=2)
    assert ctx.dim == 4 and not ctx.classical


def test_power_rule_factor_poles():
    with pytest.raises(FractionalDomainError):
        power_rule_factor(-2.0, 0.5)
    assert power_rule_factor(-0.5, 0.5) == 0.0


# -- algebraic laws (property-based) ----------------------------------------

coeffs = st.complex_numbers(
    min_magnitude=0.0, max_magnitude=10.0, allow_nan=False, allow_infinity=False
)
exponents = st.sampled_from([-1.0, -0.5, 0.0, 0.5, 1.0, 2.0])
term = st.tuples(coeffs, st.tuples(exponents, exponents))
signomials = st.lists(term, min_size=0, max_size=4).map(
    lambda ts: Signomial.from_terms(2, [(c, list(e)) for c, e in ts])
)


@settings(max_examples=80, derandomize=True, deadline=None)
@given(signomials, signomials, signomials)
def test_ring_laws(a, b, c):
    scale = max(a.max_abs_coeff(), b.max_abs_coeff(), c.max_abs_coeff(), 1.0)
    assert coeff_distance(a + b, b + a) == 0.0
    assert coeff_distance((a + b) + c, a + (b + c)) <= 1e-12 * scale
    assert coeff_distance(a * b, b * a) <= 1e-12 * scale ** 2
    assert coeff_distance(a * (b + c), a * b + a * c) <= 1e-11 * scale ** 2
