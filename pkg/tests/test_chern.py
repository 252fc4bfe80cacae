"""Characteristic-form layer: exterior derivative, gamma, mu/lam/kappa, c0."""

import numpy as np
import pytest

from akstar.chern import (
    AdaptedForm,
    c0_representative,
    chern_weyl,
    exterior_derivative,
    lemma_forms,
)
from akstar.errors import MalformedInputError
from akstar.expr import Signomial

from _configs import make_bundle, probe_fields, sample_points


def as_zero_form(f):
    return AdaptedForm(0, f.dim, {(): f} if not f.is_zero else {})


def test_form_construction_canonicalizes():
    dim = 2
    one = Signomial.constant(dim, 1.0)
    f = AdaptedForm.build(2, dim, [((1, 0), one)])
    assert f.components == {(0, 1): one.scale(-1.0)}
    assert AdaptedForm.build(2, dim, [((0, 0), one)]).is_zero
    with pytest.raises(MalformedInputError):
        AdaptedForm(1, dim, {(1, 0): one})


def test_d_of_constant_vanishes_any_alpha():
    for alpha in (0.5, 1.0):
        b = make_bundle("flat", 1, alpha)
        d = exterior_derivative(as_zero_form(Signomial.constant(2, 3.0)), b)
        assert d.is_zero


def test_d_of_x_e_x_flat():
    b = make_bundle("flat", 1, 1.0)
    x = Signomial.coordinate(2, 0)
    form = AdaptedForm(1, 2, {(0,): x})
    d = exterior_derivative(form, b)
    assert d.is_zero  # e_x(x) e^x ^ e^x with no structure functions


def test_d_squared_vanishes_classically():
    b = make_bundle("coupled", 2, 1.0)
    for f in probe_fields(2):
        dd = exterior_derivative(exterior_derivative(as_zero_form(f), b), b)
        assert dd.sample_norm(sample_points(2)) < 1e-10


def test_d_squared_fractional_is_reported_not_asserted():
    b = make_bundle("coupled", 1, 0.45)
    worst = 0.0
    for f in probe_fields(1):
        dd = exterior_derivative(exterior_derivative(as_zero_form(f), b), b)
        worst = max(worst, dd.sample_norm(sample_points(1)))
    assert np.isfinite(worst)


def test_theta_is_d_of_canonical_one_form_classically():
    # diagnostic only: the canonical 1-form differentiates to theta at
    # alpha = 1 with the engine's orientation
    from akstar.geometry import lagrange_one_form

    for kind, n in (("coupled", 1), ("cross", 2)):
        b = make_bundle(kind, n, 1.0)
        comps = {}
        for i, c in enumerate(lagrange_one_form(b.spec)):
            if not c.is_zero:
                comps[(i,)] = c
        domega = exterior_derivative(AdaptedForm(1, 2 * n, comps), b)
        theta = AdaptedForm.build(
            2,
            2 * n,
            [
                ((a, c), b.symp.theta_lower[a][c])
                for a in range(2 * n)
                for c in range(a + 1, 2 * n)
                if not b.symp.theta_lower[a][c].is_zero
            ],
        )
        assert (domega - theta).sample_norm(sample_points(n)) < 1e-10


# -- gamma -------------------------------------------------------------------


def test_gamma_zero_on_flat_config():
    b = make_bundle("flat", 1, 1.0)
    gamma = chern_weyl(b)
    assert gamma.is_zero
    assert c0_representative(gamma).is_zero


def test_gamma_closed_classically():
    for kind, n in (("coupled", 1), ("coupled", 2), ("cross", 2)):
        b = make_bundle(kind, n, 1.0)
        gamma = chern_weyl(b)
        dgamma = exterior_derivative(gamma, b)
        assert dgamma.sample_norm(sample_points(n)) < 1e-8


def test_gamma_vanishes_by_block_structure():
    # the almost-complex matrix swaps the h/v blocks while the
    # d-connection curvature preserves them, so the trace defining gamma
    # is empty even where the curvature itself is not
    b = make_bundle("coupled", 1, 0.45)
    assert not b.curvature.full[0][0][0][1].is_zero
    gamma = chern_weyl(b)
    assert gamma.is_zero
    res = exterior_derivative(gamma, b).sample_norm(sample_points(1))
    assert res == 0.0


# -- lemma forms ----------------------------------------------------------------


def test_lemma_forms_zero_on_flat_config():
    b = make_bundle("flat", 1, 1.0)
    mu, lam, kappa = lemma_forms(b)
    assert mu.is_zero and lam.is_zero and kappa.is_zero


def test_mu_from_fractional_torsion():
    b = make_bundle("flat", 1, 0.5)
    mu, lam, kappa = lemma_forms(b)
    assert set(mu.components) <= {(0,), (1,)}
    assert not mu.is_zero
    # single torsion component C y^{-1/2} contracts against the constant J
    (key, coeff), = [(k, c) for k, c in mu.components.items()]
    assert coeff.terms.keys() == {(0.0, -0.5)}
    assert abs(coeff.terms[(0.0, -0.5)]) == pytest.approx(
        0.5641895835477563 / 6.0, rel=1e-12
    )


def test_kappa_assembly_identity():
    # kappa + i lam = (i/2) gamma, both sides assembled independently
    for kind, n, alpha in (
        ("coupled", 1, 1.0),
        ("cross", 2, 1.0),
        ("coupled", 1, 0.45),
        ("flat", 1, 0.5),
    ):
        b = make_bundle(kind, n, alpha)
        gamma = chern_weyl(b)
        mu, lam, kappa = lemma_forms(b)
        lhs = kappa + lam.scale(1j)
        rhs = gamma.scale(0.5j)
        assert (lhs - rhs).sample_norm(sample_points(n)) < 1e-8


def test_lambda_is_exact_by_construction():
    b = make_bundle("coupled", 1, 1.0)
    mu, lam, kappa = lemma_forms(b)
    dlam = exterior_derivative(lam, b)
    assert dlam.sample_norm(sample_points(1)) < 1e-10


# -- c0 ----------------------------------------------------------------------------


def test_c0_scales_linearly_and_matches_pointwise():
    b = make_bundle("coupled", 1, 0.45)
    gamma = chern_weyl(b)
    rep = c0_representative(gamma)
    rep2 = c0_representative(gamma.scale(2.0))
    assert (rep2 - rep.scale(2.0)).coeff_norm() <= 1e-13
    for key, c in rep.components.items():
        for p in sample_points(1):
            assert c.eval_at(p) == pytest.approx(0.5j * gamma.components[key].eval_at(p))
