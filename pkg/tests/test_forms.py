import itertools
import math

import numpy as np
import pytest

from polyosc.combinatorics import DerivativeTable, multi_indices_up_to
from polyosc.errors import PreconditionError
from polyosc.fields import PolynomialField
from polyosc.forms import (BoundaryOperatorSpec, BoundaryTerm, boundary_operator,
                           frobenius_weights, green_flat_residual,
                           green_strong_residual, qy_evaluate, qy_terms)
from polyosc.quadrature import gauss_rule, midpoint_rule, tensor_rule
from polyosc.checks import _spline_bump, _tensor_poly, _poly1d_mul, _shifted_power


def test_frobenius_weights_small_cases():
    assert frobenius_weights(2, 2).weights == {(2, 0): 1.0, (1, 1): 2.0, (0, 2): 1.0}
    assert all(w == 1.0 for w in frobenius_weights(1, 3).weights.values())
    assert frobenius_weights(3, 2).weights == {(3, 0): 1.0, (2, 1): 3.0,
                                               (1, 2): 3.0, (0, 3): 1.0}


@pytest.mark.parametrize("m,dim", [(2, 2), (3, 2), (4, 2), (2, 3), (3, 3)])
def test_weighted_diagonal_sum_equals_repeated_index_sum(m, dim):
    rng = np.random.default_rng(5)
    ju = DerivativeTable(dim, m, {b: rng.normal()
                                  for b in multi_indices_up_to(dim, m)})
    jv = DerivativeTable(dim, m, {b: rng.normal()
                                  for b in multi_indices_up_to(dim, m)})
    repeated = sum(ju.directional(tup) * jv.directional(tup)
                   for tup in itertools.product(range(dim), repeat=m))
    weighted = sum(w * ju.entry(g) * jv.entry(g)
                   for g, w in frobenius_weights(m, dim).items())
    assert weighted == pytest.approx(repeated, rel=1e-13)


def test_boundary_operator_order_two():
    assert boundary_operator(2, 1).terms == (BoundaryTerm(1, 0, 0, 2),)
    assert boundary_operator(2, 0).terms == (BoundaryTerm(-1, 0, 1, 1),
                                             BoundaryTerm(-1, 1, 0, 1))


def test_boundary_operator_top_trace_is_pure_normal_derivative():
    for m in range(2, 6):
        spec = boundary_operator(m, m - 1)
        assert spec.terms == (BoundaryTerm(1, 0, 0, m),)


def test_boundary_operator_counts_and_coefficients():
    m, t = 4, 1
    spec = boundary_operator(m, t)
    assert len(spec.terms) == m - t
    for term, l in zip(spec.terms, range(t, m)):
        assert term.coefficient == (-1) ** (m - t - 1) * math.comb(l, t)
        assert term.tangential_power == l - t
        assert term.full_power == m - l - 1
        assert term.normal_order == t + 1


def test_boundary_operator_text_round_trip():
    spec = boundary_operator(3, 1)
    again = BoundaryOperatorSpec.from_text(spec.to_text())
    assert again == spec


def test_boundary_operator_range_error():
    with pytest.raises(ValueError):
        boundary_operator(2, 2)


@pytest.fixture(scope="module")
def flat_setup():
    rng = np.random.default_rng(17)
    m, dim = 2, 2
    box = [(-1.0, 1.0), (-1.0, 0.0)]
    phi = _spline_bump(dim, m, rng, box, open_top=True)
    axes = [gauss_rule(basis.breaks, 10) for basis in phi.space.bases]
    return m, box, phi, axes, rng


def test_green_flat_zero_data(flat_setup):
    m, box, phi, axes, _ = flat_setup
    zero = PolynomialField(2, {})
    assert green_flat_residual(m, zero, phi, box, axes) < 1e-14
    f = PolynomialField.random(2, 4, np.random.default_rng(0))
    assert green_flat_residual(m, f, zero, box, axes) < 1e-14


def test_green_flat_polynomial_with_spline_bump(flat_setup):
    m, box, phi, axes, rng = flat_setup
    f = PolynomialField.random(2, 5, rng)
    assert green_flat_residual(m, f, phi, box, axes) <= 1e-10


def test_green_flat_support_violation_raises(flat_setup):
    m, box, _, axes, _ = flat_setup
    f = PolynomialField.random(2, 3, np.random.default_rng(1))
    bad_phi = PolynomialField(2, {(0, 0): 1.0})
    with pytest.raises(PreconditionError):
        green_flat_residual(m, f, bad_phi, box, axes)


def test_green_strong_dirichlet_jets_kill_trace():
    # factors vanish to order m-1 = 2 at both ends: boundary term identically 0
    m = 3
    fac = _poly1d_mul(_shifted_power(0.0, 1.0, m - 1),
                      _shifted_power(1.0, -1.0, m - 1), [0.9, 0.4])
    f = _tensor_poly([fac, fac])
    axes = [gauss_rule((0.0, 1.0), 12)] * 2
    res = green_strong_residual(m, f, f, [(0.0, 1.0)] * 2, axes)
    assert res <= 1e-10


def test_green_strong_constant_violates_precondition():
    one = PolynomialField(2, {(0, 0): 1.0})
    axes = [gauss_rule((0.0, 1.0), 6)] * 2
    with pytest.raises(PreconditionError):
        green_strong_residual(2, one, one, [(0.0, 1.0)] * 2, axes)


def test_green_strong_nonzero_normal_traces():
    m = 2
    rng = np.random.default_rng(9)
    fac_f = _poly1d_mul(_shifted_power(0.0, 1.0, m - 1),
                        _shifted_power(1.0, -1.0, m - 1),
                        [rng.uniform(0.5, 1), rng.uniform(-1, 1), 0.7])
    fac_p = _poly1d_mul(_shifted_power(0.0, 1.0, m - 1),
                        _shifted_power(1.0, -1.0, m - 1), [0.8, 0.3])
    f = _tensor_poly([fac_f, fac_f])
    phi = _tensor_poly([fac_p, fac_p])
    # second normal trace of f is genuinely non-zero on the boundary
    assert abs(f.derivative((2, 0)).value((0.0, 0.5))) > 1e-3
    axes = [gauss_rule((0.0, 1.0), 9)] * 2
    assert green_strong_residual(m, f, phi, [(0.0, 1.0)] * 2, axes) <= 1e-10


def _strip_rule(n_tan=16, n_ver=6, order=10):
    return tensor_rule([midpoint_rule(n_tan),
                        gauss_rule(np.linspace(-1.0, 0.0, n_ver), order)])


def test_qy_terms_structure():
    terms = qy_terms(3)
    assert [(t.l, t.binom, t.weight_power) for t in terms] == \
        [(1, 3, 0), (2, 1, 1)]
    assert len(qy_terms(2)) == 1


def test_qy_zero_arguments_vanish():
    zero = PolynomialField(2, {})
    g = PolynomialField(2, {(0, 1): 1.0, (2, 3): 0.4})
    rule = _strip_rule()
    assert qy_evaluate(2, zero, g, rule) == pytest.approx(0.0, abs=1e-15)
    assert qy_evaluate(2, g, zero, rule) == pytest.approx(0.0, abs=1e-15)


def test_qy_bilinear():
    rng = np.random.default_rng(11)
    f1 = PolynomialField.random(2, 3, rng)
    f2 = PolynomialField.random(2, 3, rng)
    g = PolynomialField.random(2, 3, rng)
    rule = _strip_rule()
    a = 1.7
    combo = PolynomialField(2, {k: a * f1.coeffs.get(k, 0.0) + f2.coeffs.get(k, 0.0)
                                for k in set(f1.coeffs) | set(f2.coeffs)})
    lhs = qy_evaluate(3, combo, g, rule)
    rhs = a * qy_evaluate(3, f1, g, rule) + qy_evaluate(3, f2, g, rule)
    assert lhs == pytest.approx(rhs, rel=1e-12)
