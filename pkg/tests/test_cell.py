import json
import math

import numpy as np
import numpy.polynomial.polynomial as npoly
import pytest

from polyosc.cell import (CellConfig, CellField, evaluate_V, solve_mode,
                          strange_constant, truncated_energy_oracle,
                          verify_identities, _vertical_derivative)
from polyosc.forms import frobenius_weights
from polyosc.geometry import TrigPolynomial
from polyosc.quadrature import gauss_rule, midpoint_rule, tensor_rule

B = TrigPolynomial.parse("2+cos")
B3 = TrigPolynomial.parse("2+cos(1)+0.3*sin(2)")


def test_mode_zero_datum_gives_zero_coefficients():
    md = solve_mode(3, 1, 0.0)
    assert all(c == 0.0 for c in md.coeffs_cos)
    assert md.energy == 0.0


def test_mode_order_two_closed_form():
    md = solve_mode(2, 1, 1.0)
    mu = 2 * math.pi
    assert md.mu == pytest.approx(mu)
    assert md.coeffs_cos[0] == pytest.approx(1.0)
    assert md.coeffs_cos[1] == pytest.approx(-mu / 2.0)
    scaled = solve_mode(2, 1, -0.7)
    assert scaled.coeffs_cos[0] == pytest.approx(-0.7)


def test_mode_order_three_boundary_conditions():
    md = solve_mode(3, 2, 1.3)
    mu = md.mu
    c = np.asarray(md.coeffs_cos)
    # V(0) = 0, V'(0) = datum, V'''(0) = 0
    for order, want in ((0, 0.0), (1, 1.3), (3, 0.0)):
        val = npoly.polyval(0.0, _vertical_derivative(c, mu, order))
        assert val == pytest.approx(want, abs=1e-12)


def test_mode_rejects_zero_frequency():
    with pytest.raises(ValueError):
        solve_mode(2, 0, 1.0)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_mode_ode_annihilation(m):
    # (d^2 - mu^2)^m applied to the mode profile vanishes identically
    md = solve_mode(m, 1, 1.0)
    mu = md.mu
    poly = np.asarray(md.coeffs_cos)
    for _ in range(m):
        second = _vertical_derivative(poly, mu, 2)
        poly = npoly.polysub(second, mu * mu * poly)
    scale = max(1.0, float(np.max(np.abs(md.coeffs_cos))))
    assert float(np.max(np.abs(poly))) / scale < 1e-9


def test_strange_constant_reference_value():
    # hand-derived for b = 2 + cos(2 pi y), m = 2: K = (3/4) mu^3 = 6 pi^3
    sol = strange_constant(CellConfig(2, B))
    assert sol.K == pytest.approx(6.0 * math.pi ** 3, rel=1e-13)


def test_strange_constant_zero_for_constant_and_scaling():
    const = strange_constant(CellConfig(2, TrigPolynomial(((0, 2.0, 0.0),))))
    assert const.K == 0.0
    base = strange_constant(CellConfig(2, B)).K
    doubled = strange_constant(CellConfig(
        2, TrigPolynomial(((0, 4.0, 0.0), (1, 2.0, 0.0))))).K
    assert doubled / base == pytest.approx(4.0, rel=1e-13)


def test_strange_constant_positive_when_oscillating():
    for m in (2, 3):
        for b in (B, B3):
            assert strange_constant(CellConfig(m, b)).K > 0.0


@pytest.mark.parametrize("m,b", [(2, B), (3, B), (3, B3)])
def test_three_characterizations_agree(m, b):
    sol = strange_constant(CellConfig(m, b))
    rep = verify_identities(sol)
    assert rep.pairing_residual <= 1e-8
    assert rep.trace_residual <= 1e-8


def test_gauge_shift_changes_nothing():
    sol = strange_constant(CellConfig(2, B))
    rep = verify_identities(sol)
    shifted = verify_identities(sol.with_gauge(1.0))
    assert abs(shifted.pairing_value - rep.pairing_value) < 1e-10
    assert abs(shifted.trace_value - rep.trace_value) < 1e-10
    assert sol.with_gauge(1.0).K == sol.K


def test_energy_additivity_against_combined_quadrature():
    sol = strange_constant(CellConfig(2, B3))
    rule = tensor_rule([
        midpoint_rule(24, (-0.5, 0.5)),
        gauss_rule(np.concatenate([np.linspace(-40, -6, 5),
                                   np.linspace(-6, 0, 25)[1:]]), 12),
    ])
    field = CellField(sol)
    total = 0.0
    weights = frobenius_weights(2, 2)
    for p, w in zip(rule.points, rule.weights):
        jet = field(p, 2)
        total += w * sum(wg * jet.entry(g) ** 2 for g, wg in weights.items())
    assert total == pytest.approx(sol.K, rel=1e-8)


def test_evaluate_V_boundary_conditions_and_decay():
    for m, b in [(2, B), (3, B3)]:
        sol = strange_constant(CellConfig(m, b))
        ys = np.linspace(-0.5, 0.5, 64, endpoint=False)
        for ybar in ys:
            jet = evaluate_V(sol, (ybar, 0.0), m)
            bc = jet.entry((0, m - 2)) if m > 2 else jet.entry((0, 0))
            assert bc == pytest.approx(float(b.value(ybar)), abs=1e-12)
            assert abs(jet.entry((0, m))) < 1e-12
        # oscillating part decays; deep samples carry only the zero mode
        deep = evaluate_V(sol, (0.3, -20.0), 0).entry((0, 0))
        zero_mode = npoly.polyval(-20.0, sol.zero_mode_coeffs())
        assert abs(deep - zero_mode) < 1e-12 * b.sup_derivative(0)


def test_evaluate_V_jet_order_cap():
    sol = strange_constant(CellConfig(2, B))
    with pytest.raises(ValueError):
        evaluate_V(sol, (0.0, -1.0), 5)


@pytest.mark.parametrize("m", [2, 3])
def test_truncated_oracle_within_one_percent(m):
    sol = strange_constant(CellConfig(m, B))
    oracle = truncated_energy_oracle(CellConfig(m, B), depth=-6.0)
    assert abs(oracle - sol.K) / sol.K < 1e-2


def test_truncated_oracle_depth_sensitivity_is_small():
    sol = strange_constant(CellConfig(2, B))
    k6 = truncated_energy_oracle(CellConfig(2, B), depth=-6.0)
    k4 = truncated_energy_oracle(CellConfig(2, B), depth=-4.0)
    assert abs(k6 - k4) / sol.K < 5e-3


def test_solution_json_round_trip_fields():
    sol = strange_constant(CellConfig(2, B))
    data = json.loads(sol.to_json())
    assert data["m"] == 2
    assert data["K"] == pytest.approx(sol.K)
    assert data["modes"][0]["k"] == 1
    assert len(data["modes"][0]["coeffs_cos"]) == 2
