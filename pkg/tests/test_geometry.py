import numpy as np
import pytest

from polyosc.combinatorics import finite_difference_jet, multi_indices_up_to
from polyosc.errors import GeometryError, PreconditionError
from polyosc.geometry import (CollarMap, OscillatingProfile, Regime,
                              TrigPolynomial, VerticalMap,
                              atlas_profile_distance, classify_stability,
                              criterion_rates, profile_jet, pullback_jet,
                              vertical_map_jets)

B = TrigPolynomial.parse("2+cos")


def test_parse_variants():
    assert TrigPolynomial.parse("2+cos").terms == ((0, 2.0, 0.0), (1, 1.0, 0.0))
    assert TrigPolynomial.parse("1.5-0.3*sin(2)").terms == \
        ((0, 1.5, 0.0), (2, 0.0, -0.3))
    assert TrigPolynomial.parse("0.5+0.25*cos(1)").terms == \
        ((0, 0.5, 0.0), (1, 0.25, 0.0))
    with pytest.raises(ValueError):
        TrigPolynomial.parse("")


def test_profile_positivity_enforced():
    with pytest.raises(GeometryError):
        OscillatingProfile(1.0, 0.25, TrigPolynomial.parse("0.5+cos"))


def test_profile_jet_constant_amplitude():
    prof = OscillatingProfile(1.5, 0.125, TrigPolynomial(((0, 3.0, 0.0),)))
    jet = profile_jet(prof, 0.3, 3)
    assert jet.entry((0,)) == pytest.approx(0.125 ** 1.5 * 3.0)
    for j in range(1, 4):
        assert jet.entry((j,)) == 0.0
    assert not prof.non_constant


def test_profile_jet_matches_definition():
    prof = OscillatingProfile(2.0, 0.25, B)
    x = 0.37
    jet = profile_jet(prof, x, 2)
    assert jet.entry((0,)) == pytest.approx(0.25 ** 2 * float(B.value(x / 0.25)))
    fd = finite_difference_jet(lambda p: float(prof.value(p[0])), (x,), 2,
                               step=1e-3)
    assert jet.entry((1,)) == pytest.approx(fd.entry((1,)), rel=1e-6)
    assert jet.entry((2,)) == pytest.approx(fd.entry((2,)), rel=1e-5)


def test_profile_sup_scaling_exact():
    # sampling的 scaled grids make the scaled sup identity hold to rounding
    for order in range(0, 3):
        for eps in (0.25, 0.125):
            prof = OscillatingProfile(1.7, eps, B)
            lhs = prof.sup_derivative(order)
            rhs = eps ** (1.7 - order) * B.sup_derivative(order)
            assert lhs == pytest.approx(rhs, rel=1e-12)


def test_profile_json_round_trip():
    prof = OscillatingProfile(1.5, 0.125, TrigPolynomial.parse("1.5+0.3*sin(2)"))
    again = OscillatingProfile.from_json(prof.to_json())
    assert again == prof


def test_vertical_map_zero_profile_is_identity():
    vm = VerticalMap(None)
    fwd, inv = vertical_map_jets(vm, (0.4, -0.3), 3)
    assert fwd.entry((0, 0)) == pytest.approx(-0.3)
    assert fwd.entry((0, 1)) == pytest.approx(1.0)
    assert inv.entry((0, 1)) == pytest.approx(1.0)
    for beta in multi_indices_up_to(2, 3):
        if sum(beta) >= 2 or beta == (1, 0):
            assert fwd.entry(beta) == 0.0


def test_vertical_map_height_derivative():
    prof = OscillatingProfile(1.0, 0.25, B)
    vm = VerticalMap(prof)
    for x in (0.1, 0.62):
        fwd = vm.forward_jet((x, -0.5), 2)
        assert fwd.entry((0, 1)) == pytest.approx(1.0 + float(prof.value(x)))
        assert fwd.entry((0, 2)) == 0.0


def test_vertical_map_inverse_round_trip_jets():
    from polyosc.combinatorics import DerivativeTable, faa_di_bruno_compose
    prof = OscillatingProfile(1.5, 0.25, B)
    vm = VerticalMap(prof)
    pt = (0.3, -0.4)
    fwd = vm.forward_jet(pt, 3)
    inv = vm.inverse_jet((pt[0], fwd.entry((0, 0))), 3)
    xcomp = DerivativeTable(2, 3, {b: (pt[0] if sum(b) == 0 else
                                       (1.0 if b == (1, 0) else 0.0))
                                   for b in multi_indices_up_to(2, 3)})
    expected = {(): pt[1], (1,): 1.0}
    for tup in [(), (0,), (1,), (0, 0), (0, 1), (1, 1), (0, 0, 1)]:
        got = faa_di_bruno_compose(tup, inv, [xcomp, fwd])
        assert got == pytest.approx(expected.get(tup, 0.0), abs=1e-12)


def test_vertical_map_degeneracy_detected():
    # positive profiles can never fold the map; fake one that does
    class Collapsing:
        def derivative_values(self, order, x):
            return np.full_like(np.asarray(x, dtype=float),
                                -2.0 if order == 0 else 0.0)

    vm = VerticalMap(Collapsing())
    with pytest.raises(GeometryError):
        vm.inverse(0.3, -0.5)
    with pytest.raises(GeometryError):
        vm.forward_jet((0.3, -0.5), 2)


def test_collar_map_zero_branch_and_top_value():
    prof = OscillatingProfile(1.5, 0.25, B)
    cm = CollarMap(prof, m=2)
    assert cm.value(0.2, -0.7) == 0.0
    jet = cm.jet((0.2, -0.7), 2)
    assert all(v == 0.0 for v in jet.entries.values())
    x = 0.11
    top = float(prof.value(x))
    assert cm.value(x, top) == pytest.approx(top, rel=1e-13)


def test_collar_map_junction_jets_vanish():
    prof = OscillatingProfile(1.0, 0.125, B)
    cm = CollarMap(prof, m=2)
    jet = cm.jet((0.4, -0.125), 2)
    assert max(abs(v) for v in jet.entries.values()) < 1e-13


def test_collar_map_jets_match_finite_differences():
    # the oracle's own truncation limits the comparison: the profile
    # oscillates at scale eps, so high x-derivatives are large
    prof = OscillatingProfile(1.5, 0.25, B)
    cm = CollarMap(prof, m=2)
    pt = (0.37, -0.1)
    jet = cm.jet(pt, 2)
    fd = finite_difference_jet(lambda p: float(cm.value(p[0], p[1])), pt, 2,
                               step=5e-4)
    for beta in multi_indices_up_to(2, 2):
        assert jet.entry(beta) == pytest.approx(fd.entry(beta), rel=1e-4,
                                                abs=1e-7)


def test_collar_map_outside_domain_raises():
    prof = OscillatingProfile(1.0, 0.25, B)
    cm = CollarMap(prof, m=2)
    with pytest.raises(GeometryError):
        cm.jet((0.2, 0.9), 1)


def test_pullback_identity_and_linear():
    from polyosc.combinatorics import DerivativeTable
    rng = np.random.default_rng(4)
    phi = DerivativeTable(2, 3, {b: rng.normal()
                                 for b in multi_indices_up_to(2, 3)})
    pt = (0.3, -0.2)
    ident = [DerivativeTable(2, 3, {b: (pt[i] if sum(b) == 0 else
                                        (1.0 if b == ((1, 0), (0, 1))[i] else 0.0))
                                    for b in multi_indices_up_to(2, 3)})
             for i in range(2)]
    for alpha in [(1, 0), (1, 1), (0, 2)]:
        assert pullback_jet(phi, ident, alpha) == pytest.approx(phi.entry(alpha))

    # linear outer function: only first-order outer jets survive
    lin = DerivativeTable(2, 3, {b: ({(0, 0): 0.5, (1, 0): 2.0, (0, 1): -1.0}
                                     .get(b, 0.0))
                                 for b in multi_indices_up_to(2, 3)})
    prof = OscillatingProfile(1.5, 0.25, B)
    vm = VerticalMap(prof)
    comps = vm.inverse_component_jets((0.3, 0.05), 3)
    for alpha in [(2, 0), (1, 1)]:
        want = 2.0 * comps[0].entry(alpha) + (-1.0) * comps[1].entry(alpha)
        assert pullback_jet(lin, comps, alpha) == pytest.approx(want, rel=1e-12)


def test_pullback_spline_against_finite_differences():
    from polyosc.splines import SplineFunction, TensorSplineSpace
    rng = np.random.default_rng(8)
    space = TensorSplineSpace.uniform([(0.0, 1.0), (-1.0, 0.0)], 3, [4, 4])
    phi = SplineFunction(space, rng.uniform(-1, 1, space.dimension))
    prof = OscillatingProfile(1.5, 0.5, B)
    vm = VerticalMap(prof)
    x, xn = 0.3, -0.22

    def composed(p):
        return float(phi.derivative_values(
            (0, 0), np.array([[p[0], float(vm.inverse(p[0], p[1]))]]))[0])

    t = float(vm.inverse(x, xn))
    comps = vm.inverse_component_jets((x, xn), 2)
    fd = finite_difference_jet(composed, (x, xn), 2, step=2e-3)
    for alpha in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]:
        got = pullback_jet(phi.jet((x, t), 2), comps, alpha)
        assert got == pytest.approx(fd.entry(alpha), rel=1e-6, abs=1e-7)


def test_pullback_order_overflow():
    from polyosc.combinatorics import DerivativeTable
    phi = DerivativeTable(2, 1, {b: 0.0 for b in multi_indices_up_to(2, 1)})
    with pytest.raises(ValueError):
        pullback_jet(phi, [phi, phi], (1, 1))


def test_atlas_distance_basic_cases():
    prof = OscillatingProfile(2.0, 0.25, B)
    assert atlas_profile_distance(prof, prof, 2) == 0.0
    p1 = OscillatingProfile(1.0, 0.5, TrigPolynomial(((0, 2.0, 0.0),)))
    p2 = OscillatingProfile(1.0, 0.5, TrigPolynomial(((0, 1.0, 0.0),)))
    assert atlas_profile_distance(p1, p2, 0) == pytest.approx(0.5)
    d0 = atlas_profile_distance(prof, None, 0)
    assert d0 == pytest.approx(0.25 ** 2 * 3.0, rel=1e-10)
    with pytest.raises(ValueError):
        atlas_profile_distance(prof, None, -1)


def test_atlas_distance_two_sided_bounds():
    for h in (0, 1, 2):
        ratios = []
        for eps in (0.25, 0.125, 0.0625):
            prof = OscillatingProfile(2.0, eps, B)
            ratios.append(atlas_profile_distance(prof, None, h)
                          / eps ** (2.0 - h))
        assert max(ratios) / min(ratios) < 4.0


def test_classifier_examples():
    assert classify_stability(2, 1, 2.0).regime is Regime.STABLE
    assert classify_stability(2, 1, 1.0).regime is Regime.DEGENERATE
    assert classify_stability(2, 1, 1.5).regime is Regime.CRITICAL
    assert classify_stability(5, 2, 3.6).regime is Regime.STABLE
    assert classify_stability(5, 2, 3.5).regime is Regime.INAPPLICABLE
    assert classify_stability(5, 2, 3.6).threshold == pytest.approx(3.5)


def test_classifier_strong_case_threshold_uniform_in_m():
    for m in (2, 3, 4, 5):
        assert classify_stability(m, m - 1, 1.6).regime is Regime.STABLE
        assert classify_stability(m, m - 1, 1.5).regime is Regime.CRITICAL
        assert classify_stability(m, m - 1, 1.4).regime is Regime.DEGENERATE


def test_classifier_argument_errors():
    with pytest.raises(ValueError):
        classify_stability(2, 2, 1.0)
    with pytest.raises(ValueError):
        classify_stability(2, 0, 1.0)
    with pytest.raises(ValueError):
        classify_stability(1, 1, 1.0)
    with pytest.raises(ValueError):
        classify_stability(3, 1, -0.5)


def _family(alpha, eps_list):
    return [OscillatingProfile(alpha, e, B) for e in eps_list]


def test_criterion_rates_spec_examples():
    eps_list = [1 / 4, 1 / 8, 1 / 16, 1 / 32]
    bn = B.sup_derivative(0)
    theta = 0.55
    rep = criterion_rates(_family(2.0, eps_list),
                          [e ** (2.0 * theta) * bn for e in eps_list], 2, 1)
    assert rep.satisfied
    # slopes equal the proof's exponents alpha-j-alpha*theta*(m-j-k+1/2)
    for row, expect in zip(rep.rows, (0.35, 0.45, 0.55)):
        assert row.slope == pytest.approx(expect, abs=1e-6)

    for theta in (0.2, 0.5, 0.8):
        rep_low = criterion_rates(_family(1.0, eps_list),
                                  [e ** theta * bn for e in eps_list], 2, 1)
        assert not rep_low.satisfied
        assert not rep_low.rows[2].vanishes
        assert rep_low.rows[2].slope == pytest.approx(1 + theta / 2 - 2, abs=1e-6)


def test_criterion_rates_no_perturbation():
    eps_list = [1 / 4, 1 / 8, 1 / 16]
    fam = _family(2.0, eps_list)
    rep = criterion_rates(fam, [0.1] * 3, 2, 1, limit=list(fam))
    assert rep.satisfied
    assert all(q == 0.0 for row in rep.rows for q in row.quotients)


def test_criterion_rates_kappa_precondition():
    eps_list = [1 / 4, 1 / 8]
    fam = _family(1.0, eps_list)
    with pytest.raises(PreconditionError):
        criterion_rates(fam, [1e-12, 1e-12], 2, 1)
