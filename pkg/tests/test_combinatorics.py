import math

import numpy as np
import pytest

from polyosc.combinatorics import (DerivativeTable, faa_di_bruno_compose,
                                   finite_difference_jet, leibniz_product,
                                   multi_indices, multi_indices_up_to,
                                   set_partitions, subsets, table_compose_scalar,
                                   table_product)

BELL = {1: 1, 2: 2, 3: 5, 4: 15, 5: 52, 6: 203, 7: 877, 8: 4140, 9: 21147,
        10: 115975}


@pytest.mark.parametrize("n,count", sorted(BELL.items()))
def test_partition_counts_are_bell_numbers(n, count):
    assert len(set_partitions(n)) == count


def test_partitions_are_canonical_and_valid():
    parts = set_partitions(4)
    assert parts[0] == [(1, 2, 3, 4)]
    for blocks in parts:
        flat = [i for b in blocks for i in b]
        assert sorted(flat) == [1, 2, 3, 4]
        mins = [min(b) for b in blocks]
        assert mins == sorted(mins)
    assert parts == set_partitions(4)  # deterministic order


@pytest.mark.parametrize("n", [0, 11])
def test_partition_range_errors(n):
    with pytest.raises(ValueError):
        set_partitions(n)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_subset_counts(n):
    subs = subsets(n)
    assert len(subs) == 2 ** n
    assert subs[0] == ()
    assert len(set(subs)) == len(subs)


def test_subsets_range_error():
    with pytest.raises(ValueError):
        subsets(17)


def _table_1d(values):
    return DerivativeTable(1, len(values) - 1,
                           {(j,): float(v) for j, v in enumerate(values)})


def test_leibniz_square_of_identity():
    # u = v = x at x = 1: (x^2)' = 2
    u = _table_1d([1.0, 1.0, 0.0, 0.0])
    assert leibniz_product((0,), u, u) == pytest.approx(2.0)


def test_leibniz_zeroth_order_is_plain_product():
    u = _table_1d([3.0, 1.0])
    v = _table_1d([-2.0, 5.0])
    assert leibniz_product((), u, v) == pytest.approx(-6.0)


def test_leibniz_with_unit_factor_returns_entries():
    rng = np.random.default_rng(0)
    u = DerivativeTable(2, 3, {b: rng.normal()
                               for b in multi_indices_up_to(2, 3)})
    one = DerivativeTable(2, 3, {b: 1.0 if sum(b) == 0 else 0.0
                                 for b in multi_indices_up_to(2, 3)})
    for tup in [(), (0,), (1, 1), (0, 1, 0)]:
        assert leibniz_product(tup, u, one) == pytest.approx(u.directional(tup))


def test_leibniz_matches_finite_differences_for_trig():
    def u(x):
        return math.sin(1.3 * x[0]) * math.cos(0.4 * x[1])

    def v(x):
        return math.cos(0.7 * x[0] + 0.2 * x[1])

    point = (0.35, -0.6)
    ju = finite_difference_jet(u, point, 3)
    jv = finite_difference_jet(v, point, 3)
    juv = finite_difference_jet(lambda x: u(x) * v(x), point, 3)
    for tup in [(0, 0, 1), (1, 1, 0), (0, 1, 1)]:
        got = leibniz_product(tup, ju, jv)
        assert got == pytest.approx(juv.directional(tup), rel=1e-6, abs=1e-6)


def test_faa_single_variable_square():
    # f(t) = t^2, Phi = identity, second derivative at x = 3
    outer = _table_1d([9.0, 6.0, 2.0])
    inner = _table_1d([3.0, 1.0, 0.0])
    assert faa_di_bruno_compose((0, 0), outer, [inner]) == pytest.approx(2.0)


def test_faa_first_order_is_chain_rule():
    rng = np.random.default_rng(1)
    outer = DerivativeTable(2, 1, {b: rng.normal()
                                   for b in multi_indices_up_to(2, 1)})
    inners = [DerivativeTable(2, 1, {b: rng.normal()
                                     for b in multi_indices_up_to(2, 1)})
              for _ in range(2)]
    got = faa_di_bruno_compose((0,), outer, inners)
    want = sum(outer.entry(tuple(1 if j == c else 0 for j in range(2)))
               * inners[c].entry((1, 0)) for c in range(2))
    assert got == pytest.approx(want)


def test_faa_sin_of_cubic_matches_finite_differences():
    x0 = 0.7

    def f(x):
        return math.sin(x[0] ** 3)

    outer = _table_1d([math.sin(x0 ** 3 + j * math.pi / 2) for j in range(5)])
    inner = _table_1d([x0 ** 3, 3 * x0 ** 2, 6 * x0, 6.0, 0.0])
    got = faa_di_bruno_compose((0, 0, 0, 0), outer, [inner])
    want = finite_difference_jet(f, (x0,), 4).entry((4,))
    assert got == pytest.approx(want, rel=1e-6)


def test_faa_symmetric_under_index_permutation():
    rng = np.random.default_rng(2)
    outer = DerivativeTable(2, 3, {b: rng.normal()
                                   for b in multi_indices_up_to(2, 3)})
    inners = [DerivativeTable(2, 3, {b: rng.normal()
                                     for b in multi_indices_up_to(2, 3)})
              for _ in range(2)]
    base = faa_di_bruno_compose((0, 1, 1), outer, inners)
    for tup in [(1, 0, 1), (1, 1, 0)]:
        assert faa_di_bruno_compose(tup, outer, inners) == pytest.approx(base)


def test_faa_identity_inner_reproduces_outer():
    rng = np.random.default_rng(3)
    point = (0.4, -0.9)
    outer = DerivativeTable(2, 3, {b: rng.normal()
                                   for b in multi_indices_up_to(2, 3)})
    ident = [DerivativeTable(2, 3, {b: (point[i] if sum(b) == 0 else
                                        (1.0 if b == ((1, 0), (0, 1))[i] else 0.0))
                                    for b in multi_indices_up_to(2, 3)})
             for i in range(2)]
    for tup in [(0,), (0, 1), (1, 1, 0)]:
        got = faa_di_bruno_compose(tup, outer, ident)
        assert got == pytest.approx(outer.directional(tup), abs=1e-13)


def test_dimension_mismatch_raises():
    outer = _table_1d([1.0, 1.0])
    inner = _table_1d([0.0, 1.0])
    with pytest.raises(ValueError):
        faa_di_bruno_compose((0,), outer, [inner, inner])


def test_order_cap_too_small_raises():
    u = _table_1d([1.0, 1.0])
    with pytest.raises(ValueError):
        leibniz_product((0, 0), u, u)


def test_incomplete_table_rejected():
    with pytest.raises(ValueError):
        DerivativeTable(1, 2, {(0,): 1.0, (2,): 0.0})


def test_finite_difference_constant_and_square():
    const = finite_difference_jet(lambda x: 4.5, (0.3,), 3)
    assert const.entry((0,)) == pytest.approx(4.5)
    for j in range(1, 4):
        assert abs(const.entry((j,))) < 1e-10
    square = finite_difference_jet(lambda x: x[0] ** 2, (0.0,), 2)
    assert square.entry((2,)) == pytest.approx(2.0, abs=1e-8)


def test_finite_difference_exponential_series():
    jet = finite_difference_jet(lambda x: math.exp(x[0]), (0.0,), 4)
    for j in range(5):
        assert jet.entry((j,)) == pytest.approx(1.0, abs=1e-5)


def test_finite_difference_order_cap_limit():
    with pytest.raises(ValueError):
        finite_difference_jet(lambda x: x[0], (0.0,), 5)


def test_table_product_and_compose_round_trip():
    # jets of exp(x) * x and of (1 + x)^3 via the table helpers
    x0 = 0.2
    exp_tab = _table_1d([math.exp(x0)] * 4)
    lin_tab = _table_1d([x0, 1.0, 0.0, 0.0])
    prod = table_product(exp_tab, lin_tab)
    assert prod.entry((1,)) == pytest.approx(math.exp(x0) * (1 + x0))
    outer = _table_1d([(1 + x0) ** 3, 3 * (1 + x0) ** 2, 6 * (1 + x0), 6.0])
    inner = _table_1d([x0, 1.0, 0.0, 0.0])
    comp = table_compose_scalar(outer, inner)
    assert comp.entry((2,)) == pytest.approx(6 * (1 + x0))


def test_multi_index_enumeration():
    assert multi_indices(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert len(multi_indices(3, 4)) == 15
    assert multi_indices_up_to(2, 1) == [(0, 0), (1, 0), (0, 1)]
