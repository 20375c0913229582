"""Exact combinatorial machinery for derivatives of products and compositions.

Multi-indices are plain tuples of non-negative ints whose length is the
ambient dimension.  Jets (all partial derivatives of a function at one point,
up to a fixed order) are stored densely in a :class:`DerivativeTable`.  On top
of these, the module provides the subset-sum product rule and the
partition-sum composition rule for repeated directional derivatives, plus a
finite-difference jet builder used as an independent oracle in tests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

__all__ = [
    "DerivativeTable",
    "multi_indices",
    "multi_indices_up_to",
    "index_tuple_to_multiindex",
    "multiindex_factorial",
    "set_partitions",
    "subsets",
    "leibniz_product",
    "faa_di_bruno_compose",
    "compose_coefficients",
    "finite_difference_jet",
    "table_product",
    "table_compose_scalar",
]


def multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices of exactly the given order, in lexicographic order."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if dim == 1:
        return [(order,)]
    out = []
    for first in range(order, -1, -1):
        for rest in multi_indices(dim - 1, order - first):
            out.append((first,) + rest)
    return out


def multi_indices_up_to(dim: int, cap: int) -> list[tuple[int, ...]]:
    """All multi-indices of order 0..cap, ordered by order then lexicographically."""
    out = []
    for order in range(cap + 1):
        out.extend(multi_indices(dim, order))
    return out


def index_tuple_to_multiindex(index_tuple: Sequence[int], dim: int) -> tuple[int, ...]:
    """Count coordinate occurrences: (0, 1, 1) in dim 2 becomes (1, 2)."""
    beta = [0] * dim
    for i in index_tuple:
        if not 0 <= i < dim:
            raise ValueError(f"coordinate index {i} outside range 0..{dim - 1}")
        beta[i] += 1
    return tuple(beta)


def multiindex_factorial(beta: Sequence[int]) -> int:
    out = 1
    for b in beta:
        out *= math.factorial(b)
    return out


@dataclass(frozen=True)
class DerivativeTable:
    """Dense jet of one scalar function at one point.

    ``entries`` maps every multi-index of order <= ``order_cap`` to the value
    of the corresponding partial derivative.  Completeness is enforced at
    construction so downstream term sums never hit a missing key.
    """

    dim: int
    order_cap: int
    entries: Mapping[tuple[int, ...], float] = field(repr=False)

    def __post_init__(self):
        expected = multi_indices_up_to(self.dim, self.order_cap)
        missing = [b for b in expected if b not in self.entries]
        if missing:
            raise ValueError(f"jet table incomplete, missing {missing[:3]}...")
        for value in self.entries.values():
            if not math.isfinite(value):
                raise ValueError("jet table contains a non-finite value")

    def entry(self, beta: Sequence[int]) -> float:
        return self.entries[tuple(beta)]

    def directional(self, index_tuple: Sequence[int]) -> float:
        """Repeated directional derivative identified by its coordinate list."""
        return self.entries[index_tuple_to_multiindex(index_tuple, self.dim)]

    @staticmethod
    def from_values(dim: int, order_cap: int,
                    value_of: Callable[[tuple[int, ...]], float]) -> "DerivativeTable":
        entries = {b: float(value_of(b)) for b in multi_indices_up_to(dim, order_cap)}
        return DerivativeTable(dim, order_cap, entries)


def set_partitions(n: int) -> list[list[tuple[int, ...]]]:
    """All partitions of {1,..,n}, blocks sorted by smallest element.

    Enumeration follows restricted-growth strings in lexicographic order, so
    the output order is canonical and reproducible.  The count is the Bell
    number B(n).
    """
    if not 1 <= n <= 10:
        raise ValueError(f"n must be in 1..10, got {n}")
    partitions = []

    def grow(prefix: list[int]):
        if len(prefix) == n:
            nblocks = max(prefix) + 1
            blocks: list[list[int]] = [[] for _ in range(nblocks)]
            for pos, label in enumerate(prefix):
                blocks[label].append(pos + 1)
            partitions.append([tuple(b) for b in blocks])
            return
        top = max(prefix) if prefix else -1
        for label in range(top + 2):
            grow(prefix + [label])

    grow([0])
    return partitions


def subsets(n: int) -> list[tuple[int, ...]]:
    """All 2^n subsets of {1,..,n} in bitmask order (empty set first)."""
    if not 1 <= n <= 16:
        raise ValueError(f"n must be in 1..16, got {n}")
    out = []
    for mask in range(1 << n):
        out.append(tuple(j + 1 for j in range(n) if mask >> j & 1))
    return out


def leibniz_product(index_tuple: Sequence[int], u: DerivativeTable,
                    v: DerivativeTable) -> float:
    """Directional derivative of a product as a sum over index subsets."""
    n = len(index_tuple)
    if u.dim != v.dim:
        raise ValueError("jet tables live in different dimensions")
    if u.order_cap < n or v.order_cap < n:
        raise ValueError(f"order_cap too small for a derivative of order {n}")
    if n == 0:
        return u.directional(()) * v.directional(())
    total = 0.0
    for mask in range(1 << n):
        left = tuple(index_tuple[j] for j in range(n) if mask >> j & 1)
        right = tuple(index_tuple[j] for j in range(n) if not mask >> j & 1)
        total += u.directional(left) * v.directional(right)
    return total


def _partition_terms(n: int):
    """Partitions of positions {0,..,n-1} with blocks as index tuples."""
    for part in set_partitions(n):
        yield [tuple(i - 1 for i in block) for block in part]


def compose_coefficients(index_tuple: Sequence[int],
                         inner_jets: Sequence[DerivativeTable]
                         ) -> dict[tuple[int, ...], float]:
    """Coefficients of outer-function derivatives in a composition derivative.

    Returns the map ``beta -> c_beta`` such that the directional derivative of
    f(Phi(x)) along ``index_tuple`` equals ``sum_beta c_beta D^beta f(Phi(x))``,
    where beta runs over multi-indices of the outer arity.  The coefficients
    are homogeneous polynomials in the inner jets and are shared by every
    outer function, which is what makes pullback assembly cheap.
    """
    r = len(inner_jets)
    n = len(index_tuple)
    if n == 0:
        return {(0,) * r: 1.0}
    for jet in inner_jets:
        if jet.order_cap < n:
            raise ValueError("inner jets truncated below the derivative order")
    coeffs: dict[tuple[int, ...], float] = {}
    for blocks in _partition_terms(n):
        block_tuples = [tuple(index_tuple[pos] for pos in block) for block in blocks]
        for assignment in itertools.product(range(r), repeat=len(blocks)):
            prod = 1.0
            for comp, tup in zip(assignment, block_tuples):
                prod *= inner_jets[comp].directional(tup)
                if prod == 0.0:
                    break
            if prod == 0.0:
                continue
            beta = [0] * r
            for comp in assignment:
                beta[comp] += 1
            key = tuple(beta)
            coeffs[key] = coeffs.get(key, 0.0) + prod
    return coeffs


def faa_di_bruno_compose(index_tuple: Sequence[int], outer: DerivativeTable,
                         inner_jets: Sequence[DerivativeTable]) -> float:
    """Directional derivative of f(Phi(x)) as a sum over set partitions.

    ``outer`` holds the jets of f at Phi(x) over r variables; ``inner_jets``
    holds one jet table per component of Phi, all over the same N variables.
    Exact for polynomial data.
    """
    if outer.dim != len(inner_jets):
        raise ValueError(
            f"outer arity {outer.dim} does not match {len(inner_jets)} inner components")
    n = len(index_tuple)
    if outer.order_cap < n:
        raise ValueError("outer jets truncated below the derivative order")
    total = 0.0
    for beta, c in compose_coefficients(index_tuple, inner_jets).items():
        total += c * outer.entry(beta)
    return total


def table_product(u: DerivativeTable, v: DerivativeTable,
                  order_cap: int | None = None) -> DerivativeTable:
    """Whole-table product rule: jets of u*v from jets of u and v."""
    cap = min(u.order_cap, v.order_cap) if order_cap is None else order_cap
    entries = {}
    for beta in multi_indices_up_to(u.dim, cap):
        tup = _multiindex_to_index_tuple(beta)
        entries[beta] = leibniz_product(tup, u, v)
    return DerivativeTable(u.dim, cap, entries)


def table_compose_scalar(outer_1d: DerivativeTable,
                         inner: DerivativeTable,
                         order_cap: int | None = None) -> DerivativeTable:
    """Whole-table chain rule for a scalar outer function of one inner field."""
    if outer_1d.dim != 1:
        raise ValueError("outer jet must be one-dimensional")
    cap = min(outer_1d.order_cap, inner.order_cap) if order_cap is None else order_cap
    entries = {}
    for beta in multi_indices_up_to(inner.dim, cap):
        tup = _multiindex_to_index_tuple(beta)
        entries[beta] = faa_di_bruno_compose(tup, outer_1d, [inner])
    return DerivativeTable(inner.dim, cap, entries)


def _multiindex_to_index_tuple(beta: Sequence[int]) -> tuple[int, ...]:
    out: list[int] = []
    for coord, count in enumerate(beta):
        out.extend([coord] * count)
    return tuple(out)


def finite_difference_jet(f: Callable[[Sequence[float]], float],
                          point: Sequence[float], order_cap: int,
                          step: float = 1e-2) -> DerivativeTable:
    """Central-difference jet with one Richardson extrapolation level.

    Used as the independent oracle for the product/composition rules; the
    step default balances truncation against rounding for orders <= 4.
    """
    if order_cap > 4:
        raise ValueError("finite-difference jets are reliable only up to order 4")
    point = tuple(float(c) for c in point)
    dim = len(point)

    def central(beta: tuple[int, ...], x: tuple[float, ...], h: float) -> float:
        for coord, count in enumerate(beta):
            if count > 0:
                reduced = tuple(b - (1 if c == coord else 0) for c, b in enumerate(beta))
                xp = tuple(v + (h if c == coord else 0.0) for c, v in enumerate(x))
                xm = tuple(v - (h if c == coord else 0.0) for c, v in enumerate(x))
                return (central(reduced, xp, h) - central(reduced, xm, h)) / (2.0 * h)
        return f(x)

    def estimate(beta: tuple[int, ...]) -> float:
        if sum(beta) == 0:
            return f(point)
        coarse = central(beta, point, step)
        fine = central(beta, point, step / 2.0)
        return (4.0 * fine - coarse) / 3.0

    return DerivativeTable.from_values(dim, order_cap, estimate)
