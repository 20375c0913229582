"""Jet fields: functions evaluable together with all derivatives at a point.

A *jet field* is any callable ``field(point, order_cap) -> DerivativeTable``.
The identity verifiers consume jet fields so that polynomial data (exact
jets), spline data, and semi-analytic strip solutions all go through one code
path.  This module provides the polynomial implementation and a product
helper for separable test data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .combinatorics import DerivativeTable, multi_indices_up_to

__all__ = ["PolynomialField", "SeparableField", "JetField"]

JetField = Callable[[Sequence[float], int], DerivativeTable]


@dataclass(frozen=True)
class PolynomialField:
    """N-variable polynomial with exact jets, stored as monomial coefficients."""

    dim: int
    coeffs: Mapping[tuple[int, ...], float]

    def __post_init__(self):
        object.__setattr__(self, "_dcache", {})

    def __call__(self, point: Sequence[float], order_cap: int) -> DerivativeTable:
        return self.jet(point, order_cap)

    def value(self, point: Sequence[float]) -> float:
        x = np.asarray(point, dtype=float)
        total = 0.0
        for mono, c in self.coeffs.items():
            total += c * float(np.prod(x ** np.asarray(mono)))
        return total

    def derivative(self, beta: Sequence[int]) -> "PolynomialField":
        out: dict[tuple[int, ...], float] = {}
        for mono, c in self.coeffs.items():
            factor = 1.0
            new = list(mono)
            for i, b in enumerate(beta):
                if new[i] < b:
                    factor = 0.0
                    break
                for _ in range(b):
                    factor *= new[i]
                    new[i] -= 1
            if factor != 0.0:
                key = tuple(new)
                out[key] = out.get(key, 0.0) + c * factor
        return PolynomialField(self.dim, out)

    def _cached_derivative(self, beta: tuple[int, ...]) -> "PolynomialField":
        cache = self._dcache
        if beta not in cache:
            cache[beta] = self.derivative(beta)
        return cache[beta]

    def jet(self, point: Sequence[float], order_cap: int) -> DerivativeTable:
        entries = {}
        for beta in multi_indices_up_to(self.dim, order_cap):
            entries[beta] = self._cached_derivative(beta).value(point)
        return DerivativeTable(self.dim, order_cap, entries)

    def derivative_values(self, beta: Sequence[int], points: np.ndarray) -> np.ndarray:
        return self._cached_derivative(tuple(beta)).eval_grid(points)

    def eval_grid(self, points: np.ndarray) -> np.ndarray:
        """Vectorized evaluation; ``points`` has shape (Q, dim)."""
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[0])
        if not self.coeffs:
            return out
        monos = np.asarray(list(self.coeffs.keys()))
        cs = np.asarray(list(self.coeffs.values()))
        return (pts[:, None, :] ** monos[None, :, :]).prod(axis=2) @ cs

    @staticmethod
    def random(dim: int, degree: int, rng: np.random.Generator,
               scale: float = 1.0) -> "PolynomialField":
        coeffs = {}
        for beta in multi_indices_up_to(dim, degree):
            coeffs[beta] = scale * rng.uniform(-1.0, 1.0)
        return PolynomialField(dim, coeffs)


@dataclass(frozen=True)
class SeparableField:
    """Product of 1D factors, each given by a callable (x, order) -> value.

    ``factors[i](x, j)`` must return the j-th derivative of the i-th factor.
    """

    factors: tuple[Callable[[float, int], float], ...]

    def __call__(self, point: Sequence[float], order_cap: int) -> DerivativeTable:
        dim = len(self.factors)
        cache = [[self.factors[i](float(point[i]), j) for j in range(order_cap + 1)]
                 for i in range(dim)]

        def value_of(beta):
            out = 1.0
            for i, b in enumerate(beta):
                out *= cache[i][b]
            return out

        return DerivativeTable.from_values(dim, order_cap, value_of)
