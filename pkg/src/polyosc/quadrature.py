"""Gauss-Legendre and periodic quadrature, tensorized over boxes.

Rules are per-element Gauss points glued over a sorted breakpoint list, so
piecewise-polynomial integrands are integrated exactly when the breaks align
with the integrand's own mesh.  A midpoint rule on a full period is provided
for trigonometric integrands, where it is spectrally accurate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["Rule1D", "QuadratureRule", "gauss_rule", "midpoint_rule", "tensor_rule"]


@dataclass(frozen=True)
class Rule1D:
    points: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor-product rule over a box; ``points`` has shape (Q, dim)."""

    points: np.ndarray
    weights: np.ndarray
    axes: tuple[Rule1D, ...]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, np.asarray(values).ravel()))


def gauss_rule(breaks: Sequence[float], order: int) -> Rule1D:
    """Composite Gauss-Legendre rule, ``order`` points per element.

    Exact for polynomials of degree <= 2*order - 1 on each element.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    breaks = np.asarray(sorted(set(float(b) for b in breaks)))
    if len(breaks) < 2:
        raise ValueError("need at least two breakpoints")
    nodes, wts = np.polynomial.legendre.leggauss(order)
    pts_out, wts_out = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        half = 0.5 * (b - a)
        pts_out.append(0.5 * (a + b) + half * nodes)
        wts_out.append(half * wts)
    return Rule1D(np.concatenate(pts_out), np.concatenate(wts_out))


def midpoint_rule(n: int, interval: tuple[float, float] = (-0.5, 0.5)) -> Rule1D:
    """Equispaced midpoint rule; exact for trig polynomials of degree < n."""
    a, b = interval
    h = (b - a) / n
    pts = a + h * (np.arange(n) + 0.5)
    return Rule1D(pts, np.full(n, h))


def tensor_rule(axes: Sequence[Rule1D]) -> QuadratureRule:
    grids = np.meshgrid(*[ax.points for ax in axes], indexing="ij")
    wgrids = np.meshgrid(*[ax.weights for ax in axes], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.ones(points.shape[0])
    for w in wgrids:
        weights *= w.ravel()
    return QuadratureRule(points, weights, tuple(axes))
