"""Tensor-product B-spline spaces conforming to high-order Sobolev constraints.

Bases are open-clamped (or uniformly periodic) B-splines evaluated with the
Cox-de Boor recursion including derivatives.  Clamped knots make endpoint
jets triangular in the outermost coefficient layers, so annihilating whole
layers enforces vanishing normal derivatives exactly, not approximately;
that is how the W^{m,2} cap W^{k,2}_0 trial spaces are realized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .combinatorics import DerivativeTable, multi_indices_up_to
from .errors import ConfigurationError
from .quadrature import QuadratureRule, gauss_rule, tensor_rule

__all__ = [
    "BSplineBasis1D",
    "TensorSplineSpace",
    "ConstraintSet",
    "ConstrainedSpace",
    "SplineFunction",
    "build_constrained_space",
    "quadrature_rule",
]


def _find_span(knots: np.ndarray, degree: int, x: float, n_basis: int) -> int:
    lo, hi = degree, n_basis
    if x >= knots[hi]:
        return hi - 1
    if x <= knots[lo]:
        return lo
    return int(np.searchsorted(knots, x, side="right") - 1)


def _ders_basis(knots: np.ndarray, degree: int, span: int, x: float,
                max_order: int) -> np.ndarray:
    """All non-vanishing basis functions and derivatives at x (NURBS book A2.3)."""
    p = degree
    ndu = np.ones((p + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    for j in range(1, p + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((max_order + 1, p + 1))
    ders[0, :] = ndu[:, p]
    nders = min(max_order, p)
    a = np.ones((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, nders + 1):
            d = 0.0
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    r = float(p)
    for k in range(1, nders + 1):
        ders[k, :] *= r
        r *= p - k
    return ders


@dataclass(frozen=True)
class BSplineBasis1D:
    """Univariate spline basis on a breakpoint mesh, clamped or periodic."""

    degree: int
    breaks: tuple[float, ...]
    periodic: bool = False
    knots: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        breaks = np.asarray(self.breaks, dtype=float)
        if len(breaks) < 2 or np.any(np.diff(breaks) <= 0):
            raise ConfigurationError("breakpoints must be strictly increasing")
        p = self.degree
        if p < 1:
            raise ConfigurationError("degree must be >= 1")
        if self.periodic:
            if len(breaks) - 1 < p + 1:
                raise ConfigurationError("periodic basis needs at least degree+1 elements")
            a, b = breaks[0], breaks[-1]
            left = a - (b - breaks[-1 - p:-1])
            right = b + (breaks[1:p + 1] - a)
            knots = np.concatenate([left, breaks, right])
        else:
            knots = np.concatenate([np.full(p, breaks[0]), breaks,
                                    np.full(p, breaks[-1])])
        object.__setattr__(self, "knots", knots)

    @property
    def interval(self) -> tuple[float, float]:
        return self.breaks[0], self.breaks[-1]

    @property
    def n_elements(self) -> int:
        return len(self.breaks) - 1

    @property
    def dimension(self) -> int:
        if self.periodic:
            return self.n_elements
        return self.n_elements + self.degree

    def _wrap(self, x: float) -> float:
        a, b = self.interval
        if self.periodic:
            return a + (x - a) % (b - a)
        return x

    def eval_all(self, x: float, max_order: int) -> tuple[np.ndarray, np.ndarray]:
        """Indices and values/derivatives of the degree+1 basis functions at x."""
        a, b = self.interval
        xw = self._wrap(float(x))
        if not a - 1e-12 <= xw <= b + 1e-12:
            raise ConfigurationError(f"point {x} outside the knot range [{a}, {b}]")
        p = self.degree
        n_ext = len(self.knots) - p - 1
        span = _find_span(self.knots, p, xw, n_ext)
        ders = _ders_basis(self.knots, p, span, xw, max_order)
        idx = np.arange(span - p, span + 1)
        if self.periodic:
            idx = idx % self.n_elements
        return idx, ders

    def boundary_layer_orders(self) -> int:
        """Endpoint derivative order controlled by each clamped coefficient layer."""
        return self.degree


@dataclass(frozen=True)
class TensorSplineSpace:
    bases: tuple[BSplineBasis1D, ...]

    @property
    def dim(self) -> int:
        return len(self.bases)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b.dimension for b in self.bases)

    @property
    def dimension(self) -> int:
        return int(np.prod(self.shape))

    @staticmethod
    def uniform(rect: Sequence[tuple[float, float]], degree: int,
                elements: Sequence[int],
                periodic: Sequence[bool] | None = None) -> "TensorSplineSpace":
        periodic = periodic or [False] * len(rect)
        bases = []
        for (a, b), n, per in zip(rect, elements, periodic):
            breaks = tuple(np.linspace(a, b, n + 1))
            bases.append(BSplineBasis1D(degree, breaks, periodic=per))
        return TensorSplineSpace(tuple(bases))

    def describe(self) -> dict:
        """JSON-ready descriptor for reproducibility logs."""
        return {
            "dimension": self.dimension,
            "factors": [{
                "degree": b.degree,
                "periodic": b.periodic,
                "interval": list(b.interval),
                "elements": b.n_elements,
                "breaks": list(b.breaks),
            } for b in self.bases],
        }

    def flat_index(self, multi: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.shape))


@dataclass(frozen=True)
class ConstraintSet:
    """Coefficient layers annihilated at each side of each direction.

    ``layers[d] = (lo, hi)`` zeroes the first lo and last hi coefficient
    layers in direction d, forcing the trace and the normal derivatives up to
    order lo-1 (hi-1) to vanish identically on that side.
    """

    layers: tuple[tuple[int, int], ...]

    @staticmethod
    def none(dim: int) -> "ConstraintSet":
        return ConstraintSet(tuple((0, 0) for _ in range(dim)))

    @staticmethod
    def rectangle(left: int = 0, right: int = 0, bottom: int = 0,
                  top: int = 0) -> "ConstraintSet":
        return ConstraintSet(((left, right), (bottom, top)))

    @staticmethod
    def uniform(dim: int, on_all_sides: int) -> "ConstraintSet":
        return ConstraintSet(tuple((on_all_sides, on_all_sides) for _ in range(dim)))


@dataclass(frozen=True)
class ConstrainedSpace:
    space: TensorSplineSpace
    constraints: ConstraintSet
    free_multi: tuple[tuple[int, ...], ...] = field(init=False, compare=False)
    full_to_free: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        shape = self.space.shape
        keep_per_dim = []
        for d, (lo, hi) in enumerate(self.constraints.layers):
            basis = self.space.bases[d]
            if basis.periodic and (lo or hi):
                raise ConfigurationError("cannot constrain a periodic direction")
            if lo > basis.degree or hi > basis.degree:
                raise ConfigurationError("constraint layers exceed the basis degree")
            keep = np.arange(lo, shape[d] - hi)
            if len(keep) <= 0:
                raise ConfigurationError("over-constrained space: no free layers left")
            keep_per_dim.append(keep)
        grids = np.meshgrid(*keep_per_dim, indexing="ij")
        free_multi = tuple(zip(*[g.ravel().tolist() for g in grids]))
        full_to_free = -np.ones(self.space.dimension, dtype=int)
        for pos, multi in enumerate(free_multi):
            full_to_free[self.space.flat_index(multi)] = pos
        object.__setattr__(self, "free_multi", free_multi)
        object.__setattr__(self, "full_to_free", full_to_free)

    @property
    def n_free(self) -> int:
        return len(self.free_multi)

    def inflate(self, free_coeffs: np.ndarray) -> np.ndarray:
        """Scatter free coefficients into the full coefficient array."""
        full = np.zeros(self.space.dimension)
        for pos, multi in enumerate(self.free_multi):
            full[self.space.flat_index(multi)] = free_coeffs[pos]
        return full


def build_constrained_space(rect: Sequence[tuple[float, float]], degree: int,
                            elements: Sequence[int], constraints: ConstraintSet,
                            periodic: Sequence[bool] | None = None) -> ConstrainedSpace:
    space = TensorSplineSpace.uniform(rect, degree, elements, periodic)
    return ConstrainedSpace(space, constraints)


class SplineFunction:
    """A concrete spline with a full coefficient array; evaluable with jets."""

    def __init__(self, space: TensorSplineSpace, coeffs: np.ndarray):
        self.space = space
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(space.shape)
        self._cache: dict[tuple[int, float, int], tuple[np.ndarray, np.ndarray]] = {}

    def _axis_eval(self, d: int, x: float, max_order: int):
        key = (d, float(x), max_order)
        hit = self._cache.get(key)
        if hit is None:
            hit = self.space.bases[d].eval_all(x, max_order)
            self._cache[key] = hit
        return hit

    def jet(self, point: Sequence[float], order_cap: int) -> DerivativeTable:
        axis_data = [self._axis_eval(d, float(point[d]), order_cap)
                     for d in range(self.space.dim)]
        local = self.coeffs[np.ix_(*[idx for idx, _ in axis_data])]
        entries = {}
        for beta in multi_indices_up_to(self.space.dim, order_cap):
            block = local
            for d, b in enumerate(beta):
                vec = axis_data[d][1][b]
                block = np.tensordot(block, vec, axes=([0], [0]))
            entries[beta] = float(block)
        return DerivativeTable(self.space.dim, order_cap, entries)

    def __call__(self, point: Sequence[float], order_cap: int) -> DerivativeTable:
        return self.jet(point, order_cap)

    def derivative_values(self, beta: Sequence[int], points: np.ndarray) -> np.ndarray:
        beta = tuple(beta)
        out = np.empty(len(points))
        for i, p in enumerate(points):
            axis_data = [self._axis_eval(d, float(p[d]), beta[d])
                         for d in range(self.space.dim)]
            block = self.coeffs[np.ix_(*[idx for idx, _ in axis_data])]
            for d, b in enumerate(beta):
                block = np.tensordot(block, axis_data[d][1][b], axes=([0], [0]))
            out[i] = float(block)
        return out

    def grid_derivative_values(self, beta: Sequence[int],
                               axes_points: Sequence[np.ndarray]) -> np.ndarray:
        """Derivative on a tensor grid; returns an array shaped per axis."""
        beta = tuple(beta)
        block = self.coeffs
        for d in reversed(range(self.space.dim)):
            xs = axes_points[d]
            mat = np.zeros((len(xs), self.space.shape[d]))
            for i, x in enumerate(xs):
                idx, ders = self._axis_eval(d, float(x), beta[d])
                mat[i, idx] = ders[beta[d]]
            block = np.tensordot(block, mat, axes=([d], [1]))
            block = np.moveaxis(block, -1, d)
        return block

    def value(self, point: Sequence[float]) -> float:
        return self.derivative_values((0,) * self.space.dim,
                                      np.asarray([point]))[0]


def quadrature_rule(target, order: int) -> QuadratureRule:
    """Per-element Gauss-Legendre rule on a space, interval, or breakpoint lists."""
    if order < 1:
        raise ConfigurationError("quadrature order must be >= 1")
    if isinstance(target, TensorSplineSpace):
        axes = [gauss_rule(b.breaks, order) for b in target.bases]
    elif isinstance(target, ConstrainedSpace):
        axes = [gauss_rule(b.breaks, order) for b in target.space.bases]
    elif isinstance(target, tuple) and len(target) == 2 and np.isscalar(target[0]):
        axes = [gauss_rule(np.linspace(target[0], target[1], 2), order)]
    else:
        axes = [gauss_rule(breaks, order) for breaks in target]
    return tensor_rule(axes)
