"""Periodic unfolding: cell grids, the exact integration identity, moment projector.

Unfolding turns a function on the thin oscillating region into a function of
a macroscopic position, a periodic cell variable, and a stretched vertical
variable.  When the oscillation period divides the window and quadrature
meshes align with cell boundaries, the change-of-variables identity is exact,
not asymptotic, so its residual is a pure consistency check on the two
integration paths.  The moment projector extracts the polynomial of degree
m-1 matching all cell-averaged jets at the top trace, the normalization that
isolates the oscillating part of unfolded sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .combinatorics import multi_indices
from .errors import ConfigurationError
from .fields import JetField, PolynomialField
from .quadrature import Rule1D, gauss_rule

__all__ = [
    "UnfoldGrid",
    "unfold_sample",
    "integration_identity_residual",
    "moment_projection",
    "moment_projector_layers",
]


def _as_integer(x: float, what: str) -> int:
    n = round(x)
    if abs(x - n) > 1e-9:
        raise ConfigurationError(f"{what} must be an integer, got {x}")
    return int(n)


@dataclass(frozen=True)
class UnfoldGrid:
    """Cell decomposition of a macroscopic window with period eps.

    Cells are centered at integer multiples of eps; only cells fully inside
    the window count, so the covered region loses at most one cell width at
    each end.
    """

    eps: float
    window: tuple[float, float] = (0.0, 1.0)
    indices: tuple[int, ...] = field(init=False, compare=False)

    def __post_init__(self):
        if self.eps <= 0:
            raise ConfigurationError("eps must be positive")
        _as_integer(1.0 / self.eps, "1/eps (cell alignment)")
        lo, hi = self.window
        k_min = math.ceil((lo + 1e-12) / self.eps + 0.5)
        k_max = math.floor((hi - 1e-12) / self.eps - 0.5)
        if k_max < k_min:
            raise ConfigurationError("window too small: no interior cells")
        object.__setattr__(self, "indices", tuple(range(k_min, k_max + 1)))

    def cell(self, k: int) -> tuple[float, float]:
        return (self.eps * (k - 0.5), self.eps * (k + 0.5))

    @property
    def covered(self) -> tuple[float, float]:
        return (self.eps * (self.indices[0] - 0.5),
                self.eps * (self.indices[-1] + 0.5))

    def cell_index(self, x: float) -> int:
        k = int(np.rint(x / self.eps))
        if k not in range(self.indices[0], self.indices[-1] + 1):
            raise ConfigurationError(f"point {x} outside the covered region")
        return k


def unfold_sample(u: Callable[[float, float], float], grid: UnfoldGrid,
                  points: np.ndarray) -> np.ndarray:
    """Values of the unfolded function at (xbar, ybar, y_N) sample points.

    The macroscopic coordinate only matters through its containing cell; the
    evaluation point is eps * k + eps * ybar at height eps * y_N.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty(len(pts))
    for i, (xb, yb, yn) in enumerate(pts):
        if not -0.5 - 1e-12 <= yb <= 0.5 + 1e-12:
            raise ConfigurationError(f"cell coordinate {yb} outside the unit cell")
        if not -1.0 / grid.eps - 1e-12 <= yn <= 1e-12:
            raise ConfigurationError(f"stretched height {yn} out of range")
        k = grid.cell_index(xb)
        out[i] = u(grid.eps * k + grid.eps * yb, grid.eps * yn)
    return out


def _merged_breaks(breaks: Sequence[float], window: tuple[float, float],
                   extra: Sequence[float] = ()) -> list[float]:
    lo, hi = window
    pts = {lo, hi}
    for b in list(breaks) + list(extra):
        if lo + 1e-14 < b < hi - 1e-14:
            pts.add(float(b))
    return sorted(pts)


def integration_identity_residual(u, grid: UnfoldGrid, a: float,
                                  index_tuple: Sequence[int] = (),
                                  x_breaks: Sequence[float] = (),
                                  y_breaks: Sequence[float] = (),
                                  order: int = 6) -> float:
    """Residual between the physical and unfolded integration paths.

    With an empty index tuple compares int u over the covered strip against
    eps times the unfolded integral.  For a non-empty tuple of length l the
    squared derivative is integrated and the unfolded side carries the
    eps^(1-2l) scaling, the derivative of the unfolded function being taken
    in the cell variables.  ``u`` must expose vectorized
    ``derivative_values``; breaks let piecewise-polynomial data be integrated
    exactly on both sides.
    """
    if not -1.0 <= a < 0.0:
        raise ConfigurationError("the strip depth a must lie in [-1, 0)")
    eps = grid.eps
    l = len(index_tuple)
    beta = (sum(1 for i in index_tuple if i == 0),
            sum(1 for i in index_tuple if i == 1))

    def physical_integrand(pts: np.ndarray) -> np.ndarray:
        vals = u.derivative_values(beta, pts)
        return vals if l == 0 else vals ** 2

    lo, hi = grid.covered
    cell_edges = [eps * (k - 0.5) for k in grid.indices] + [hi]
    rx = gauss_rule(_merged_breaks(x_breaks, (lo, hi), cell_edges), order)
    ry = gauss_rule(_merged_breaks(y_breaks, (a, 0.0)), order)
    xx, yy = np.meshgrid(rx.points, ry.points, indexing="ij")
    wts = np.outer(rx.weights, ry.weights).ravel()
    lhs = float(np.dot(wts, physical_integrand(
        np.column_stack([xx.ravel(), yy.ravel()]))))

    def unfolded(pt3: np.ndarray) -> np.ndarray:
        def du(x, y):
            return float(u.derivative_values(beta, np.array([[x, y]]))[0])
        vals = unfold_sample(du, grid, pt3) * eps ** l
        return vals if l == 0 else vals ** 2

    total = 0.0
    for k in grid.indices:
        c_lo, c_hi = grid.cell(k)
        yb_breaks = sorted({max(-0.5, min(0.5, (b - eps * k) / eps))
                            for b in list(x_breaks) + [c_lo, c_hi]} | {-0.5, 0.5})
        ryb = gauss_rule(yb_breaks, order)
        yn_breaks = sorted({max(a / eps, min(0.0, b / eps))
                            for b in list(y_breaks)} | {a / eps, 0.0})
        ryn = gauss_rule(yn_breaks, order)
        gy, gn = np.meshgrid(ryb.points, ryn.points, indexing="ij")
        w = np.outer(ryb.weights, ryn.weights).ravel()
        pts3 = np.column_stack([np.full(w.size, eps * k), gy.ravel(), gn.ravel()])
        total += eps * float(np.dot(w, unfolded(pts3)))
    rhs = eps ** (1 - 2 * l) * total if l else eps * total
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# moment projector onto polynomials of degree m-1
# ---------------------------------------------------------------------------

def _poly_add(*polys: PolynomialField) -> PolynomialField:
    coeffs: dict[tuple[int, ...], float] = {}
    dim = polys[0].dim
    for p in polys:
        for mono, c in p.coeffs.items():
            coeffs[mono] = coeffs.get(mono, 0.0) + c
    return PolynomialField(dim, coeffs)


def _poly_scale(p: PolynomialField, s: float) -> PolynomialField:
    return PolynomialField(p.dim, {mono: s * c for mono, c in p.coeffs.items()})


def _layer_projection(psi: JetField, degree: int, rule: Rule1D) -> PolynomialField:
    """P_i: the degree-i homogeneous polynomial with cell-averaged jets of psi."""
    coeffs: dict[tuple[int, ...], float] = {}
    pts = np.column_stack([rule.points, np.zeros_like(rule.points)])
    for eta in multi_indices(2, degree):
        if hasattr(psi, "derivative_values"):
            avg = float(np.dot(rule.weights, psi.derivative_values(eta, pts)))
        else:
            avg = float(np.dot(rule.weights,
                               [psi(p, degree).entry(eta) for p in pts]))
        if avg != 0.0:
            fact = math.factorial(eta[0]) * math.factorial(eta[1])
            coeffs[eta] = avg / fact
    return PolynomialField(2, coeffs)


def moment_projector_layers(psi: JetField, m: int,
                            rule: Rule1D | None = None) -> list[PolynomialField]:
    """Homogeneous layers Q_(m-1), .., Q_0 of the moment projector.

    Q_j annihilates homogeneous polynomials of every degree other than j up
    to m-1 and reproduces degree-j ones; their sum is the projector.
    """
    if m < 1:
        raise ValueError("projector order must be >= 1")
    rule = rule or gauss_rule(np.linspace(-0.5, 0.5, 5), 12)
    layers: list[PolynomialField] = []
    for j in range(m - 1, -1, -1):
        q = _layer_projection(psi, j, rule)
        for prev in layers:
            q = _poly_add(q, _poly_scale(_layer_projection(prev, j, rule), -1.0))
        layers.append(q)
    return layers


def moment_projection(psi: JetField, m: int,
                      rule: Rule1D | None = None) -> PolynomialField:
    """The polynomial of degree <= m-1 whose top-trace jets have the same
    cell averages as psi's (up to order m-1)."""
    return _poly_add(*moment_projector_layers(psi, m, rule))
