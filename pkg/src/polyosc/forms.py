"""Polyharmonic bilinear form weights, boundary operators, and verifiers.

The m-th order Frobenius contraction of two derivative tensors collapses to a
diagonal multi-index sum with multinomial weights; those weights drive every
stiffness assembly in the package.  The boundary operators produced here are
the trace operators appearing in the half-space integration-by-parts identity
for the m-fold Laplacian, kept in structured form (powers of the tangential
Laplacian, the full Laplacian, and the normal derivative) and expanded into
multi-index sums only at evaluation time.  Residual evaluators check the flat
and strong-boundary-condition Green identities numerically, and qy_evaluate
computes the boundary-layer pairing functional that produces the strange
constant in the critical homogenization regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .combinatorics import DerivativeTable, multi_indices, multiindex_factorial
from .errors import PreconditionError
from .fields import JetField
from .quadrature import QuadratureRule, Rule1D, tensor_rule

__all__ = [
    "FrobeniusWeights",
    "frobenius_weights",
    "BoundaryTerm",
    "BoundaryOperatorSpec",
    "boundary_operator",
    "laplacian_expansion",
    "compose_expansions",
    "apply_expansion",
    "QYTerm",
    "qy_terms",
    "qy_evaluate",
    "green_flat_residual",
    "green_strong_residual",
]


@dataclass(frozen=True)
class FrobeniusWeights:
    """Diagonal weights m!/gamma! over all multi-indices of order m."""

    m: int
    dim: int
    weights: dict[tuple[int, ...], float]

    def items(self):
        return self.weights.items()


def frobenius_weights(m: int, dim: int) -> FrobeniusWeights:
    if m < 1 or dim < 1:
        raise ValueError("order and dimension must be positive")
    fact_m = math.factorial(m)
    weights = {g: fact_m / multiindex_factorial(g) for g in multi_indices(dim, m)}
    return FrobeniusWeights(m, dim, weights)


# ---------------------------------------------------------------------------
# boundary operators of the flat half-space identity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryTerm:
    coefficient: int
    tangential_power: int     # power of the Laplacian in the first N-1 variables
    full_power: int           # power of the full Laplacian
    normal_order: int         # order of the normal derivative factor


@dataclass(frozen=True)
class BoundaryOperatorSpec:
    """The order-t boundary operator pairing with the t-th normal trace."""

    m: int
    t: int
    terms: tuple[BoundaryTerm, ...]

    def expansion(self, dim: int) -> dict[tuple[int, ...], float]:
        """Expand into a multi-index sum over ``dim`` ambient variables."""
        out: dict[tuple[int, ...], float] = {}
        for term in self.terms:
            tang = laplacian_expansion(term.tangential_power, dim, range(dim - 1))
            full = laplacian_expansion(term.full_power, dim, range(dim))
            combined = compose_expansions(tang, full)
            normal = tuple(term.normal_order if i == dim - 1 else 0 for i in range(dim))
            combined = compose_expansions(combined, {normal: 1.0})
            for beta, c in combined.items():
                out[beta] = out.get(beta, 0.0) + term.coefficient * c
        return out

    def apply(self, jet: DerivativeTable) -> float:
        return apply_expansion(self.expansion(jet.dim), jet)

    def to_text(self) -> str:
        """One term per line: coefficient, tangential power, full power, normal order."""
        lines = [f"m={self.m} t={self.t}"]
        for term in self.terms:
            lines.append(f"{term.coefficient} {term.tangential_power} "
                         f"{term.full_power} {term.normal_order}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "BoundaryOperatorSpec":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        head = dict(part.split("=") for part in lines[0].split())
        terms = []
        for ln in lines[1:]:
            c, tp, fp, no = ln.split()
            terms.append(BoundaryTerm(int(c), int(tp), int(fp), int(no)))
        return BoundaryOperatorSpec(int(head["m"]), int(head["t"]), tuple(terms))


def boundary_operator(m: int, t: int) -> BoundaryOperatorSpec:
    """Term list of the operator multiplying the t-th normal trace of the test
    function in the half-space identity; m - t terms with alternating-free sign
    (-1)^(m-t-1) binom(l, t)."""
    if not 0 <= t <= m - 1:
        raise ValueError(f"trace order t must be in 0..{m - 1}, got {t}")
    sign = (-1) ** (m - t - 1)
    terms = []
    for l in range(t, m):
        terms.append(BoundaryTerm(sign * math.comb(l, t), l - t, m - l - 1, t + 1))
    return BoundaryOperatorSpec(m, t, tuple(terms))


def laplacian_expansion(power: int, dim: int,
                        coords: Sequence[int]) -> dict[tuple[int, ...], float]:
    """Multi-index expansion of a Laplacian power over a coordinate subset."""
    coords = tuple(coords)
    if power == 0:
        return {(0,) * dim: 1.0}
    out: dict[tuple[int, ...], float] = {}
    fact_p = math.factorial(power)
    for sigma in multi_indices(len(coords), power):
        beta = [0] * dim
        for c, s in zip(coords, sigma):
            beta[c] = 2 * s
        out[tuple(beta)] = fact_p / multiindex_factorial(sigma)
    return out


def compose_expansions(a: dict[tuple[int, ...], float],
                       b: dict[tuple[int, ...], float]) -> dict[tuple[int, ...], float]:
    out: dict[tuple[int, ...], float] = {}
    for ba, ca in a.items():
        for bb, cb in b.items():
            key = tuple(x + y for x, y in zip(ba, bb))
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def apply_expansion(expansion: dict[tuple[int, ...], float],
                    jet: DerivativeTable) -> float:
    return sum(c * jet.entry(beta) for beta, c in expansion.items())


# ---------------------------------------------------------------------------
# numerical identity verifiers
# ---------------------------------------------------------------------------

def _derivative_values(field, beta: tuple[int, ...], points: np.ndarray) -> np.ndarray:
    """Vectorized derivative samples, with a generic jet-field fallback."""
    if hasattr(field, "derivative_values"):
        return field.derivative_values(beta, points)
    cap = sum(beta)
    return np.array([field(p, cap).entry(beta) for p in points])


def _grid_derivative_values(field, beta: tuple[int, ...],
                            axes_points: Sequence[np.ndarray]) -> np.ndarray:
    """Raveled derivative samples on a tensor grid, using the fast grid path
    when the field provides one."""
    if hasattr(field, "grid_derivative_values"):
        return field.grid_derivative_values(beta, axes_points).ravel()
    grids = np.meshgrid(*axes_points, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return _derivative_values(field, beta, pts)


def _face_axes(axes: Sequence[Rule1D], d: int, coord: float) -> list[np.ndarray]:
    pts = [ax.points for ax in axes]
    pts[d] = np.array([coord])
    return pts


def _check_face_jets(field, box, axes, order_cap, skip_top: bool,
                     tol: float, label: str) -> None:
    dim = len(box)
    for d in range(dim):
        for side, coord in enumerate(box[d]):
            if skip_top and d == dim - 1 and side == 1:
                continue
            face_pts = _face_axes(axes, d, coord)
            for order in range(order_cap + 1):
                for beta in multi_indices(dim, order):
                    vals = _grid_derivative_values(field, beta, face_pts)
                    worst = float(np.max(np.abs(vals))) if len(vals) else 0.0
                    if worst > tol:
                        raise PreconditionError(
                            f"{label} jets of order {order} do not vanish on the "
                            f"face x_{d}={coord} (max {worst:.2e})")


def green_flat_residual(m: int, f: JetField, phi: JetField,
                        box: Sequence[tuple[float, float]],
                        axes: Sequence[Rule1D],
                        support_tol: float = 1e-9) -> float:
    """Absolute residual of the half-space integration-by-parts identity.

    The box must have its top face at x_N = 0; the test field phi has to
    vanish with all derivatives up to order m on every other face, which
    stands in for compact support in the closed half-space.
    """
    dim = len(box)
    if abs(box[-1][1]) > 0.0:
        raise ValueError("top face must sit at x_N = 0")
    _check_face_jets(phi, box, axes, m, skip_top=True, tol=support_tol, label="test field")

    vol_axes = [ax.points for ax in axes]
    volume = tensor_rule(axes)
    wts = volume.weights

    weights = frobenius_weights(m, dim)
    lhs = 0.0
    for gamma, w in weights.items():
        lhs += w * float(np.dot(wts, _grid_derivative_values(f, gamma, vol_axes)
                                * _grid_derivative_values(phi, gamma, vol_axes)))

    phi_vals = _grid_derivative_values(phi, (0,) * dim, vol_axes)
    poly_lap = laplacian_expansion(m, dim, range(dim))
    lap_m_f = np.zeros(len(wts))
    for beta, c in poly_lap.items():
        lap_m_f += c * _grid_derivative_values(f, beta, vol_axes)
    rhs = (-1) ** m * float(np.dot(wts, lap_m_f * phi_vals))

    face = tensor_rule(axes[:-1])
    face_axes = _face_axes(axes, dim - 1, 0.0)
    for t in range(m):
        op = boundary_operator(m, t).expansion(dim)
        bt_vals = np.zeros(face.weights.size)
        for beta, c in op.items():
            bt_vals += c * _grid_derivative_values(f, beta, face_axes)
        normal_t = tuple(t if i == dim - 1 else 0 for i in range(dim))
        rhs += float(np.dot(face.weights,
                            bt_vals * _grid_derivative_values(phi, normal_t,
                                                              face_axes)))
    return abs(lhs - rhs)


def green_strong_residual(m: int, f: JetField, phi: JetField,
                          box: Sequence[tuple[float, float]],
                          axes: Sequence[Rule1D],
                          jet_tol: float = 1e-9) -> float:
    """Residual of the rectangle identity with a single normal-trace boundary term.

    Both fields must vanish with derivatives up to order m-2 on the whole
    boundary; the surviving boundary pairing is the m-th normal derivative of
    f against the (m-1)-st normal derivative of phi.
    """
    dim = len(box)
    _check_face_jets(f, box, axes, m - 2, skip_top=False, tol=jet_tol, label="f")
    _check_face_jets(phi, box, axes, m - 2, skip_top=False, tol=jet_tol, label="phi")

    vol_axes = [ax.points for ax in axes]
    wts = tensor_rule(axes).weights

    weights = frobenius_weights(m, dim)
    lhs = 0.0
    for gamma, w in weights.items():
        lhs += w * float(np.dot(wts, _grid_derivative_values(f, gamma, vol_axes)
                                * _grid_derivative_values(phi, gamma, vol_axes)))

    phi_vals = _grid_derivative_values(phi, (0,) * dim, vol_axes)
    poly_lap = laplacian_expansion(m, dim, range(dim))
    lap_m_f = np.zeros(len(wts))
    for beta, c in poly_lap.items():
        lap_m_f += c * _grid_derivative_values(f, beta, vol_axes)
    rhs = (-1) ** m * float(np.dot(wts, lap_m_f * phi_vals))

    for d in range(dim):
        face = tensor_rule([axes[i] for i in range(dim) if i != d])
        dm = tuple(m if i == d else 0 for i in range(dim))
        dm1 = tuple(m - 1 if i == d else 0 for i in range(dim))
        for side, coord in enumerate(box[d]):
            face_axes = _face_axes(axes, d, coord)
            orient = 1.0 if side == 1 else -1.0
            rhs += orient * float(np.dot(
                face.weights,
                _grid_derivative_values(f, dm, face_axes)
                * _grid_derivative_values(phi, dm1, face_axes)))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# the boundary-layer pairing functional
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QYTerm:
    l: int
    binom: int
    weight_power: int      # power of y_N in the weight
    weight_scale: float    # 1/(l-1)!


def qy_terms(m: int) -> list[QYTerm]:
    if m < 2:
        raise ValueError("the pairing functional needs order m >= 2")
    return [QYTerm(l, math.comb(m, l + 1), l - 1, 1.0 / math.factorial(l - 1))
            for l in range(1, m)]


def qy_evaluate(m: int, f: JetField, g: JetField, rule: QuadratureRule) -> float:
    """Weighted pairing of boundary-layer jets over the reference cell strip.

    Computes sum_l binom(m, l+1) * int y_N^(l-1)/(l-1)! times the Frobenius
    contraction of the (l+1)-jets of the (m-l-1)-st vertical derivative of f
    against the (l+1)-jets of g.  Jets of order up to m are required on both
    arguments; g is typically the profile-times-cutoff field
    b(ybar) (1+y_N)^(m+1).
    """
    dim = rule.dim
    total = 0.0
    for p, w in zip(rule.points, rule.weights):
        f_jet = f(p, m)
        g_jet = g(p, m)
        y_n = p[-1]
        point_sum = 0.0
        for term in qy_terms(m):
            down = m - term.l - 1
            weight = term.binom * term.weight_scale * y_n ** term.weight_power
            contraction = 0.0
            fw = frobenius_weights(term.l + 1, dim)
            for gamma, wg in fw.items():
                shifted = tuple(g_i + (down if i == dim - 1 else 0)
                                for i, g_i in enumerate(gamma))
                contraction += wg * f_jet.entry(shifted) * g_jet.entry(gamma)
            point_sum += weight * contraction
        total += w * point_sum
    return total
