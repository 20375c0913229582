"""Named verification suites: derivative formulas, boundary identities,
cell constant, unfolding, collar rates, classifier, eigenvalue sanity.

Each suite returns machine-readable results with the measured residual and
the tolerance it was held to, so the command-line ``checks`` driver and the
test-suite share one implementation.  Tolerances are fixed here, not
configurable: they are the package's acceptance thresholds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import assembly, cell, forms, geometry, unfolding
from .combinatorics import (DerivativeTable, faa_di_bruno_compose,
                            finite_difference_jet, leibniz_product,
                            multi_indices_up_to)
from .fields import PolynomialField
from .geometry import CollarMap, OscillatingProfile, Regime, TrigPolynomial
from .quadrature import gauss_rule
from .splines import (ConstrainedSpace, ConstraintSet, SplineFunction,
                      TensorSplineSpace, build_constrained_space)

__all__ = ["CheckResult", "run_checks", "SUITES"]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    value: float
    tolerance: float

    def line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (f"[{status}] {self.suite}:{self.name}  "
                f"value={self.value:.3e}  tol={self.tolerance:.1e}")


def _result(suite: str, name: str, value: float, tol: float,
            larger_ok: bool = False) -> CheckResult:
    ok = value >= tol if larger_ok else value <= tol
    return CheckResult(suite, name, bool(ok), float(value), float(tol))


# ---------------------------------------------------------------------------
# test-data builders
# ---------------------------------------------------------------------------

def _poly1d_mul(*factors: Sequence[float]) -> list[float]:
    out = [1.0]
    for fac in factors:
        new = [0.0] * (len(out) + len(fac) - 1)
        for i, a in enumerate(out):
            for j, c in enumerate(fac):
                new[i + j] += a * c
        out = new
    return out


def _shifted_power(root: float, sign: float, power: int) -> list[float]:
    """Coefficients of (sign*x - sign*root)^power ... i.e. (x-root)^power up to sign."""
    base = [-sign * root, sign]
    out = [1.0]
    for _ in range(power):
        out = _poly1d_mul(out, base)
    return out


def _tensor_poly(dims_coeffs: Sequence[Sequence[float]]) -> PolynomialField:
    coeffs: dict[tuple[int, ...], float] = {}
    for mono in itertools.product(*[range(len(c)) for c in dims_coeffs]):
        v = 1.0
        for d, e in enumerate(mono):
            v *= dims_coeffs[d][e]
        if v != 0.0:
            coeffs[tuple(mono)] = coeffs.get(tuple(mono), 0.0) + v
    return PolynomialField(len(dims_coeffs), coeffs)


def _poly_multiply(p: PolynomialField, q: PolynomialField) -> PolynomialField:
    coeffs: dict[tuple[int, ...], float] = {}
    for ma, ca in p.coeffs.items():
        for mb, cb in q.coeffs.items():
            key = tuple(a + b for a, b in zip(ma, mb))
            coeffs[key] = coeffs.get(key, 0.0) + ca * cb
    return PolynomialField(p.dim, coeffs)


class _TrigField:
    """Random trigonometric field with exact jets, for oracle comparisons."""

    def __init__(self, dim: int, rng: np.random.Generator, n_waves: int = 3):
        # frequencies kept below one so the step-1e-2 Richardson oracle stays
        # well inside the 1e-6 comparison tolerance at order 4
        self.dim = dim
        self.amps = rng.uniform(-0.7, 0.7, n_waves)
        self.freqs = rng.uniform(0.3, 0.8, (n_waves, dim))
        self.phases = rng.uniform(0.0, 2 * math.pi, n_waves)

    def value(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        return float(sum(a * math.sin(f @ x + p)
                         for a, f, p in zip(self.amps, self.freqs, self.phases)))

    def __call__(self, point: Sequence[float], cap: int) -> DerivativeTable:
        x = np.asarray(point, dtype=float)

        def entry(beta: tuple[int, ...]) -> float:
            total = 0.0
            order = sum(beta)
            for a, f, p in zip(self.amps, self.freqs, self.phases):
                scale = a * float(np.prod(f ** np.asarray(beta)))
                total += scale * math.sin(f @ x + p + order * math.pi / 2)
            return total

        return DerivativeTable(self.dim, cap, {b: entry(b) for b in
                                               multi_indices_up_to(self.dim, cap)})


def _spline_bump(dim: int, m: int, rng: np.random.Generator,
                 box: Sequence[tuple[float, float]],
                 open_top: bool) -> SplineFunction:
    """Random spline vanishing with jets up to order m on the box faces,
    except (optionally) the top face of the last direction."""
    degree = m + 1
    layers = []
    for d in range(dim):
        hi = 0 if (open_top and d == dim - 1) else m + 1
        layers.append((m + 1, hi))
    space = TensorSplineSpace.uniform(box, degree, [m + 3] * dim)
    cspace = ConstrainedSpace(space, ConstraintSet(tuple(layers)))
    free = rng.uniform(-1.0, 1.0, cspace.n_free)
    return SplineFunction(space, cspace.inflate(free))


# ---------------------------------------------------------------------------
# suite: derivative formulas vs finite differences
# ---------------------------------------------------------------------------

def check_derivative_formulas(n_samples: int = 200, seed: int = 7) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []

    worst_rel = 0.0
    for _ in range(n_samples // 2):
        dim = int(rng.integers(1, 3))
        n = int(rng.integers(1, 5))
        tup = tuple(int(i) for i in rng.integers(0, dim, n))
        point = tuple(rng.uniform(-0.8, 0.8, dim))
        u, v = _TrigField(dim, rng), _TrigField(dim, rng)
        exact = leibniz_product(tup, u(point, n), v(point, n))
        approx = finite_difference_jet(lambda x: u.value(x) * v.value(x),
                                       point, n).directional(tup)
        worst_rel = max(worst_rel, abs(exact - approx) / max(1.0, abs(exact)))
    out.append(_result("faa", "leibniz-vs-fd", worst_rel, 1e-6))

    worst_rel = 0.0
    for _ in range(n_samples - n_samples // 2):
        dim = int(rng.integers(1, 3))
        r = int(rng.integers(1, 3))
        n = int(rng.integers(1, 5))
        tup = tuple(int(i) for i in rng.integers(0, dim, n))
        point = tuple(rng.uniform(-0.8, 0.8, dim))
        outer = _TrigField(r, rng)
        inners = [_TrigField(dim, rng) for _ in range(r)]
        mapped = tuple(f.value(point) for f in inners)
        exact = faa_di_bruno_compose(tup, outer(mapped, n),
                                     [f(point, n) for f in inners])
        approx = finite_difference_jet(
            lambda x: outer.value([f.value(x) for f in inners]),
            point, n).directional(tup)
        worst_rel = max(worst_rel, abs(exact - approx) / max(1.0, abs(exact)))
    out.append(_result("faa", "compose-vs-fd", worst_rel, 1e-6))

    # exactness on polynomial inputs: outer t^d against symbolic powers
    worst = 0.0
    for _ in range(40):
        dim = 2
        inner = PolynomialField.random(dim, 2, rng)
        d = int(rng.integers(1, 4))
        composed = PolynomialField(dim, {(0,) * dim: 1.0})
        for _ in range(d):
            composed = _poly_multiply(composed, inner)
        n = int(rng.integers(1, 5))
        tup = tuple(int(i) for i in rng.integers(0, dim, n))
        point = tuple(rng.uniform(-1.0, 1.0, dim))
        t0 = inner.value(point)
        outer_jet = DerivativeTable(1, n, {
            (j,): (math.perm(d, j) * t0 ** (d - j) if j <= d else 0.0)
            for j in range(n + 1)})
        got = faa_di_bruno_compose(tup, outer_jet, [inner.jet(point, n)])
        want = composed.jet(point, n).directional(tup)
        worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    out.append(_result("faa", "polynomial-exactness", worst, 1e-12))

    # identity inner map reproduces outer jets; unit factor in the product rule
    field = _TrigField(2, rng)
    point = (0.3, -0.2)
    jets = field(point, 3)
    ident = [DerivativeTable(2, 3, {b: (point[i] if sum(b) == 0 else
                                        (1.0 if b == ((1, 0) if i == 0 else (0, 1))
                                         else 0.0))
                                    for b in multi_indices_up_to(2, 3)})
             for i in range(2)]
    one = DerivativeTable(2, 3, {b: (1.0 if sum(b) == 0 else 0.0)
                                 for b in multi_indices_up_to(2, 3)})
    worst = 0.0
    for tup in [(), (0,), (1, 0), (0, 1, 1)]:
        worst = max(worst, abs(faa_di_bruno_compose(tup, jets, ident)
                               - jets.directional(tup)))
        worst = max(worst, abs(leibniz_product(tup, jets, one)
                               - jets.directional(tup)))
    out.append(_result("faa", "identity-reductions", worst, 1e-13))
    return out


# ---------------------------------------------------------------------------
# suite: polyharmonic boundary identities
# ---------------------------------------------------------------------------

def check_green_formulas(seed: int = 11) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []

    b1 = forms.boundary_operator(2, 1)
    ok1 = b1.terms == (forms.BoundaryTerm(1, 0, 0, 2),)
    b0 = forms.boundary_operator(2, 0)
    ok0 = b0.terms == (forms.BoundaryTerm(-1, 0, 1, 1), forms.BoundaryTerm(-1, 1, 0, 1))
    out.append(_result("green", "order2-operators-term-for-term",
                       0.0 if (ok1 and ok0) else 1.0, 0.5))
    top_only = all(forms.boundary_operator(m, m - 1).terms
                   == (forms.BoundaryTerm(1, 0, 0, m),) for m in range(2, 6))
    out.append(_result("green", "top-trace-operator-single-term",
                       0.0 if top_only else 1.0, 0.5))

    for m, dim in [(2, 2), (3, 2), (2, 3), (3, 3)]:
        box = [(-1.0, 1.0)] * (dim - 1) + [(-1.0, 0.0)]
        f = PolynomialField.random(dim, 2 * m - 1, rng)
        phi = _spline_bump(dim, m, rng, box, open_top=True)
        order = (2 * m - 1 + m + 2) // 2 + 2
        axes = [gauss_rule(basis.breaks, order) for basis in phi.space.bases]
        res = forms.green_flat_residual(m, f, phi, box, axes)
        out.append(_result("green", f"flat-identity-m{m}-N{dim}", res, 1e-10))

    for m, dim in [(2, 2), (3, 2), (2, 3), (3, 3)]:
        box = [(0.0, 1.0)] * dim
        fac_f = _poly1d_mul(_shifted_power(0.0, 1.0, m - 1),
                            _shifted_power(1.0, -1.0, m - 1),
                            [rng.uniform(0.5, 1.0), rng.uniform(-0.5, 0.5), 0.7])
        fac_p = _poly1d_mul(_shifted_power(0.0, 1.0, m - 1),
                            _shifted_power(1.0, -1.0, m - 1),
                            [rng.uniform(0.5, 1.0), 0.3])
        f = _tensor_poly([fac_f] * dim)
        phi = _tensor_poly([fac_p] * dim)
        axes = [gauss_rule((0.0, 1.0), 2 * m + 5) for _ in range(dim)]
        res = forms.green_strong_residual(m, f, phi, box, axes)
        out.append(_result("green", f"strong-identity-m{m}-N{dim}", res, 1e-10))
    return out


# ---------------------------------------------------------------------------
# suite: strange constant
# ---------------------------------------------------------------------------

def check_cell_constant() -> list[CheckResult]:
    out = []
    b = TrigPolynomial.parse("2+cos")
    for m in (2, 3):
        sol = cell.strange_constant(cell.CellConfig(m, b))
        rep = cell.verify_identities(sol)
        out.append(_result("cell", f"m{m}-pairing-identity", rep.pairing_residual, 1e-8))
        out.append(_result("cell", f"m{m}-trace-identity", rep.trace_residual, 1e-8))
        out.append(_result("cell", f"m{m}-positive", sol.K, 1e-12, larger_ok=True))
        oracle = cell.truncated_energy_oracle(cell.CellConfig(m, b), depth=-6.0)
        out.append(_result("cell", f"m{m}-truncated-oracle",
                           abs(oracle - sol.K) / sol.K, 1e-2))
        gauged = cell.verify_identities(sol.with_gauge(1.0))
        out.append(_result("cell", f"m{m}-gauge-invariance",
                           abs(gauged.pairing_value - rep.pairing_value), 1e-10))
    const = cell.strange_constant(cell.CellConfig(2, TrigPolynomial(((0, 2.0, 0.0),))))
    out.append(_result("cell", "constant-datum-zero", abs(const.K), 0.0))
    doubled = cell.strange_constant(cell.CellConfig(
        2, TrigPolynomial(((0, 4.0, 0.0), (1, 2.0, 0.0)))))
    base = cell.strange_constant(cell.CellConfig(2, b))
    out.append(_result("cell", "quadratic-scaling",
                       abs(doubled.K / base.K - 4.0), 1e-12))
    return out


# ---------------------------------------------------------------------------
# suite: unfolding
# ---------------------------------------------------------------------------

def check_unfolding(m: int = 2, seed: int = 23) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for eps in (0.25, 0.125):
        n_el = int(round(2 / eps))
        space = TensorSplineSpace.uniform([(0.0, 1.0), (-1.0, 0.0)], m + 1,
                                          [n_el, 4])
        u = SplineFunction(space, rng.uniform(-1.0, 1.0, space.dimension))
        grid = unfolding.UnfoldGrid(eps)
        xb = np.linspace(0.0, 1.0, n_el + 1)
        yb = np.linspace(-1.0, 0.0, 5)
        res0 = unfolding.integration_identity_residual(u, grid, -1.0, (),
                                                       xb, yb, order=m + 3)
        out.append(_result("unfold", f"identity-l0-eps{eps}", res0, 1e-10))
        tup = tuple(int(i) for i in rng.integers(0, 2, m))
        resm = unfolding.integration_identity_residual(u, grid, -1.0, tup,
                                                       xb, yb, order=m + 4)
        out.append(_result("unfold", f"identity-lm-eps{eps}", resm, 1e-10))

    poly = PolynomialField(2, {(0, 0): 0.4, (1, 0): -0.7, (0, 1): 1.1})
    proj = unfolding.moment_projection(poly, m)
    err = max(abs(proj.coeffs.get(k, 0.0) - poly.coeffs.get(k, 0.0))
              for k in set(proj.coeffs) | set(poly.coeffs))
    out.append(_result("unfold", "projector-reproduces-polys", err, 1e-12))
    twice = unfolding.moment_projection(proj, m)
    err2 = max(abs(twice.coeffs.get(k, 0.0) - proj.coeffs.get(k, 0.0))
               for k in set(twice.coeffs) | set(proj.coeffs))
    out.append(_result("unfold", "projector-idempotent", err2, 1e-12))

    trig = _TrigField(2, rng)
    projected = unfolding.moment_projection(trig, m)
    rule = gauss_rule(np.linspace(-0.5, 0.5, 5), 12)
    worst = 0.0
    pts = np.column_stack([rule.points, np.zeros_like(rule.points)])
    for beta in multi_indices_up_to(2, m - 1):
        avg_psi = float(np.dot(rule.weights,
                               [trig(p, m - 1).entry(beta) for p in pts]))
        avg_proj = float(np.dot(rule.weights,
                                projected.derivative_values(beta, pts)))
        worst = max(worst, abs(avg_psi - avg_proj))
    out.append(_result("unfold", "projector-moment-matching", worst, 1e-12))
    return out


# ---------------------------------------------------------------------------
# suite: collar-map decay rates
# ---------------------------------------------------------------------------

def check_collar_rates(m: int = 2) -> list[CheckResult]:
    out = []
    b = TrigPolynomial.parse("2+cos")
    fit_eps = [1 / 64, 1 / 128, 1 / 256]
    for alpha in (1.0, 2.0):
        for order in range(m + 1):
            sups = [CollarMap(OscillatingProfile(alpha, e, b), m)
                    .sup_derivative_sample(order, n=24) for e in fit_eps]
            slope = float(np.polyfit(np.log(fit_eps), np.log(sups), 1)[0])
            out.append(_result("heps", f"rate-alpha{alpha}-l{order}",
                               abs(slope - (alpha - order)), 0.1))
    bound_eps = [1 / 4, 1 / 8, 1 / 16, 1 / 64, 1 / 256]
    for alpha in (1.0, 2.0):
        for order in range(m + 1):
            ratios = [CollarMap(OscillatingProfile(alpha, e, b), m)
                      .sup_derivative_sample(order, n=16) / e ** (alpha - order)
                      for e in bound_eps]
            out.append(_result("heps", f"bounded-ratio-alpha{alpha}-l{order}",
                               max(ratios) / min(ratios), 4.0))
    return out


# ---------------------------------------------------------------------------
# suite: stability classifier and criterion quotients
# ---------------------------------------------------------------------------

def _feasible_theta(m: int, k: int, alpha: float) -> float:
    upper = 1.0 / (m - k + 0.5)
    lower = max(0.0, (m - alpha) / (alpha * (k - 0.5)))
    return 0.5 * (lower + upper)


def check_classifier() -> list[CheckResult]:
    out = []
    bad = 0
    for m in range(2, 6):
        for k in range(1, m):
            thr = m - k + 0.5
            for alpha, want in [(thr + 0.25, Regime.STABLE),
                                (thr + 0.03, Regime.STABLE),
                                (thr, Regime.CRITICAL if k == m - 1
                                 else Regime.INAPPLICABLE),
                                (thr - 0.03, Regime.DEGENERATE if k == m - 1
                                 else Regime.INAPPLICABLE),
                                (thr - 0.25, Regime.DEGENERATE if k == m - 1
                                 else Regime.INAPPLICABLE)]:
                got = geometry.classify_stability(m, k, alpha).regime
                bad += got is not want
    out.append(_result("classify", "threshold-table-m2..5", float(bad), 0.5))

    same = all(geometry.classify_stability(m, m - 1, 1.5).regime is Regime.CRITICAL
               and geometry.classify_stability(m, m - 1, 1.51).regime is Regime.STABLE
               and geometry.classify_stability(m, m - 1, 1.49).regime is Regime.DEGENERATE
               for m in range(2, 6))
    out.append(_result("classify", "strong-case-threshold-is-3/2",
                       0.0 if same else 1.0, 0.5))

    b = TrigPolynomial.parse("2+cos")
    eps_list = [1 / 4, 1 / 8, 1 / 16, 1 / 32]
    bn = b.sup_derivative(0)
    failures = 0
    for m in range(2, 6):
        for k in range(1, m):
            thr = m - k + 0.5
            alpha = thr + 0.25
            theta = _feasible_theta(m, k, alpha)
            fam = [OscillatingProfile(alpha, e, b) for e in eps_list]
            kap = [e ** (alpha * theta) * bn for e in eps_list]
            rep = geometry.criterion_rates(fam, kap, m, k)
            failures += not rep.satisfied
            alpha_low = thr - 0.25
            fam_low = [OscillatingProfile(alpha_low, e, b) for e in eps_list]
            for theta_low in (0.2, 0.5, 0.8):
                kap_low = [e ** (alpha_low * theta_low) * bn for e in eps_list]
                rep_low = geometry.criterion_rates(fam_low, kap_low, m, k)
                failures += rep_low.satisfied
    out.append(_result("classify", "criterion-quotients-straddle-threshold",
                       float(failures), 0.5))
    return out


# ---------------------------------------------------------------------------
# suite: eigenvalue sanity and variant ordering
# ---------------------------------------------------------------------------

def check_eigen_sanity() -> list[CheckResult]:
    out = []
    v1 = assembly.ProblemVariant("dirichlet_full", 1)
    cs1 = build_constrained_space([(0, 1), (0, 1)], 3, [16, 16],
                                  assembly.variant_constraints(v1))
    p1 = assembly.assemble_pencil(v1, cs1, None, 4)
    lam1 = assembly.solve_generalized_eigen(p1, 1).eigenvalues[0]
    out.append(_result("eigen", "laplace-dirichlet-1+2pi^2",
                       abs(lam1 - 1.0 - 2.0 * math.pi ** 2), 1e-4))

    v2 = assembly.ProblemVariant("sibc", 2)
    cs2 = build_constrained_space([(0, 1), (-1, 0)], 3, [16, 16],
                                  assembly.variant_constraints(v2))
    p2 = assembly.assemble_pencil(v2, cs2, None, 5)
    lam2 = assembly.solve_generalized_eigen(p2, 1).eigenvalues[0]
    out.append(_result("eigen", "hinged-square-1+4pi^4",
                       abs(lam2 - 1.0 - 4.0 * math.pi ** 4) / (1 + 4 * math.pi ** 4),
                       1e-4))

    b = TrigPolynomial.parse("2+cos")
    K = cell.strange_constant(cell.CellConfig(2, b)).K
    lams = {}
    for tag, kk in (("sibc", None), ("critical", K), ("dirichlet_w", None)):
        v = assembly.ProblemVariant(tag, 2, K=kk)
        cs = build_constrained_space([(0, 1), (-1, 0)], 3, [16, 16],
                                     assembly.variant_constraints(v))
        p = assembly.assemble_pencil(v, cs, None, 5)
        lams[tag] = assembly.solve_generalized_eigen(p, 5).eigenvalues
    order_ok = np.all(lams["sibc"] <= lams["critical"] + 1e-9) and \
        np.all(lams["critical"] <= lams["dirichlet_w"] + 1e-9)
    gap1 = min(lams["critical"][0] - lams["sibc"][0],
               lams["dirichlet_w"][0] - lams["critical"][0])
    out.append(_result("eigen", "variant-ordering-n1..5",
                       0.0 if order_ok else 1.0, 0.5))
    out.append(_result("eigen", "variant-strict-first-gap", gap1, 1e-8,
                       larger_ok=True))
    out.append(_result("eigen", "all-eigenvalues-above-one",
                       float(min(lams["sibc"][0], lams["critical"][0],
                                 lams["dirichlet_w"][0])), 1.0, larger_ok=True))
    return out


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "faa": check_derivative_formulas,
    "green": check_green_formulas,
    "cell": check_cell_constant,
    "unfold": check_unfolding,
    "heps": check_collar_rates,
    "classify": check_classifier,
    "eigen": check_eigen_sanity,
}


def run_checks(selector: str = "all") -> list[CheckResult]:
    """Execute one named suite, or every suite for the 'all' selector."""
    if selector == "all":
        results = []
        for fn in SUITES.values():
            results.extend(fn())
        return results
    if selector not in SUITES:
        raise KeyError(f"unknown check suite {selector!r}; "
                       f"known: {', '.join(sorted(SUITES))}, all")
    return SUITES[selector]()
