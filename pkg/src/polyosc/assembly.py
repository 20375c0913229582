"""Assembly of polyharmonic stiffness/mass pencils and symmetric eigensolves.

Stiffness entries integrate the diagonal multinomial-weighted contraction of
m-th derivatives plus the L2 product; on oscillating graph domains the
integration runs over the reference rectangle through the vertical map, with
physical derivatives of the mapped basis obtained from inverse-map jets and
the partition-sum composition rule at every quadrature point.  The critical
limit problem adds a rank-structured boundary matrix weighted by the strange
constant.  Solvers are dense and deterministic: Cholesky-reduced symmetric
eigendecomposition and direct Cholesky for source problems.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .combinatorics import (DerivativeTable, compose_coefficients,
                            multi_indices_up_to, table_compose_scalar,
                            table_product)
from .errors import AssemblyError, ConfigurationError, GeometryError, SolverError
from .forms import frobenius_weights
from .geometry import OscillatingProfile, VerticalMap, _reciprocal_jet
from .splines import ConstrainedSpace, ConstraintSet, TensorSplineSpace

__all__ = [
    "ProblemVariant",
    "SymmetricPencil",
    "EigenSolution",
    "variant_constraints",
    "assemble_full",
    "assemble_pencil",
    "assemble_strange_matrix",
    "solve_generalized_eigen",
    "solve_poisson",
    "spectrum_csv",
]


@dataclass(frozen=True)
class ProblemVariant:
    """Which limit/perturbed problem to assemble.

    tags: 'sibc' (essential jets to order m-2 on all edges), 'dirichlet_w'
    (additionally the full Dirichlet jet on the top edge), 'critical' (sibc
    plus the strange boundary term with constant K), 'dirichlet_full'
    (Dirichlet jets on all edges; used for low-order sanity problems).
    A non-None profile selects assembly on the mapped graph domain.
    """

    tag: str
    m: int
    profile: OscillatingProfile | None = None
    K: float | None = None

    def __post_init__(self):
        if self.tag not in ("sibc", "dirichlet_w", "critical", "dirichlet_full"):
            raise ConfigurationError(f"unknown variant tag {self.tag!r}")
        if self.tag == "critical":
            if self.K is None or self.K < 0:
                raise ConfigurationError("critical variant needs K >= 0")
        if self.tag != "sibc" and self.profile is not None:
            raise ConfigurationError("mapped assembly is defined for the sibc tag")


def variant_constraints(variant: ProblemVariant) -> ConstraintSet:
    m = variant.m
    if variant.tag == "dirichlet_full":
        return ConstraintSet.uniform(2, m)
    if variant.tag == "dirichlet_w":
        return ConstraintSet.rectangle(left=m - 1, right=m - 1,
                                       bottom=m - 1, top=m)
    return ConstraintSet.uniform(2, m - 1)


@dataclass(frozen=True)
class SymmetricPencil:
    """Full-form matrix A (stiffness + mass [+ boundary term]) and mass B.

    ``space`` and ``variant`` carry the discretization provenance; synthetic
    pencils (for solver tests) may omit them, losing only the source-problem
    path.
    """

    a: np.ndarray
    b: np.ndarray
    space: ConstrainedSpace | None = None
    variant: ProblemVariant | None = None

    def __post_init__(self):
        for name, mat in (("A", self.a), ("B", self.b)):
            asym = np.max(np.abs(mat - mat.T))
            scale = max(1.0, np.max(np.abs(mat)))
            if asym > 1e-10 * scale:
                raise AssemblyError(f"{name} asymmetric beyond guard: {asym:.2e}")
        try:
            scipy.linalg.cholesky(self.b, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise AssemblyError("mass matrix is not positive definite") from exc

    @property
    def dimension(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class EigenSolution:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray   # columns, B-orthonormal
    residuals: np.ndarray

    def to_csv(self) -> str:
        lines = ["n,lambda,residual"]
        for i, (lam, res) in enumerate(zip(self.eigenvalues, self.residuals), 1):
            lines.append(f"{i},{lam:.12e},{res:.3e}")
        return "\n".join(lines) + "\n"


def spectrum_csv(solution: EigenSolution) -> str:
    return solution.to_csv()


# ---------------------------------------------------------------------------
# element-loop assembly
# ---------------------------------------------------------------------------

def _axis_tables(basis, quad_order: int, max_order: int):
    """Per-element Gauss nodes with cached basis derivative blocks."""
    nodes, wts = np.polynomial.legendre.leggauss(quad_order)
    out = []
    breaks = basis.breaks
    for a, b in zip(breaks[:-1], breaks[1:]):
        half = 0.5 * (b - a)
        xs = 0.5 * (a + b) + half * nodes
        entries = []
        for x, w in zip(xs, half * wts):
            idx, ders = basis.eval_all(float(x), max_order)
            entries.append((float(x), float(w), idx, ders))
        out.append(entries)
    return out


_FIXED_XCOMP: dict[int, DerivativeTable] = {}


def _xcomponent_table(order_cap: int) -> DerivativeTable:
    """Jets of the identity first component; only derivative entries matter."""
    tab = _FIXED_XCOMP.get(order_cap)
    if tab is None:
        entries = {b: 0.0 for b in multi_indices_up_to(2, order_cap)}
        entries[(1, 0)] = 1.0
        tab = DerivativeTable(2, order_cap, entries)
        _FIXED_XCOMP[order_cap] = tab
    return tab


def _index_tuple(beta: tuple[int, int]) -> tuple[int, ...]:
    return (0,) * beta[0] + (1,) * beta[1]


class _MappedJets:
    """Per-column cache of inverse-map jets for one horizontal quadrature node."""

    def __init__(self, vmap: VerticalMap, x: float, m: int):
        self.m = m
        profile = vmap.profile
        cap = m
        g = [0.0] * (cap + 1)
        if profile is not None:
            for j in range(cap + 1):
                g[j] = float(profile.derivative_values(j, x))
        if 1.0 + g[0] <= 0.0:
            raise GeometryError("vertical map degenerates: 1 + g <= 0")
        self.g = g
        entries = {}
        for beta in multi_indices_up_to(2, cap):
            entries[beta] = g[beta[0]] if beta[1] == 0 else 0.0
        gtab = DerivativeTable(2, cap, entries)
        one_plus = DerivativeTable(2, cap, {
            b: (1.0 + g[0] if b == (0, 0) else gtab.entry(b))
            for b in multi_indices_up_to(2, cap)})
        self.rtab = table_compose_scalar(_reciprocal_jet(1.0 + g[0], cap), one_plus)
        self.grtab = table_product(gtab, self.rtab)

    def inverse_table(self, x_n: float) -> DerivativeTable:
        cap = self.m
        entries = {}
        for beta in multi_indices_up_to(2, cap):
            jx, jn = beta
            if jn == 0:
                entries[beta] = x_n * self.rtab.entry((jx, 0)) - self.grtab.entry((jx, 0))
            elif jn == 1:
                entries[beta] = self.rtab.entry((jx, 0))
            else:
                entries[beta] = 0.0
        return DerivativeTable(2, cap, entries)


def assemble_full(space: TensorSplineSpace, m: int, vmap: VerticalMap | None,
                  quad_order: int, with_mass: bool = True
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Full-basis stiffness (D^m contraction) and mass matrices.

    With a vertical map the quadrature runs over the reference rectangle and
    each basis function's physical derivatives are recovered from inverse-map
    jets through the composition coefficients, then weighted by the map's
    vertical stretch.  Without a map this reduces to reference assembly.
    """
    if space.dim != 2:
        raise ConfigurationError("pencil assembly is implemented for 2D spaces")
    ntot = space.dimension
    ny = space.shape[1]
    stiff = np.zeros((ntot, ntot))
    mass = np.zeros((ntot, ntot))
    weights = frobenius_weights(m, 2)
    gammas = list(weights.weights.keys())
    wgam = np.array([weights.weights[g] for g in gammas])
    betas = [b for b in multi_indices_up_to(2, m) if sum(b) >= 1]

    ax_x = _axis_tables(space.bases[0], quad_order, m)
    ax_y = _axis_tables(space.bases[1], quad_order, m)
    identity = vmap is None or vmap.profile is None

    for ex_entries in ax_x:
        col_cache: dict[float, _MappedJets] = {}
        for x, wx, idxx, dersx in ex_entries:
            if not identity and x not in col_cache:
                col_cache[x] = _MappedJets(vmap, x, m)
            for ey_entries in ax_y:
                for t, wy, idxy, dersy in ey_entries:
                    w = wx * wy
                    gflat = (idxx[:, None] * ny + idxy[None, :]).ravel()
                    vals = np.outer(dersx[0], dersy[0]).ravel()
                    if identity:
                        jac = 1.0
                        dmat = np.empty((len(gflat), len(gammas)))
                        for c, gam in enumerate(gammas):
                            dmat[:, c] = np.outer(dersx[gam[0]], dersy[gam[1]]).ravel()
                    else:
                        jets = col_cache[x]
                        jac = 1.0 + jets.g[0]
                        x_phys = t * jac + jets.g[0]
                        inv_tab = jets.inverse_table(x_phys)
                        comps = [_xcomponent_table(m), inv_tab]
                        dref = {b: np.outer(dersx[b[0]], dersy[b[1]]).ravel()
                                for b in betas}
                        dmat = np.zeros((len(gflat), len(gammas)))
                        for c, gam in enumerate(gammas):
                            coeffs = compose_coefficients(_index_tuple(gam), comps)
                            for b, cb in coeffs.items():
                                dmat[:, c] += cb * dref[b]
                    block = (dmat * wgam) @ dmat.T
                    ij = np.ix_(gflat, gflat)
                    stiff[ij] += (w * jac) * block
                    if with_mass:
                        mass[ij] += (w * jac) * np.outer(vals, vals)
    stiff = 0.5 * (stiff + stiff.T)
    mass = 0.5 * (mass + mass.T)
    return stiff, mass


def assemble_pencil(variant: ProblemVariant, cspace: ConstrainedSpace,
                    vmap: VerticalMap | None, quad_order: int) -> SymmetricPencil:
    """Assemble the (full-form, mass) pencil on the free basis of the space.

    The full-form matrix is stiffness + mass; for the critical variant the
    strange boundary matrix K * (top-edge pairing of (m-1)-st vertical
    derivatives) is added.  Entries are restricted to the free (constrained)
    basis, so essential boundary layers never enter the pencil.
    """
    map_profile = None if vmap is None else vmap.profile
    if map_profile != variant.profile:
        raise ConfigurationError("variant profile and map profile disagree")
    stiff, mass = assemble_full(cspace.space, variant.m, vmap, quad_order)
    free = np.array([cspace.space.flat_index(mi) for mi in cspace.free_multi])
    sel = np.ix_(free, free)
    a = stiff[sel] + mass[sel]
    b = mass[sel]
    if variant.tag == "critical":
        a = a + assemble_strange_matrix(cspace, variant.m, variant.K, quad_order)
    return SymmetricPencil(a, b, cspace, variant)


def assemble_strange_matrix(cspace: ConstrainedSpace, m: int, K: float,
                            quad_order: int) -> np.ndarray:
    """Top-edge boundary matrix K * int (d^(m-1)_N phi_i)(d^(m-1)_N phi_j) dxbar."""
    if K < 0:
        raise ValueError("the strange constant must be non-negative")
    space = cspace.space
    ny = space.shape[1]
    basis_x, basis_y = space.bases
    top = basis_y.interval[1]
    idxy, dersy = basis_y.eval_all(top, m - 1)
    vtop = dersy[m - 1]
    ntot = space.dimension
    full = np.zeros((ntot, ntot))
    nodes, wts = np.polynomial.legendre.leggauss(quad_order)
    for a, b in zip(basis_x.breaks[:-1], basis_x.breaks[1:]):
        half = 0.5 * (b - a)
        for xi, wi in zip(0.5 * (a + b) + half * nodes, half * wts):
            idxx, dersx = basis_x.eval_all(float(xi), 0)
            gflat = (idxx[:, None] * ny + idxy[None, :]).ravel()
            u = np.outer(dersx[0], vtop).ravel()
            full[np.ix_(gflat, gflat)] += wi * np.outer(u, u)
    free = np.array([space.flat_index(mi) for mi in cspace.free_multi])
    return K * full[np.ix_(free, free)]


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def solve_generalized_eigen(pencil: SymmetricPencil, n_eigs: int,
                            tol: float = 1e-6) -> EigenSolution:
    """Lowest eigenpairs of A v = lambda B v via Cholesky-reduced symmetric solve.

    Eigenvalues come back ascending with B-orthonormal eigenvectors; relative
    residuals are computed explicitly and must pass the requested tolerance.
    """
    if not 1 <= n_eigs <= pencil.dimension:
        raise ValueError("n_eigs must be between 1 and the pencil dimension")
    try:
        vals, vecs = scipy.linalg.eigh(pencil.a, pencil.b,
                                       subset_by_index=[0, n_eigs - 1])
    except scipy.linalg.LinAlgError as exc:
        raise SolverError("generalized eigensolve failed") from exc
    residuals = np.empty(n_eigs)
    for i in range(n_eigs):
        av = pencil.a @ vecs[:, i]
        bv = pencil.b @ vecs[:, i]
        residuals[i] = np.linalg.norm(av - vals[i] * bv) / max(np.linalg.norm(av),
                                                               1e-300)
    if np.any(residuals > tol):
        raise SolverError(f"eigen residuals exceed tolerance: {residuals.max():.2e}")
    return EigenSolution(vals, vecs, residuals)


def solve_poisson(pencil: SymmetricPencil, rhs: Callable[[float, float], float],
                  quad_order: int) -> tuple[np.ndarray, float]:
    """Solve the source problem A u = F with F from the same quadrature.

    Returns free-basis coefficients and the relative algebraic residual.
    The full form always contains the mass term, so A is positive definite
    and the direct Cholesky path cannot encounter a singular matrix under the
    pencil invariants; a breakdown is reported as a solver error.
    """
    if pencil.space is None or pencil.variant is None:
        raise SolverError("source problems need a pencil with discretization data")
    cspace = pencil.space
    space = cspace.space
    variant = pencil.variant
    vmap = VerticalMap(variant.profile) if variant.profile is not None else None
    ny = space.shape[1]
    load_full = np.zeros(space.dimension)
    ax_x = _axis_tables(space.bases[0], quad_order, 0)
    ax_y = _axis_tables(space.bases[1], quad_order, 0)
    for ex_entries in ax_x:
        for x, wx, idxx, dersx in ex_entries:
            jac = float(vmap.jacobian(x)) if vmap is not None else 1.0
            for ey_entries in ax_y:
                for t, wy, idxy, dersy in ey_entries:
                    x_phys = float(vmap.forward(x, t)) if vmap is not None else t
                    f_val = rhs(x, x_phys)
                    gflat = (idxx[:, None] * ny + idxy[None, :]).ravel()
                    load_full[gflat] += (wx * wy * jac * f_val) * np.outer(
                        dersx[0], dersy[0]).ravel()
    free = np.array([space.flat_index(mi) for mi in cspace.free_multi])
    load = load_full[free]
    try:
        cho = scipy.linalg.cho_factor(pencil.a)
    except scipy.linalg.LinAlgError as exc:
        raise SolverError("full-form matrix lost positive definiteness") from exc
    coeffs = scipy.linalg.cho_solve(cho, load)
    scale = max(float(np.linalg.norm(load)), 1e-300)
    residual = float(np.linalg.norm(pencil.a @ coeffs - load)) / scale
    return coeffs, residual
