"""Oscillating boundary profiles, graph-domain maps, and the stability classifier.

Profiles are real trigonometric polynomials scaled by eps^alpha and squeezed
to period eps, so every derivative and every sup-norm is available in closed
form.  Two maps are provided: a vertical map, linear in the reference height,
used for assembly on graph domains, and the piecewise power-law map that
flattens only a thin collar below the oscillating top; the latter's derivative
decay rates are themselves a test target.  The classifier encodes the sharp
stability threshold alpha > m - k + 1/2 together with the critical/degenerate
split of the strong intermediate case, and criterion_rates verifies the
underlying quotient conditions numerically on profile families.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .combinatorics import (DerivativeTable, compose_coefficients,
                            multi_indices_up_to, table_compose_scalar,
                            table_product)
from .errors import GeometryError, PreconditionError

__all__ = [
    "TrigPolynomial",
    "OscillatingProfile",
    "VerticalMap",
    "CollarMap",
    "Regime",
    "StabilityVerdict",
    "profile_jet",
    "h_eps_jet",
    "vertical_map_jets",
    "pullback_jet",
    "atlas_profile_distance",
    "classify_stability",
    "criterion_rates",
    "CriterionRow",
    "CriterionReport",
]


# ---------------------------------------------------------------------------
# trigonometric polynomials on the unit period
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrigPolynomial:
    """b(y) = sum_k a_k cos(2 pi k y) + s_k sin(2 pi k y); rows are (k, a_k, s_k)."""

    terms: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        ks = [k for k, _, _ in self.terms]
        if any(k < 0 for k in ks) or len(set(ks)) != len(ks):
            raise ValueError("frequencies must be distinct non-negative integers")

    @property
    def constant(self) -> float:
        for k, a, _ in self.terms:
            if k == 0:
                return a
        return 0.0

    @property
    def max_frequency(self) -> int:
        return max((k for k, a, s in self.terms if k > 0 and (a != 0 or s != 0)),
                   default=0)

    @property
    def is_constant(self) -> bool:
        return self.max_frequency == 0

    def derivative_values(self, order: int, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        shift = order * math.pi / 2.0
        for k, a, s in self.terms:
            if k == 0:
                if order == 0:
                    out = out + a
                continue
            w = 2.0 * math.pi * k
            arg = w * y + shift
            out = out + w ** order * (a * np.cos(arg) + s * np.sin(arg))
        return out

    def value(self, y) -> np.ndarray:
        return self.derivative_values(0, y)

    def sup_derivative(self, order: int, samples: int = 0) -> float:
        """Sup over one period by dense sampling with one refinement pass."""
        n = samples or 64 * max(1, self.max_frequency) * 4
        grid = np.linspace(0.0, 1.0, n, endpoint=False)
        vals = np.abs(self.derivative_values(order, grid))
        i = int(np.argmax(vals))
        lo, hi = grid[i] - 1.0 / n, grid[i] + 1.0 / n
        fine = np.linspace(lo, hi, 2 * n + 1)
        return float(np.max(np.abs(self.derivative_values(order, fine))))

    @staticmethod
    def parse(text: str) -> "TrigPolynomial":
        """Parse strings like "2+cos", "2+0.5*cos(2)", "1.5-0.3*sin(3)".

        Each term is a constant, or [A*]cos(k) / [A*]sin(k) with integer
        frequency k (default 1) counting full oscillations per period.
        """
        cleaned = text.replace(" ", "")
        if not cleaned:
            raise ValueError("empty profile expression")
        pieces = re.findall(r"[+-]?[^+-]+", cleaned)
        rows: dict[int, list[float]] = {}

        def add(k: int, a: float = 0.0, s: float = 0.0):
            row = rows.setdefault(k, [0.0, 0.0])
            row[0] += a
            row[1] += s

        for piece in pieces:
            mt = re.fullmatch(r"([+-]?[\d.]*)\*?(cos|sin)(?:\((\d+)\))?", piece)
            if mt:
                coeff_text, kind, freq = mt.groups()
                coeff = {"": 1.0, "+": 1.0, "-": -1.0}.get(coeff_text,
                                                           None)
                if coeff is None:
                    coeff = float(coeff_text)
                k = int(freq) if freq else 1
                add(k, a=coeff if kind == "cos" else 0.0,
                    s=coeff if kind == "sin" else 0.0)
            else:
                add(0, a=float(piece))
        terms = tuple((k, rows[k][0], rows[k][1]) for k in sorted(rows))
        return TrigPolynomial(terms)


# ---------------------------------------------------------------------------
# the oscillating profile family g(x) = eps^alpha b(x / eps)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OscillatingProfile:
    alpha: float
    epsilon: float
    b: TrigPolynomial

    def __post_init__(self):
        if self.alpha <= 0 or self.epsilon <= 0:
            raise GeometryError("alpha and epsilon must be positive")
        grid = np.linspace(0.0, 1.0, 1024 * max(1, self.b.max_frequency),
                           endpoint=False)
        if float(np.min(self.b.value(grid))) <= 0.0:
            raise GeometryError("profile amplitude b must be strictly positive")

    @property
    def non_constant(self) -> bool:
        return not self.b.is_constant

    def value(self, x) -> np.ndarray:
        return self.derivative_values(0, x)

    def derivative_values(self, order: int, x) -> np.ndarray:
        scale = self.epsilon ** (self.alpha - order)
        return scale * self.b.derivative_values(order, np.asarray(x) / self.epsilon)

    def sup_derivative(self, order: int) -> float:
        return self.epsilon ** (self.alpha - order) * self.b.sup_derivative(order)

    def jet(self, x: float, order_cap: int) -> DerivativeTable:
        entries = {(j,): float(self.derivative_values(j, x))
                   for j in range(order_cap + 1)}
        return DerivativeTable(1, order_cap, entries)

    def to_json(self) -> str:
        rows = [[k, a, s] for k, a, s in self.b.terms]
        return json.dumps({"alpha": self.alpha, "epsilon": self.epsilon,
                           "fourier": rows})

    @staticmethod
    def from_json(text: str) -> "OscillatingProfile":
        data = json.loads(text)
        terms = tuple((int(k), float(a), float(s)) for k, a, s in data["fourier"])
        return OscillatingProfile(float(data["alpha"]), float(data["epsilon"]),
                                  TrigPolynomial(terms))


def profile_jet(profile: OscillatingProfile, x: float, order_cap: int) -> DerivativeTable:
    """Exact jet of the scaled profile at x: order-j entry eps^(alpha-j) b^(j)(x/eps)."""
    return profile.jet(x, order_cap)


def _profile_values(profile: OscillatingProfile | None, order: int, x) -> np.ndarray:
    if profile is None:
        return np.zeros_like(np.asarray(x, dtype=float))
    return profile.derivative_values(order, x)


# ---------------------------------------------------------------------------
# maps between the reference rectangle and graph domains
# ---------------------------------------------------------------------------

def _scalar_jet_1d(order_cap: int, values: Sequence[float]) -> DerivativeTable:
    return DerivativeTable(1, order_cap, {(j,): float(values[j])
                                          for j in range(order_cap + 1)})


def _reciprocal_jet(s: float, order_cap: int) -> DerivativeTable:
    if s == 0.0:
        raise GeometryError("reciprocal jet at zero")
    vals = [(-1) ** j * math.factorial(j) / s ** (j + 1) for j in range(order_cap + 1)]
    return _scalar_jet_1d(order_cap, vals)


def _power_jet(s: float, power: int, order_cap: int) -> DerivativeTable:
    vals = []
    for j in range(order_cap + 1):
        if j > power:
            vals.append(0.0)
        else:
            vals.append(math.perm(power, j) * s ** (power - j))
    return _scalar_jet_1d(order_cap, vals)


def _plane_table_from_profile(profile: OscillatingProfile | None, x: float,
                              order_cap: int, shift: float = 0.0) -> DerivativeTable:
    """Jets of (xbar, x_N) -> g(xbar) + shift as a two-variable table."""
    entries = {}
    for beta in multi_indices_up_to(2, order_cap):
        if beta[1] > 0:
            entries[beta] = 0.0
        else:
            entries[beta] = float(_profile_values(profile, beta[0], x))
    entries[(0, 0)] += shift
    return DerivativeTable(2, order_cap, entries)


def _coordinate_table(value: float, coord: int, order_cap: int) -> DerivativeTable:
    entries = {beta: 0.0 for beta in multi_indices_up_to(2, order_cap)}
    entries[(0, 0)] = value
    unit = (1, 0) if coord == 0 else (0, 1)
    if order_cap >= 1:
        entries[unit] = 1.0
    return DerivativeTable(2, order_cap, entries)


@dataclass(frozen=True)
class VerticalMap:
    """Reference rectangle W x (-1, 0) mapped onto the graph domain below g.

    Forward map (xbar, t) -> (xbar, t (1 + g) + g) sends t = -1 to the flat
    bottom and t = 0 onto the graph; the inverse height is
    tau(xbar, x_N) = (x_N - g) / (1 + g).  A ``None`` profile is the identity.
    """

    profile: OscillatingProfile | None

    def jacobian(self, x) -> np.ndarray:
        return 1.0 + _profile_values(self.profile, 0, x)

    def forward(self, x, t) -> np.ndarray:
        g = _profile_values(self.profile, 0, x)
        return np.asarray(t) * (1.0 + g) + g

    def inverse(self, x, x_n) -> np.ndarray:
        g = _profile_values(self.profile, 0, x)
        denom = 1.0 + g
        if np.any(denom <= 0.0):
            raise GeometryError("vertical map degenerates: 1 + g <= 0")
        return (np.asarray(x_n) - g) / denom

    def forward_jet(self, point: Sequence[float], order_cap: int) -> DerivativeTable:
        """Closed-form jets of the height map, linear in t."""
        x, t = float(point[0]), float(point[1])
        g = [float(_profile_values(self.profile, j, x)) for j in range(order_cap + 1)]
        if 1.0 + g[0] <= 0.0:
            raise GeometryError("vertical map degenerates: 1 + g <= 0")
        entries = {}
        for beta in multi_indices_up_to(2, order_cap):
            jx, jt = beta
            if jt == 0:
                entries[beta] = (t + 1.0) * g[jx] if jx > 0 else t * (1.0 + g[0]) + g[0]
            elif jt == 1:
                entries[beta] = (1.0 + g[0]) if jx == 0 else g[jx]
            else:
                entries[beta] = 0.0
        return DerivativeTable(2, order_cap, entries)

    def inverse_jet(self, point: Sequence[float], order_cap: int) -> DerivativeTable:
        """Jets of tau at a physical point, through quotient/product rules."""
        x, x_n = float(point[0]), float(point[1])
        g0 = float(_profile_values(self.profile, 0, x))
        if 1.0 + g0 <= 0.0:
            raise GeometryError("vertical map degenerates: 1 + g <= 0")
        g_tab = _plane_table_from_profile(self.profile, x, order_cap)
        numer_entries = {beta: -g_tab.entry(beta)
                         for beta in multi_indices_up_to(2, order_cap)}
        numer_entries[(0, 0)] = x_n - g0
        if order_cap >= 1:
            numer_entries[(0, 1)] = 1.0
        numer = DerivativeTable(2, order_cap, numer_entries)
        denom = _plane_table_from_profile(self.profile, x, order_cap, shift=1.0)
        recip = table_compose_scalar(_reciprocal_jet(1.0 + g0, order_cap), denom)
        return table_product(numer, recip)

    def inverse_component_jets(self, point: Sequence[float],
                               order_cap: int) -> list[DerivativeTable]:
        """Component jets of (xbar, x_N) -> (xbar, tau), for pullbacks."""
        return [_coordinate_table(float(point[0]), 0, order_cap),
                self.inverse_jet(point, order_cap)]


def vertical_map_jets(vmap: VerticalMap, point: Sequence[float],
                      order_cap: int) -> tuple[DerivativeTable, DerivativeTable]:
    """Forward jet at a reference point and inverse jet at its image."""
    fwd = vmap.forward_jet(point, order_cap)
    physical = (float(point[0]), fwd.entry((0, 0)))
    return fwd, vmap.inverse_jet(physical, order_cap)


@dataclass(frozen=True)
class CollarMap:
    """Piecewise map height correction h with a power-law collar of width eps.

    h vanishes below x_N = -eps and equals g (x_N + eps)^(m+1) / (g + eps)^(m+1)
    above, so the first m derivatives are continuous across the junction and
    every derivative of order l decays like eps^(alpha - l).
    """

    profile: OscillatingProfile
    m: int

    def value(self, x, x_n) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        x_n = np.asarray(x_n, dtype=float)
        g = _profile_values(self.profile, 0, x)
        eps = self.profile.epsilon
        ratio = np.clip((x_n + eps) / (g + eps), 0.0, None)
        out = g * ratio ** (self.m + 1)
        return np.where(x_n <= -eps, 0.0, out)

    def jet(self, point: Sequence[float], order_cap: int) -> DerivativeTable:
        """Exact jets through the product/composition table calculus."""
        if order_cap > self.m:
            raise ValueError("collar map jets certified only up to order m")
        x, x_n = float(point[0]), float(point[1])
        eps = self.profile.epsilon
        g0 = float(_profile_values(self.profile, 0, x))
        if not -1.0 - 1e-12 <= x_n <= g0 + 1e-12:
            raise GeometryError(f"point x_N={x_n} outside the closed graph domain")
        if x_n <= -eps:
            zeros = {b: 0.0 for b in multi_indices_up_to(2, order_cap)}
            return DerivativeTable(2, order_cap, zeros)
        g_tab = _plane_table_from_profile(self.profile, x, order_cap)
        denom = _plane_table_from_profile(self.profile, x, order_cap, shift=eps)
        recip = table_compose_scalar(_reciprocal_jet(g0 + eps, order_cap), denom)
        upper = _coordinate_table(x_n + eps, 1, order_cap)
        ratio = table_product(upper, recip)
        ratio_pow = table_compose_scalar(
            _power_jet(ratio.entry((0, 0)), self.m + 1, order_cap), ratio)
        return table_product(g_tab, ratio_pow)

    def sup_derivative_sample(self, order: int, n: int = 48) -> float:
        """Sampled sup of all order-`order` derivatives over the collar."""
        eps = self.profile.epsilon
        best = 0.0
        xs = np.linspace(0.0, eps, n, endpoint=False)
        for x in xs:
            top = float(_profile_values(self.profile, 0, x))
            for s in np.linspace(0.0, 1.0, n):
                x_n = -eps + s * (top + eps)
                jet = self.jet((x, x_n), order)
                for beta in multi_indices_up_to(2, order):
                    if sum(beta) == order:
                        best = max(best, abs(jet.entry(beta)))
        return best


def h_eps_jet(collar: CollarMap, point: Sequence[float],
              order_cap: int) -> DerivativeTable:
    return collar.jet(point, order_cap)


def pullback_jet(phi_jet: DerivativeTable, map_jets: Sequence[DerivativeTable],
                 alpha: Sequence[int]) -> float:
    """Derivative D^alpha of (phi o Phi) from phi jets and map component jets."""
    order = sum(alpha)
    if order > phi_jet.order_cap:
        raise ValueError("target order exceeds the available jets")
    index_tuple: list[int] = []
    for coord, count in enumerate(alpha):
        index_tuple.extend([coord] * count)
    coeffs = compose_coefficients(tuple(index_tuple), map_jets)
    return sum(c * phi_jet.entry(beta) for beta, c in coeffs.items())


# ---------------------------------------------------------------------------
# atlas distance between boundary profiles
# ---------------------------------------------------------------------------

def _difference_sup(p1: OscillatingProfile | None, p2: OscillatingProfile | None,
                    order: int, window: tuple[float, float] = (0.0, 1.0)) -> float:
    density = 64
    for p in (p1, p2):
        if p is not None:
            density = max(density, 64 * max(1, p.b.max_frequency)
                          * int(round(1.0 / p.epsilon)))
    density = min(density, 1 << 17)
    grid = np.linspace(window[0], window[1], density, endpoint=False)
    diff = _profile_values(p1, order, grid) - _profile_values(p2, order, grid)
    vals = np.abs(diff)
    i = int(np.argmax(vals))
    h = (window[1] - window[0]) / density
    fine = np.linspace(grid[i] - h, grid[i] + h, 257)
    diff_fine = _profile_values(p1, order, fine) - _profile_values(p2, order, fine)
    return float(np.max(np.abs(diff_fine)))


def atlas_profile_distance(p1: OscillatingProfile | None,
                           p2: OscillatingProfile | None, h: int) -> float:
    """Max over derivative orders <= h of the sup-norm distance of two profiles."""
    if h < 0:
        raise ValueError("derivative cap must be non-negative")
    return max(_difference_sup(p1, p2, order) for order in range(h + 1))


# ---------------------------------------------------------------------------
# stability classification
# ---------------------------------------------------------------------------

class Regime(enum.Enum):
    STABLE = "Stable"
    CRITICAL = "Critical"
    DEGENERATE = "Degenerate"
    INAPPLICABLE = "CriterionInapplicable"


@dataclass(frozen=True)
class StabilityVerdict:
    regime: Regime
    threshold: float
    details: str


def classify_stability(m: int, k: int, alpha: float) -> StabilityVerdict:
    """Spectral-stability verdict for the order-2m problem with k essential layers.

    Stability holds iff alpha exceeds m - k + 1/2.  In the strong intermediate
    case k = m - 1 the threshold is 3/2 independently of m, with a strange
    boundary term exactly at the threshold and degeneration to Dirichlet
    conditions below it.  For weak intermediate cases below the threshold no
    limit problem is known, so the classifier refuses to name one.
    """
    if m < 2:
        raise ValueError("operator order parameter m must be >= 2")
    if not 1 <= k <= m - 1:
        raise ValueError(f"essential order k must satisfy 1 <= k <= {m - 1}")
    if alpha <= 0:
        raise ValueError("oscillation exponent alpha must be positive")
    threshold = m - k + 0.5
    if alpha > threshold:
        return StabilityVerdict(Regime.STABLE, threshold,
                                f"alpha={alpha} above threshold {threshold}")
    if k == m - 1:
        if alpha == threshold:
            return StabilityVerdict(Regime.CRITICAL, threshold,
                                    "critical exponent: strange boundary term")
        return StabilityVerdict(Regime.DEGENERATE, threshold,
                                "below threshold: degeneration to Dirichlet traces")
    return StabilityVerdict(Regime.INAPPLICABLE, threshold,
                            "weak intermediate case below threshold: no limit known")


# ---------------------------------------------------------------------------
# numerical verification of the stability criterion quotients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriterionRow:
    order: int
    quotients: tuple[float, ...]
    slope: float
    vanishes: bool


@dataclass(frozen=True)
class CriterionReport:
    m: int
    k: int
    rows: tuple[CriterionRow, ...]
    satisfied: bool


def criterion_rates(profiles: Sequence[OscillatingProfile],
                    kappas: Sequence[float], m: int, k: int,
                    limit: OscillatingProfile | Sequence[OscillatingProfile] | None = None,
                    ) -> CriterionReport:
    """Quotient sequences of the explicit stability criterion on a profile family.

    For every derivative order j <= m computes
    sup|D^j (g_eps - g)| / kappa_eps^(m - j - k + 1/2) along the family,
    fits a log-log slope against eps, and declares the criterion satisfied
    when every quotient sequence tends to zero.  Requires kappa_eps to
    dominate the sup-norm distance, which is the gauge condition of the
    criterion.
    """
    if len(profiles) != len(kappas) or len(profiles) < 2:
        raise ValueError("need matching profile/kappa families of length >= 2")
    if not 1 <= k <= m - 1:
        raise ValueError(f"essential order k must satisfy 1 <= k <= {m - 1}")
    eps = np.array([p.epsilon for p in profiles])
    if np.any(np.diff(eps) >= 0):
        raise ValueError("profile family must have strictly decreasing epsilon")
    if limit is None or isinstance(limit, OscillatingProfile):
        limits: list[OscillatingProfile | None] = [limit] * len(profiles)
    else:
        limits = list(limit)
        if len(limits) != len(profiles):
            raise ValueError("per-member limit list must match the family length")
    sup0 = [_difference_sup(p, g, 0) for p, g in zip(profiles, limits)]
    for kappa, d0 in zip(kappas, sup0):
        if not kappa > d0:
            raise PreconditionError(
                f"kappa={kappa} does not dominate the profile distance {d0}")

    rows = []
    for order in range(m + 1):
        sups = np.array([_difference_sup(p, g, order)
                         for p, g in zip(profiles, limits)])
        quot = sups / np.array(kappas) ** (m - order - k + 0.5)
        if np.all(quot == 0.0):
            rows.append(CriterionRow(order, tuple(quot), math.inf, True))
            continue
        slope = float(np.polyfit(np.log(eps), np.log(np.maximum(quot, 1e-300)), 1)[0])
        rows.append(CriterionRow(order, tuple(float(q) for q in quot), slope,
                                 slope > 0.0))
    return CriterionReport(m, k, tuple(rows), all(r.vanishes for r in rows))
