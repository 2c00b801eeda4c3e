"""
Scale norms on jets and bounds for k-bounded operators.

Floating-point values returned here are upper bounds: every sum is pushed
outward with ``round_up`` before it leaves the module. Numbers are claims
about jets, i.e. modulo terms of degree > trunc.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .exceptions import DomainError
from .jet import Exponent, Jet, abs_squared, rational_to_float, to_rational
from .schemas import NormReport

logger = logging.getLogger(__name__)

_SLACK = 1.0 + 8.0 * np.finfo(float).eps


def round_up(value: float) -> float:
    """Push a float computed with a handful of roundings above the exact value."""
    value = float(value)
    if value == 0.0:
        return 0.0
    return float(np.nextafter(value * _SLACK, np.inf))


def _check_radius(s: float, name: str = "s") -> float:
    s = float(s)
    if not s > 0.0 or not math.isfinite(s):
        raise DomainError(f"radius {name} must be positive, got {s}")
    return s


@dataclass(frozen=True)
class ScaleParams:
    """The interval ]0, S[ of the scale and the radii sampled inside it."""

    S: float
    grid: Tuple[float, ...]

    def __post_init__(self):
        if not self.S > 0:
            raise DomainError(f"scale bound S must be positive, got {self.S}")
        grid = tuple(float(s) for s in self.grid)
        if not grid:
            raise DomainError("scale grid is empty")
        for a, b in zip(grid, grid[1:]):
            if not a < b:
                raise DomainError("scale grid must be strictly increasing")
        if grid[0] <= 0 or grid[-1] >= self.S:
            raise DomainError(f"scale grid must lie inside ]0, {self.S}[")
        object.__setattr__(self, "grid", grid)

    @classmethod
    def geometric(cls, S: float, points: int, ratio: float = 0.75) -> "ScaleParams":
        if points < 1:
            raise DomainError("a scale grid needs at least one point")
        if not 0 < ratio < 1:
            raise DomainError(f"grid ratio must lie in ]0,1[, got {ratio}")
        return cls(S, tuple(S * ratio ** j for j in range(points, 0, -1)))

    def pairs(self) -> List[Tuple[float, float]]:
        """(s, σ) pairs from the grid with s + σ still on the grid."""
        out = []
        for i, s in enumerate(self.grid):
            for t in self.grid[i + 1:]:
                out.append((s, t - s))
        return out


@dataclass(frozen=True)
class NormEstimate:
    """|u(x)|_s ≤ C σ^{-k} |x|_{s+σ} for 0 < s < s+σ ≤ tau."""

    k: int
    tau: float
    C: float

    def __post_init__(self):
        if self.k < 0:
            raise DomainError(f"loss exponent must be nonnegative, got {self.k}")
        if not self.tau > 0:
            raise DomainError(f"radius tau must be positive, got {self.tau}")
        if self.C < 0:
            raise DomainError(f"norm bound must be nonnegative, got {self.C}")

    def to_record(self) -> dict:
        return {"k": self.k, "tau": self.tau, "C": self.C}


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def _moduli_and_degrees(f: Jet) -> Tuple[np.ndarray, np.ndarray]:
    if f.is_zero():
        return np.zeros(0), np.zeros(0)
    items = list(f.coeffs.items())
    re = np.array([rational_to_float(c.x) for _, c in items])
    im = np.array([rational_to_float(c.y) for _, c in items])
    degrees = np.array([sum(alpha) for alpha, _ in items], dtype=float)
    return np.hypot(re, im), degrees


def majorant_norm(f: Jet, s: float) -> float:
    """Σ |a_α| s^{|α|}, rounded up."""
    s = _check_radius(s)
    moduli, degrees = _moduli_and_degrees(f)
    if moduli.size == 0:
        return 0.0
    return round_up(np.sum(moduli * np.power(s, degrees)))


def l2_weight_squared(alpha: Exponent, s) -> object:
    """Exact Π s^{2α_i}/(α_i+1) for rational s; the factor π^n s^{2n} is left out."""
    s = to_rational(s)
    if not s > 0:
        raise DomainError(f"radius s must be positive, got {s}")
    w = to_rational(1)
    for a in alpha:
        w = w * s ** (2 * a) / (a + 1)
    return w


def l2_norm(f: Jet, s: float) -> float:
    """L² norm on the polydisc of polyradius s, with ‖z^α‖² = π^n Π s^{2α_i+2}/(α_i+1)."""
    s = _check_radius(s)
    if f.is_zero():
        return 0.0
    total = 0.0
    n = f.n_vars
    for alpha, c in f.coeffs.items():
        w2 = math.pi ** n
        for a in alpha:
            w2 *= s ** (2 * a + 2) / (a + 1)
        total += rational_to_float(abs_squared(c)) * w2
    return round_up(math.sqrt(round_up(total)))


def sup_bound_from_l2(f: Jet, s: float, sigma: float) -> float:
    """Upper bound for |f(z)| on the polydisc of radius s from the L² norm at s+σ."""
    s = _check_radius(s)
    sigma = _check_radius(sigma, "sigma")
    n = f.n_vars
    return round_up(l2_norm(f, s + sigma) / (math.pi ** (n / 2) * sigma ** n))


def sup_norm_sample(f: Jet, s: float, rng, samples: int = 64) -> float:
    """Largest |f(z)| over random points of the closed polydisc of radius s."""
    s = _check_radius(s)
    radii = s * np.sqrt(rng.random((samples, f.n_vars)))
    angles = 2 * np.pi * rng.random((samples, f.n_vars))
    points = radii * np.exp(1j * angles)
    return max(abs(f.evaluate(tuple(p))) for p in points)


# ---------------------------------------------------------------------------
# Operator bounds
# ---------------------------------------------------------------------------

def derivation_norm_bound(v, tau: float) -> NormEstimate:
    """Cauchy bound for a derivation: k = 1, C = Σ_i |v_i|_tau."""
    tau = _check_radius(tau, "tau")
    total = sum(majorant_norm(c, tau) for c in v.components)
    return NormEstimate(k=1, tau=tau, C=round_up(total))


def product_norm_bound(estimates: Sequence[NormEstimate]) -> NormEstimate:
    """N^k(u_1⋯u_n) ≤ n^k Π N^{k_i}(u_i) with k = Σ k_i."""
    if not estimates:
        raise DomainError("product_norm_bound needs at least one estimate")
    tau = estimates[0].tau
    if any(e.tau != tau for e in estimates):
        raise DomainError("estimates are taken at different radii")
    n = len(estimates)
    k = sum(e.k for e in estimates)
    C = float(n ** k)
    for e in estimates:
        C *= e.C
    return NormEstimate(k=k, tau=tau, C=round_up(C))


def power_norm_bound(estimate: NormEstimate, n: int) -> NormEstimate:
    """Bound for u^n/n! from a 1-bounded u: N^n(u^n)/n! ≤ 3^n N^1(u)^n."""
    if estimate.k != 1:
        raise DomainError(f"power_norm_bound needs a 1-bounded estimate, got k={estimate.k}")
    if n < 0:
        raise DomainError(f"power must be nonnegative, got {n}")
    return NormEstimate(k=n, tau=estimate.tau, C=round_up((3.0 * estimate.C) ** n))


def stirling_bound_holds(n: int) -> bool:
    """n^n ≤ 3^n n!, in exact integers."""
    return n ** n <= 3 ** n * math.factorial(n)


def filtration_ratio(f: Jet, s: float, s0: float) -> float:
    """|f|_s / (|f|_{s0} (s/s0)^{ord f}); at most 1 whenever s ≤ s0."""
    if f.is_zero():
        return 0.0
    k = f.order()
    return majorant_norm(f, s) / (majorant_norm(f, s0) * (s / s0) ** k)


def norm_report(f: Jet, s: float, kind: str = "majorant") -> NormReport:
    if kind == "majorant":
        value = majorant_norm(f, s)
    elif kind == "l2":
        value = l2_norm(f, s)
    else:
        raise DomainError(f"unknown norm kind {kind!r}; use 'majorant' or 'l2'")
    return NormReport(norm_kind=kind, s=float(s), value=value, trunc=f.trunc)
