"""
Derivations of the jet ring, their exponentials and the convergence criteria
for Lie series and products of exponentials.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from sympy.polys.domains import QQ

from .exceptions import DimensionError, DomainError, ExponentialError, TruncationError
from .jet import (
    Exponent,
    Jet,
    JetMap,
    Scalar,
    format_jet,
    jet_from_record,
    jet_to_record,
    to_complex,
)
from .scale import NormEstimate, round_up

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Derivation:
    """v = Σ v_i ∂_i with jet coefficients v_i."""

    components: Tuple[Jet, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise DimensionError("a derivation needs at least one component")
        n, trunc = comps[0].n_vars, comps[0].trunc
        if len(comps) != n:
            raise DimensionError(f"derivation has {len(comps)} components for {n} variables")
        for c in comps:
            if c.n_vars != n:
                raise DimensionError("derivation components live in different rings")
            if c.trunc != trunc:
                raise TruncationError("derivation components carry different truncations")
        object.__setattr__(self, "components", comps)

    @property
    def n_vars(self) -> int:
        return self.components[0].n_vars

    @property
    def trunc(self) -> int:
        return self.components[0].trunc

    @property
    def omega(self) -> Union[int, float]:
        """Coefficient order min_i ord(v_i)."""
        return min(c.order() for c in self.components)

    @classmethod
    def zero(cls, n_vars: int, trunc: int) -> "Derivation":
        return cls(tuple(Jet.zero(n_vars, trunc) for _ in range(n_vars)))

    @classmethod
    def along(cls, i: int, a: Jet) -> "Derivation":
        """a ∂_i."""
        if not 0 <= i < a.n_vars:
            raise DimensionError(f"variable index {i} out of range for {a.n_vars} variables")
        zero = Jet.zero(a.n_vars, a.trunc)
        return cls(tuple(a if k == i else zero for k in range(a.n_vars)))

    @classmethod
    def coordinate(cls, i: int, n_vars: int, trunc: int) -> "Derivation":
        """∂_i."""
        return cls.along(i, Jet.constant(1, n_vars, trunc))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __add__(self, other: "Derivation") -> "Derivation":
        return Derivation(tuple(a + b for a, b in zip(self.components, other.components)))

    def __neg__(self) -> "Derivation":
        return Derivation(tuple(-c for c in self.components))

    def __sub__(self, other: "Derivation") -> "Derivation":
        return self + (-other)

    def scale(self, value: Scalar) -> "Derivation":
        return Derivation(tuple(c.scale(value) for c in self.components))

    def multiply(self, a: Jet) -> "Derivation":
        """a·v."""
        return Derivation(tuple(a * c for c in self.components))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Derivation):
            return NotImplemented
        return self.components == other.components

    __hash__ = None

    def __str__(self) -> str:
        parts = []
        for i, c in enumerate(self.components):
            if c.is_zero():
                continue
            name = "d/dz" if self.n_vars == 1 else f"d/dz{i + 1}"
            parts.append(f"({format_jet(c)})*{name}")
        return " + ".join(parts) or "0"

    def to_record(self) -> list:
        return [jet_to_record(c) for c in self.components]

    @classmethod
    def from_record(cls, records: Sequence[Mapping]) -> "Derivation":
        return cls(tuple(jet_from_record(r) for r in records))


def _check_pair(v: Derivation, f: Jet) -> None:
    if v.n_vars != f.n_vars:
        raise DimensionError(f"derivation in {v.n_vars} variables applied to a jet in {f.n_vars}")
    if v.trunc != f.trunc:
        raise TruncationError(f"derivation truncated at {v.trunc}, jet at {f.trunc}")


def apply(v: Derivation, f: Jet) -> Jet:
    """v(f) = Σ v_i ∂_i f."""
    _check_pair(v, f)
    result = Jet.zero(f.n_vars, f.trunc)
    for i, c in enumerate(v.components):
        if not c.is_zero():
            result = result + c * f.partial(i)
    return result


@dataclass(frozen=True)
class FloatJet:
    """Jet with floating-point coefficients, produced by the semisimple exponential only."""

    n_vars: int
    trunc: int
    coeffs: Dict[Exponent, complex]

    def coefficient(self, alpha: Exponent) -> complex:
        return self.coeffs.get(tuple(alpha), 0j)

    def evaluate(self, point: Sequence[complex]) -> complex:
        total = 0j
        for alpha, c in self.coeffs.items():
            total += c * np.prod([complex(z) ** e for z, e in zip(point, alpha)])
        return complex(total)


def diagonal_eigenvalues(v: Derivation) -> Optional[Tuple[complex, ...]]:
    """(λ_1, ..., λ_n) when v = Σ λ_i z_i ∂_i, else None."""
    lambdas = []
    for i, c in enumerate(v.components):
        e_i = tuple(1 if k == i else 0 for k in range(v.n_vars))
        if any(alpha != e_i for alpha in c.coeffs):
            return None
        lambdas.append(to_complex(c.coefficient(e_i)))
    return tuple(lambdas)


def exp_semisimple(lambdas: Sequence[complex], f: Jet) -> FloatJet:
    """e^v f for v = Σ λ_i z_i ∂_i: each monomial z^α is multiplied by e^{λ·α}."""
    if len(lambdas) != f.n_vars:
        raise DimensionError(f"{len(lambdas)} eigenvalues for {f.n_vars} variables")
    lam = np.asarray(lambdas, dtype=complex)
    coeffs = {alpha: to_complex(c) * complex(np.exp(np.dot(lam, alpha)))
              for alpha, c in f.coeffs.items()}
    return FloatJet(f.n_vars, f.trunc, coeffs)


def _lie_series(v: Derivation, f: Jet) -> Jet:
    result = f
    term = f
    for j in range(1, f.trunc + 2):
        term = apply(v, term).scale(QQ(1, j))
        if term.is_zero():
            break
        result = result + term
    return result


def exp(v: Derivation, f: Jet) -> Union[Jet, FloatJet]:
    """e^v f = Σ v^j(f)/j!.

    Exact when ω(v) ≥ 2 (the series terminates on jets). A diagonal v of
    order 1 goes through ``exp_semisimple`` and returns a FloatJet.
    """
    _check_pair(v, f)
    if v.is_zero():
        return f
    omega = v.omega
    if omega >= 2:
        return _lie_series(v, f)
    if omega == 1:
        lambdas = diagonal_eigenvalues(v)
        if lambdas is not None:
            return exp_semisimple(lambdas, f)
        raise ExponentialError(
            "derivation of coefficient order 1 is not diagonal; "
            "only Σ λ_i z_i ∂_i is supported below order 2")
    raise ExponentialError("derivation has a nonzero constant coefficient (order 0)")


def exp_as_map(v: Derivation) -> JetMap:
    """The map (e^v z_1, ..., e^v z_n); f∘exp_as_map(v) = e^v f."""
    if not v.is_zero() and v.omega < 2:
        raise ExponentialError(f"exp_as_map needs coefficient order ≥ 2, got {v.omega}")
    n, trunc = v.n_vars, v.trunc
    return JetMap(tuple(_lie_series(v, Jet.variable(i, n, trunc)) for i in range(n)))


def exp_product(vs: Sequence[Derivation], n_vars: Optional[int] = None,
                trunc: Optional[int] = None) -> JetMap:
    """Map P with f∘P = e^{v_last}(⋯ e^{v_1}(e^{v_0} f))."""
    if vs:
        n_vars, trunc = vs[0].n_vars, vs[0].trunc
    elif n_vars is None or trunc is None:
        raise DimensionError("empty exp_product needs n_vars and trunc")
    product = JetMap.identity(n_vars, trunc)
    for v in vs:
        if v.is_zero():
            continue
        product = product.compose(exp_as_map(v))
    return product


def inverse_exp_product(vs: Sequence[Derivation], n_vars: Optional[int] = None,
                        trunc: Optional[int] = None) -> JetMap:
    """Inverse of exp_product(vs), built from the exponentials of -v in reverse order."""
    return exp_product([-v for v in reversed(vs)], n_vars, trunc)


# ---------------------------------------------------------------------------
# Convergence criteria
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductCriterion:
    ok: bool
    total: float
    s: float
    margin: float

    def to_record(self) -> dict:
        return {"sum": self.total, "s": self.s, "margin": self.margin, "ok": self.ok}


def _check_one_bounded(estimate: NormEstimate, s: float) -> None:
    if estimate.k != 1:
        raise DomainError(f"criterion needs a 1-bounded estimate, got k={estimate.k}")
    if s > estimate.tau:
        raise DomainError(f"radius {s} exceeds the estimate radius {estimate.tau}")


def check_exp_criterion(estimate: NormEstimate, s: float) -> bool:
    """3 N¹_s(u) < s."""
    _check_one_bounded(estimate, s)
    return 3.0 * estimate.C < s


def check_product_criterion(estimates: Sequence[NormEstimate], s: float) -> ProductCriterion:
    """3 Σ N¹_s(u_i) < s, with margin s - 3 Σ N¹_s(u_i)."""
    for e in estimates:
        _check_one_bounded(e, s)
    total = round_up(math.fsum(e.C for e in estimates))
    margin = s - 3.0 * total
    return ProductCriterion(ok=margin > 0, total=total, s=float(s), margin=margin)


def exp_growth_bound(C: float, s: float, lam: float) -> Optional[float]:
    """Factor in |e^u x|_{λs} ≤ factor·|x|_s, or None when 3C ≥ (1-λ)s."""
    if not 0 < lam < 1:
        return None
    q = 3.0 * C / ((1.0 - lam) * s)
    if q >= 1:
        return None
    return round_up(1.0 / (1.0 - q))


def product_growth_bound(Cs: Sequence[float], s: float, lam: float) -> Optional[float]:
    """Same factor for a product of exponentials e^{u_n}⋯e^{u_0}."""
    return exp_growth_bound(round_up(math.fsum(Cs)), s, lam)
