"""
Ideals of the jet ring and the right inverse of the infinitesimal action.

Membership is graded linear algebra: an ideal is represented by the span of
all products monomial × generator that survive truncation (a Macaulay span),
kept in echelon form with graded-lex pivots. Since pivots are ordered by
degree, "modulo M^{d+1}" is a prefix of the coordinates, and

    M^d ⊂ I + M^{d+1}   (Nakayama)   ⇒   M^d ⊂ I

turns a finite check into a statement about the local ring.
"""

import logging
import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.polys.domains import QQ_I

from .exceptions import DegenerateInputError, DimensionError, TruncationError
from .jet import (
    Coeff,
    Exponent,
    Jet,
    Scalar,
    abs_squared,
    add_exponents,
    coeff_to_pair,
    conj,
    monomial_index,
    monomials_of_degree,
    monomials_upto,
    parse_jet,
    rational_to_float,
    to_rational,
)
from .lie import Derivation, apply
from .linalg import LinearSystem, SpanBasis
from .scale import NormEstimate, derivation_norm_bound, majorant_norm, round_up
from .schemas import MembershipRecord

logger = logging.getLogger(__name__)


def monomial_count(n_vars: int, degree: int) -> int:
    """Number of monomials of degree ≤ degree."""
    if degree < 0:
        return 0
    return math.comb(n_vars + degree, n_vars)


def jet_vector(f: Jet) -> Dict[int, Coeff]:
    index = monomial_index(f.n_vars, f.trunc)
    return {index[alpha]: c for alpha, c in f.coeffs.items()}


def _shift(f: Jet, m: Exponent) -> Dict[int, Coeff]:
    """Coefficient vector of z^m·f."""
    index = monomial_index(f.n_vars, f.trunc)
    dm = sum(m)
    return {index[add_exponents(alpha, m)]: c
            for alpha, c in f.coeffs.items() if sum(alpha) + dm <= f.trunc}


@dataclass(frozen=True)
class InvariantResult:
    """An integer invariant, or None with the reason it could not be certified."""

    value: Optional[int]
    certified_degree: Optional[int]
    reason: str = ""

    @property
    def conclusive(self) -> bool:
        return self.value is not None


class IdealData:
    """Ideal generated by jets, with its Macaulay span built on first use.

    ``valid_degree`` is the highest degree at which the generators are known
    exactly (trunc - 1 for partial derivatives).
    """

    def __init__(self, generators: Sequence[Jet], n_vars: Optional[int] = None,
                 trunc: Optional[int] = None, valid_degree: Optional[int] = None):
        gens = list(generators)
        if gens:
            n_vars, trunc = gens[0].n_vars, gens[0].trunc
            for g in gens:
                if g.n_vars != n_vars:
                    raise DimensionError("ideal generators live in different rings")
                if g.trunc != trunc:
                    raise TruncationError("ideal generators carry different truncations")
        elif n_vars is None or trunc is None:
            raise DimensionError("an ideal without generators needs n_vars and trunc")
        self.n_vars = n_vars
        self.trunc = trunc
        self.valid_degree = trunc if valid_degree is None else min(valid_degree, trunc)
        self.generators: List[Jet] = [g for g in gens if not g.is_zero()]
        self._span: Optional[SpanBasis] = None

    def __repr__(self) -> str:
        return (f"IdealData(n_vars={self.n_vars}, trunc={self.trunc}, "
                f"generators={[str(g) for g in self.generators]})")

    @property
    def span(self) -> SpanBasis:
        if self._span is None:
            self._span = SpanBasis()
            for j, g in enumerate(self.generators):
                self._add_multiples(j, g)
            logger.debug(f"Macaulay span of {len(self.generators)} generators has rank {len(self._span)}")
        return self._span

    def _add_multiples(self, j: int, g: Jet) -> None:
        for m in monomials_upto(self.n_vars, self.trunc - g.order()):
            self._span.add(_shift(g, m), (m, j))

    def _limit(self, degree: Optional[int]) -> int:
        if degree is None:
            degree = self.valid_degree
        return monomial_count(self.n_vars, min(degree, self.trunc))

    def _check(self, h: Jet) -> None:
        if h.n_vars != self.n_vars:
            raise DimensionError(f"jet in {h.n_vars} variables tested against an ideal in {self.n_vars}")
        if h.trunc != self.trunc:
            raise TruncationError(f"jet truncated at {h.trunc}, ideal at {self.trunc}")

    # -- queries ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.generators

    def contains_unit(self) -> bool:
        return any(g.constant_term() for g in self.generators)

    def contains(self, h: Jet, degree: Optional[int] = None) -> bool:
        """h ∈ I + M^{degree+1}."""
        self._check(h)
        return self.span.contains(jet_vector(h), self._limit(degree))

    def express(self, h: Jet, degree: Optional[int] = None) -> Optional[Dict[Tuple[Exponent, int], Coeff]]:
        """Coefficients c with h ≡ Σ c[(m, j)]·z^m·g_j modulo M^{degree+1}."""
        self._check(h)
        return self.span.express(jet_vector(h), self._limit(degree))

    def normal_form_vector(self, h: Jet, degree: Optional[int] = None) -> Dict[int, Coeff]:
        self._check(h)
        remainder, _ = self.span.reduce(jet_vector(h), self._limit(degree))
        return remainder

    def rank(self, degree: int) -> int:
        return self.span.rank(self._limit(degree))

    def quotient_dim(self, degree: int) -> int:
        """dim O/(I + M^{degree+1})."""
        return monomial_count(self.n_vars, degree) - self.rank(degree)

    def certified_power(self) -> Optional[int]:
        """Smallest d ≤ valid_degree with M^d ⊂ I + M^{d+1}, hence M^d ⊂ I."""
        for d in range(self.valid_degree + 1):
            if all(self.contains(Jet.monomial(alpha, 1, self.trunc), d)
                   for alpha in monomials_of_degree(self.n_vars, d)):
                return d
        return None

    def add_generator(self, g: Jet) -> bool:
        """Append g unless it already lies in the ideal (modulo M^{trunc+1})."""
        self._check(g)
        if g.is_zero() or self.contains(g, self.trunc):
            return False
        self.generators.append(g)
        if self._span is not None:
            self._add_multiples(len(self.generators) - 1, g)
        return True


# ---------------------------------------------------------------------------
# Named ideals
# ---------------------------------------------------------------------------

def maximal_ideal(n_vars: int, trunc: int) -> IdealData:
    return IdealData([Jet.variable(i, n_vars, trunc) for i in range(n_vars)])


def unit_ideal(n_vars: int, trunc: int) -> IdealData:
    return IdealData([Jet.constant(1, n_vars, trunc)])


def parse_ideal(texts: Sequence[str], n_vars: int, trunc: int) -> IdealData:
    return IdealData([parse_jet(t, trunc, n_vars) for t in texts], n_vars, trunc)


def ideal_power(ideal: IdealData, nu: int) -> IdealData:
    """Generators of I^ν: products of ν generators, zeros and repeats dropped."""
    n, trunc = ideal.n_vars, ideal.trunc
    if nu == 0:
        return unit_ideal(n, trunc)
    products: List[Jet] = []
    for combo in combinations_with_replacement(range(len(ideal.generators)), nu):
        p = Jet.constant(1, n, trunc)
        for j in combo:
            p = p * ideal.generators[j]
            if p.is_zero():
                break
        if not p.is_zero() and p not in products:
            products.append(p)
    return IdealData(products, n, trunc, ideal.valid_degree)


def membership_certificate(ideal: IdealData, h: Jet,
                           degree: Optional[int] = None) -> Optional[List[MembershipRecord]]:
    """Records {monomial, generator, coeff} with h ≡ Σ coeff·z^monomial·g_generator."""
    combo = ideal.express(h, degree)
    if combo is None:
        return None
    records = [MembershipRecord(monomial=list(m), generator=j, coeff=coeff_to_pair(c))
               for (m, j), c in combo.items()]
    records.sort(key=lambda r: (r.generator, sum(r.monomial), [-a for a in r.monomial]))
    return records


# ---------------------------------------------------------------------------
# Jacobian ideal and its invariants
# ---------------------------------------------------------------------------

def jacobian_ideal(f: Jet) -> IdealData:
    if f.is_constant():
        raise DegenerateInputError("the Jacobian ideal of a constant germ is zero")
    return IdealData([f.partial(i) for i in range(f.n_vars)], f.n_vars, f.trunc,
                     valid_degree=f.trunc - 1)


def milnor_number(f: Jet, jacobian: Optional[IdealData] = None) -> InvariantResult:
    """μ(f) = dim O/Jf, certified by the first power of M inside Jf."""
    J = jacobian or jacobian_ideal(f)
    d = J.certified_power()
    if d is None:
        reason = f"no power M^d with d ≤ {J.valid_degree} lies in Jf; raise trunc"
        logger.info(f"Milnor number inconclusive: {reason}")
        return InvariantResult(None, None, reason)
    mu = J.quotient_dim(d)
    if d + 1 <= J.valid_degree and J.quotient_dim(d + 1) != mu:
        reason = f"quotient dimensions at degrees {d} and {d + 1} disagree"
        logger.warning(f"Milnor number inconclusive: {reason}")
        return InvariantResult(None, d, reason)
    return InvariantResult(mu, d)


def determinacy_exponent(f: Jet, jacobian: Optional[IdealData] = None) -> InvariantResult:
    """Smallest d with M^d ⊂ Jf."""
    J = jacobian or jacobian_ideal(f)
    d = J.certified_power()
    if d is None:
        reason = f"M^d ⊄ Jf + M^(d+1) for every d ≤ {J.valid_degree}"
        return InvariantResult(None, None, reason)
    return InvariantResult(d, d)


# ---------------------------------------------------------------------------
# Derivations preserving an ideal and the module image I(f)
# ---------------------------------------------------------------------------

def _derivation_from_combo(combo, n_vars: int, trunc: int) -> Derivation:
    comps: List[Dict[Exponent, Coeff]] = [dict() for _ in range(n_vars)]
    for (m, i), c in combo.items():
        comps[i][m] = c
    return Derivation(tuple(Jet(n_vars, trunc, comp) for comp in comps))


def derivations_preserving(ideal: IdealData, degree: int) -> List[Derivation]:
    """Basis of homogeneous derivations Σ p_i ∂_i (deg p_i = degree) with v(I) ⊂ I.

    Computed as the kernel of v ↦ (v(g_j) mod I)_j, modulo M^{trunc}.
    """
    n, trunc = ideal.n_vars, ideal.trunc
    block = monomial_count(n, trunc)
    check_degree = trunc - 1
    kernel = SpanBasis()
    for m in monomials_of_degree(n, degree):
        mono = Jet.monomial(m, 1, trunc)
        for i in range(n):
            stacked: Dict[int, Coeff] = {}
            for j, g in enumerate(ideal.generators):
                image = mono * g.partial(i)
                for key, c in ideal.normal_form_vector(image, check_degree).items():
                    stacked[j * block + key] = c
            kernel.add(stacked, (m, i))
    return [_derivation_from_combo(combo, n, trunc) for combo in kernel.kernel]


def _check_ring(f: Jet, ideal: IdealData) -> None:
    if f.n_vars != ideal.n_vars:
        raise DimensionError(f"germ in {f.n_vars} variables, ideal in {ideal.n_vars}")
    if f.trunc != ideal.trunc:
        raise TruncationError(f"germ truncated at {f.trunc}, ideal at {ideal.trunc}")


def _max_derivation_degree(f: Jet) -> int:
    # a·v(f) with deg a = 2 must stay below trunc
    nonconstant = f - f.constant_term()
    return f.trunc - 2 - nonconstant.order()


def if_module_image(f: Jet, ideal: IdealData) -> IdealData:
    """I(f): the ideal of all a·v(f) with a ∈ M² and v a derivation preserving I."""
    _check_ring(f, ideal)
    n, trunc = f.n_vars, f.trunc
    image = IdealData([], n, trunc, valid_degree=trunc - 1)
    if f.is_constant():
        return image
    squares = [Jet.monomial(a, 1, trunc) for a in monomials_of_degree(n, 2)]
    for e in range(_max_derivation_degree(f) + 1):
        for v in derivations_preserving(ideal, e):
            vf = apply(v, f)
            if vf.is_zero():
                continue
            for a in squares:
                image.add_generator(a * vf)
    logger.debug(f"I(f) has {len(image.generators)} generators")
    return image


def nu_exponent(f: Jet, ideal: IdealData) -> InvariantResult:
    """Smallest ν with I^ν ⊂ I(f)."""
    _check_ring(f, ideal)
    if ideal.is_zero():
        raise DegenerateInputError("the zero ideal has no useful power inside I(f)")
    image = if_module_image(f, ideal)
    d = image.certified_power()
    if d is None:
        reason = f"I(f) contains no power M^d with d ≤ {image.valid_degree}"
        return InvariantResult(None, None, reason)
    if ideal.contains_unit():
        return InvariantResult(None, d, "I contains a unit, so no power of I lies in I(f) ⊂ M^2")
    for nu in range(d + 1):
        power = ideal_power(ideal, nu)
        if all(image.contains(p, d) for p in power.generators):
            return InvariantResult(nu, d)
    return InvariantResult(None, d, f"no ν ≤ {d} with I^ν ⊂ I(f)")


def derivation_basis_for_ideal(ideal: IdealData, f: Jet) -> List[Derivation]:
    """Linearly independent derivations a·v, a a monomial of degree ≥ 2, v ∈ Der(I) homogeneous."""
    _check_ring(f, ideal)
    n, trunc = f.n_vars, f.trunc
    block = monomial_count(n, trunc)
    seen = SpanBasis()
    basis: List[Derivation] = []
    if f.is_constant():
        return basis
    top = _max_derivation_degree(f) + 1
    for e in range(top + 1):
        for v in derivations_preserving(ideal, e):
            if apply(v, f).is_zero():
                continue
            for da in range(2, trunc - e + 1):
                for a in monomials_of_degree(n, da):
                    w = v.multiply(Jet.monomial(a, 1, trunc))
                    if w.is_zero() or apply(w, f).is_zero():
                        continue
                    vec = {}
                    for i, c in enumerate(w.components):
                        for key, value in jet_vector(c).items():
                            vec[i * block + key] = value
                    if seen.add(vec, len(basis)) is None:
                        basis.append(w)
    logger.debug(f"Derivation basis for the ideal has {len(basis)} elements")
    return basis


def jacobian_basis(f: Jet) -> List[Derivation]:
    """z^m ∂_i with deg m ≥ 2 and z^m ∂_i f nonzero at trunc."""
    n, trunc = f.n_vars, f.trunc
    basis = []
    for i in range(n):
        df = f.partial(i)
        if df.is_zero():
            continue
        for m in monomials_upto(n, trunc - df.order(), 2):
            basis.append(Derivation.along(i, Jet.monomial(m, 1, trunc)))
    return basis


# ---------------------------------------------------------------------------
# Right inverse
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RightInverseSolution:
    u: Derivation
    residual: Jet
    norm_estimate: NormEstimate
    failure_degree: Optional[int] = None

    @property
    def success(self) -> bool:
        return self.residual.is_zero()


def derivation_weight(v: Derivation, s) -> object:
    """Σ_i Σ_α |c_{i,α}|² Π s^{2α_j}/(α_j+1): squared L² norm without π^n s^{2n}."""
    s = to_rational(s)
    total = to_rational(0)
    for c in v.components:
        for alpha, value in c.coeffs.items():
            w = abs_squared(value)
            for a in alpha:
                w = w * s ** (2 * a) / (a + 1)
            total += w
    return total


class RightInverse:
    """Minimal weighted-L² solution u of u(f) = b, u in the span of ``basis``.

    With A the matrix of b ↦ u(f) on the basis and W the diagonal of squared
    L² norms, the solution is u = W⁻¹A*y with (A W⁻¹ A*) y = b. The normal
    matrix is eliminated once in the constructor.
    """

    def __init__(self, f: Jet, s: Scalar = "1/4", basis: Optional[Sequence[Derivation]] = None):
        if f.is_constant():
            raise DegenerateInputError("u(f) vanishes for every u when f is constant")
        self.f = f
        self.s = to_rational(s)
        if not self.s > 0:
            raise DegenerateInputError(f"least-squares radius must be positive, got {s}")
        self.basis = list(jacobian_basis(f) if basis is None else basis)
        self._columns: List[Tuple[Derivation, Dict[int, Coeff], Coeff]] = []
        for v in self.basis:
            image = apply(v, f)
            if image.is_zero():
                continue
            inv_weight = QQ_I(1 / derivation_weight(v, self.s), 0)
            self._columns.append((v, jet_vector(image), inv_weight))
        size = monomial_count(f.n_vars, f.trunc)
        rows: List[Dict[int, Coeff]] = [dict() for _ in range(size)]
        for _, vec, inv_weight in self._columns:
            items = list(vec.items())
            for r, a in items:
                row = rows[r]
                scaled = a * inv_weight
                for c, b in items:
                    row[c] = row.get(c, QQ_I.zero) + scaled * conj(b)
        rows = [{k: v for k, v in row.items() if v} for row in rows]
        self._system = LinearSystem(rows)
        logger.debug(f"Right inverse on {len(self._columns)} derivations, normal rank {self._system.rank}")

    def _check(self, b: Jet) -> None:
        if b.n_vars != self.f.n_vars:
            raise DimensionError(f"right-hand side in {b.n_vars} variables, germ in {self.f.n_vars}")
        if b.trunc != self.f.trunc:
            raise TruncationError(f"right-hand side truncated at {b.trunc}, germ at {self.f.trunc}")

    def in_image(self, b: Jet) -> bool:
        self._check(b)
        return self._system.is_consistent(jet_vector(b))

    def first_failing_degree(self, b: Jet) -> Optional[int]:
        if self.in_image(b):
            return None
        for d in range(int(b.order()), b.trunc + 1):
            if not self._system.is_consistent(jet_vector(b.truncated_at(d))):
                return d
        return b.trunc

    def _derivation(self, y: Dict[int, Coeff]) -> Derivation:
        n, trunc = self.f.n_vars, self.f.trunc
        u = Derivation.zero(n, trunc)
        for v, vec, inv_weight in self._columns:
            x = QQ_I.zero
            for r, a in vec.items():
                if r in y:
                    x += conj(a) * y[r]
            if x:
                u = u + v.scale(x * inv_weight)
        return u

    def solve(self, b: Jet) -> RightInverseSolution:
        self._check(b)
        failure = self.first_failing_degree(b)
        target = b if failure is None else b.truncated_at(failure - 1)
        if failure is not None:
            logger.warning(f"Right-hand side leaves the image of u ↦ u(f) at degree {failure}")
        y = self._system.solve(jet_vector(target)) or {}
        u = self._derivation(y)
        residual = b - apply(u, self.f)
        estimate = derivation_norm_bound(u, rational_to_float(self.s))
        return RightInverseSolution(u, residual, estimate, failure)

    __call__ = solve

    def inverse_norm_bound(self, k: int, tau: float, grid: Sequence[float]) -> NormEstimate:
        """Sampled N^k_tau of j: max of |j(z^α)|_s σ^k / (s+σ)^{|α|} with σ = tau - s."""
        n, trunc = self.f.n_vars, self.f.trunc
        best = 0.0
        radii = [s for s in grid if 0 < s < tau]
        for alpha in monomials_upto(n, trunc):
            mono = Jet.monomial(alpha, 1, trunc)
            if not self.in_image(mono):
                continue
            u = self.solve(mono).u
            for s in radii:
                sigma = tau - s
                norm = sum(majorant_norm(c, s) for c in u.components)
                best = max(best, norm * sigma ** k / tau ** sum(alpha))
        return NormEstimate(k=k, tau=tau, C=round_up(best))


def right_inverse(f: Jet, b: Jet, s: Scalar = "1/4",
                  basis: Optional[Sequence[Derivation]] = None) -> RightInverseSolution:
    return RightInverse(f, s, basis).solve(b)
