"""
Truncated multivariate power series (jets) over the Gaussian rationals.

A ``Jet`` stores its coefficients in a dictionary keyed by exponent tuples,
the same layout as a sparse polynomial:

    Jet(2, 4, {(2, 0): 1, (1, 1): 3})  ->  z1^2 + 3*z1*z2

Every jet carries its truncation degree; terms of total degree above it are
dropped, and operations between jets of different truncation are refused.
"""

from __future__ import annotations

import logging
import math
import operator
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from sympy import Add, I, Symbol, expand
from sympy.core.sympify import SympifyError
from sympy.parsing.sympy_parser import (
    convert_xor,
    implicit_multiplication,
    parse_expr,
    standard_transformations,
)
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.polyerrors import CoercionFailed

from .exceptions import DimensionError, DomainError, ParseError, TruncationError

logger = logging.getLogger(__name__)

Exponent = Tuple[int, ...]
Coeff = Any  # element of QQ_I
Scalar = Union[int, Fraction, str, Coeff]

ZERO = QQ_I.zero
ONE = QQ_I.one

_TRANSFORMATIONS = standard_transformations + (implicit_multiplication, convert_xor)
_VAR_RE = re.compile(r"(?<![A-Za-z_0-9])z(\d*)(?![A-Za-z_])")


# ---------------------------------------------------------------------------
# Coefficients
# ---------------------------------------------------------------------------

def to_rational(value) -> Any:
    """Convert an int, Fraction, float or rational string to an element of QQ."""
    if QQ.of_type(value):
        return value
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, int):
        return QQ(value)
    if isinstance(value, (Fraction, float, str)):
        try:
            fr = Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"not a rational number: {value!r}") from exc
        return QQ(fr.numerator, fr.denominator)
    raise ParseError(f"not a rational number: {value!r}")


def to_coeff(value: Scalar, imag: Scalar = 0) -> Coeff:
    """Build an exact Gaussian-rational coefficient."""
    if QQ_I.of_type(value) and imag == 0:
        return value
    return QQ_I(to_rational(value), to_rational(imag))


def conj(c: Coeff) -> Coeff:
    return QQ_I(c.x, -c.y)


def abs_squared(c: Coeff) -> Any:
    """|c|^2 as an element of QQ."""
    return c.x * c.x + c.y * c.y


def rational_to_float(q) -> float:
    """Plain float of a QQ element, whichever integer backend sympy runs on."""
    return int(q.numerator) / int(q.denominator)


def to_complex(c: Coeff) -> complex:
    return complex(rational_to_float(c.x), rational_to_float(c.y))


def rational_to_str(q) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def coeff_to_pair(c: Coeff) -> Tuple[str, str]:
    return rational_to_str(c.x), rational_to_str(c.y)


def coeff_from_pair(pair: Sequence[str]) -> Coeff:
    if len(pair) != 2:
        raise ParseError(f"coefficient must be a [re, im] pair, got {pair!r}")
    return to_coeff(str(pair[0]), str(pair[1]))


def format_coeff(c: Coeff) -> str:
    re_s, im_s = coeff_to_pair(c)
    if not c.y:
        return re_s
    im_part = "i" if im_s == "1" else "-i" if im_s == "-1" else f"({im_s})i"
    if not c.x:
        return im_part
    return f"({re_s}+{im_part})"


# ---------------------------------------------------------------------------
# Monomials in graded-lex order
# ---------------------------------------------------------------------------

def grlex_key(alpha: Exponent) -> Tuple[int, Tuple[int, ...]]:
    return sum(alpha), tuple(-a for a in alpha)


@lru_cache(maxsize=None)
def monomials_of_degree(n_vars: int, degree: int) -> Tuple[Exponent, ...]:
    if n_vars == 1:
        return ((degree,),)
    out: List[Exponent] = []
    for first in range(degree, -1, -1):
        for rest in monomials_of_degree(n_vars - 1, degree - first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def monomials_upto(n_vars: int, degree: int, start: int = 0) -> Tuple[Exponent, ...]:
    out: List[Exponent] = []
    for d in range(start, degree + 1):
        out.extend(monomials_of_degree(n_vars, d))
    return tuple(out)


@lru_cache(maxsize=None)
def monomial_index(n_vars: int, degree: int) -> Dict[Exponent, int]:
    """Position of each monomial of degree ≤ ``degree`` in graded-lex order."""
    return {alpha: k for k, alpha in enumerate(monomials_upto(n_vars, degree))}


def add_exponents(a: Exponent, b: Exponent) -> Exponent:
    return tuple(map(operator.add, a, b))


def format_monomial(alpha: Exponent) -> str:
    n = len(alpha)
    parts = []
    for k, e in enumerate(alpha):
        if e == 0:
            continue
        name = "z" if n == 1 else f"z{k + 1}"
        parts.append(name if e == 1 else f"{name}^{e}")
    return "*".join(parts)


# ---------------------------------------------------------------------------
# Jets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Jet:
    n_vars: int
    trunc: int
    coeffs: Mapping[Exponent, Coeff] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_vars < 1:
            raise DimensionError(f"n_vars must be positive, got {self.n_vars}")
        if self.trunc < 0:
            raise TruncationError(f"trunc must be nonnegative, got {self.trunc}")
        clean: Dict[Exponent, Coeff] = {}
        for alpha, c in self.coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n_vars:
                raise DimensionError(f"exponent {alpha} does not have {self.n_vars} entries")
            if any(a < 0 for a in alpha):
                raise DomainError(f"negative exponent {alpha}")
            if sum(alpha) > self.trunc:
                continue
            c = to_coeff(c)
            if c:
                clean[alpha] = clean[alpha] + c if alpha in clean else c
        object.__setattr__(self, "coeffs", {k: v for k, v in clean.items() if v})

    @classmethod
    def _make(cls, n_vars: int, trunc: int, coeffs: Dict[Exponent, Coeff]) -> "Jet":
        # trusted constructor: keys in range, values nonzero
        obj = object.__new__(cls)
        object.__setattr__(obj, "n_vars", n_vars)
        object.__setattr__(obj, "trunc", trunc)
        object.__setattr__(obj, "coeffs", coeffs)
        return obj

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, n_vars: int, trunc: int) -> "Jet":
        return cls(n_vars, trunc)

    @classmethod
    def constant(cls, value: Scalar, n_vars: int, trunc: int) -> "Jet":
        return cls(n_vars, trunc, {(0,) * n_vars: to_coeff(value)})

    @classmethod
    def variable(cls, i: int, n_vars: int, trunc: int) -> "Jet":
        if not 0 <= i < n_vars:
            raise DimensionError(f"variable index {i} out of range for {n_vars} variables")
        alpha = tuple(1 if k == i else 0 for k in range(n_vars))
        return cls(n_vars, trunc, {alpha: ONE})

    @classmethod
    def monomial(cls, alpha: Exponent, value: Scalar, trunc: int) -> "Jet":
        return cls(len(alpha), trunc, {tuple(alpha): to_coeff(value)})

    # -- inspection ---------------------------------------------------------

    def terms(self) -> List[Tuple[Exponent, Coeff]]:
        return sorted(self.coeffs.items(), key=lambda item: grlex_key(item[0]))

    def order(self) -> Union[int, float]:
        if not self.coeffs:
            return math.inf
        return min(sum(alpha) for alpha in self.coeffs)

    def degree(self) -> int:
        if not self.coeffs:
            return -1
        return max(sum(alpha) for alpha in self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return all(not any(alpha) for alpha in self.coeffs)

    def constant_term(self) -> Coeff:
        return self.coeffs.get((0,) * self.n_vars, ZERO)

    def coefficient(self, alpha: Exponent) -> Coeff:
        return self.coeffs.get(tuple(alpha), ZERO)

    def homogeneous(self, degree: int) -> "Jet":
        return Jet._make(self.n_vars, self.trunc,
                         {a: c for a, c in self.coeffs.items() if sum(a) == degree})

    def truncated_at(self, degree: int) -> "Jet":
        """Drop the terms above ``degree``; the truncation parameter is kept."""
        return Jet._make(self.n_vars, self.trunc,
                         {a: c for a, c in self.coeffs.items() if sum(a) <= degree})

    def with_trunc(self, trunc: int) -> "Jet":
        if trunc > self.trunc:
            raise TruncationError(f"cannot raise truncation from {self.trunc} to {trunc}")
        return Jet._make(self.n_vars, trunc,
                         {a: c for a, c in self.coeffs.items() if sum(a) <= trunc})

    def lifted_to(self, trunc: int) -> "Jet":
        """The same terms in the ring truncated at ``trunc``, the missing tail read as zero."""
        if trunc < self.trunc:
            raise TruncationError(f"cannot lower truncation from {self.trunc} to {trunc}; use with_trunc")
        return Jet._make(self.n_vars, trunc, dict(self.coeffs))

    def evaluate(self, point: Sequence[complex]) -> complex:
        if len(point) != self.n_vars:
            raise DimensionError(f"point has {len(point)} coordinates, expected {self.n_vars}")
        total = 0j
        for alpha, c in self.coeffs.items():
            term = to_complex(c)
            for z, e in zip(point, alpha):
                if e:
                    term *= complex(z) ** e
            total += term
        return total

    # -- ring structure -----------------------------------------------------

    def _check(self, other: "Jet") -> None:
        if self.n_vars != other.n_vars:
            raise DimensionError(f"jets in {self.n_vars} and {other.n_vars} variables")
        if self.trunc != other.trunc:
            raise TruncationError(f"jets truncated at {self.trunc} and {other.trunc}")

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            self._check(other)
            return other
        return Jet.constant(other, self.n_vars, self.trunc)

    def __add__(self, other) -> "Jet":
        other = self._coerce(other)
        out = dict(self.coeffs)
        for alpha, c in other.coeffs.items():
            s = out[alpha] + c if alpha in out else c
            if s:
                out[alpha] = s
            else:
                out.pop(alpha, None)
        return Jet._make(self.n_vars, self.trunc, out)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet._make(self.n_vars, self.trunc, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other) -> "Jet":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Jet":
        return self._coerce(other) - self

    def scale(self, value: Scalar) -> "Jet":
        c = to_coeff(value)
        if not c:
            return Jet.zero(self.n_vars, self.trunc)
        return Jet._make(self.n_vars, self.trunc, {a: v * c for a, v in self.coeffs.items()})

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return self.scale(other)
        self._check(other)
        right = sorted(((sum(b), b, c) for b, c in other.coeffs.items()), key=lambda t: t[0])
        out: Dict[Exponent, Coeff] = {}
        for a, ca in self.coeffs.items():
            room = self.trunc - sum(a)
            for db, b, cb in right:
                if db > room:
                    break
                key = add_exponents(a, b)
                prod = ca * cb
                out[key] = out[key] + prod if key in out else prod
        return Jet._make(self.n_vars, self.trunc, {k: v for k, v in out.items() if v})

    def __rmul__(self, other) -> "Jet":
        return self.scale(other)

    def __pow__(self, exponent: int) -> "Jet":
        if not isinstance(exponent, int) or exponent < 0:
            raise DomainError(f"jets only take nonnegative integer powers, got {exponent!r}")
        result = Jet.constant(1, self.n_vars, self.trunc)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def partial(self, i: int) -> "Jet":
        """Partial derivative in the variable with 0-based index ``i``.

        The result keeps ``trunc`` but is only meaningful up to degree trunc-1.
        """
        if not 0 <= i < self.n_vars:
            raise DimensionError(f"variable index {i} out of range for {self.n_vars} variables")
        out: Dict[Exponent, Coeff] = {}
        for alpha, c in self.coeffs.items():
            e = alpha[i]
            if e:
                out[alpha[:i] + (e - 1,) + alpha[i + 1:]] = c * e
        return Jet._make(self.n_vars, self.trunc, out)

    def compose(self, phi: Union["JetMap", Sequence["Jet"]]) -> "Jet":
        """Return self∘phi truncated at ``trunc``."""
        if not isinstance(phi, JetMap):
            phi = JetMap(tuple(phi))
        if len(phi.components) != self.n_vars:
            raise DimensionError(
                f"map has {len(phi.components)} components, jet has {self.n_vars} variables")
        if phi.trunc != self.trunc:
            raise TruncationError(f"jet truncated at {self.trunc}, map at {phi.trunc}")
        m = phi.n_vars
        cache: Dict[Exponent, Jet] = {(0,) * self.n_vars: Jet.constant(1, m, self.trunc)}

        def power_product(alpha: Exponent) -> Jet:
            if alpha in cache:
                return cache[alpha]
            j = max(k for k, e in enumerate(alpha) if e)
            prev = alpha[:j] + (alpha[j] - 1,) + alpha[j + 1:]
            value = power_product(prev) * phi.components[j]
            cache[alpha] = value
            return value

        out: Dict[Exponent, Coeff] = {}
        for alpha, c in self.terms():
            for beta, v in power_product(alpha).coeffs.items():
                prod = c * v
                out[beta] = out[beta] + prod if beta in out else prod
        return Jet._make(m, self.trunc, {k: v for k, v in out.items() if v})

    # -- comparison and display --------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Jet):
            return NotImplemented
        return (self.n_vars == other.n_vars and self.trunc == other.trunc
                and self.coeffs == other.coeffs)

    __hash__ = None

    def __str__(self) -> str:
        return format_jet(self)

    def __repr__(self) -> str:
        return f"Jet(n_vars={self.n_vars}, trunc={self.trunc}, {format_jet(self)!r})"


@dataclass(frozen=True, eq=False)
class JetMap:
    """A germ of map (C^n, 0) -> (C^n, 0) given by jets without constant term."""

    components: Tuple[Jet, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise DimensionError("a jet map needs at least one component")
        n, trunc = comps[0].n_vars, comps[0].trunc
        for k, c in enumerate(comps):
            if c.n_vars != n:
                raise DimensionError("map components live in different rings")
            if c.trunc != trunc:
                raise TruncationError("map components carry different truncations")
            if c.constant_term():
                raise DomainError(f"component {k + 1} has a nonzero constant term")
        if len(comps) != n:
            raise DimensionError(f"map has {len(comps)} components for {n} variables")
        object.__setattr__(self, "components", comps)

    @property
    def n_vars(self) -> int:
        return self.components[0].n_vars

    @property
    def trunc(self) -> int:
        return self.components[0].trunc

    @classmethod
    def identity(cls, n_vars: int, trunc: int) -> "JetMap":
        return cls(tuple(Jet.variable(i, n_vars, trunc) for i in range(n_vars)))

    def compose(self, other: "JetMap") -> "JetMap":
        """self∘other."""
        return JetMap(tuple(c.compose(other) for c in self.components))

    def with_trunc(self, trunc: int) -> "JetMap":
        return JetMap(tuple(c.with_trunc(trunc) for c in self.components))

    def is_identity(self) -> bool:
        return self == JetMap.identity(self.n_vars, self.trunc)

    def __eq__(self, other) -> bool:
        if not isinstance(other, JetMap):
            return NotImplemented
        return self.components == other.components

    __hash__ = None

    def __str__(self) -> str:
        return "(" + ", ".join(format_jet(c) for c in self.components) + ")"


# ---------------------------------------------------------------------------
# Operations with the names used throughout the library
# ---------------------------------------------------------------------------

def jet_add(f: Jet, g: Jet) -> Jet:
    return f + g


def jet_mul(f: Jet, g: Jet) -> Jet:
    return f * g


def jet_scale(f: Jet, c: Scalar) -> Jet:
    return f.scale(c)


def jet_compose(f: Jet, phi: Union[JetMap, Sequence[Jet]]) -> Jet:
    return f.compose(phi)


def jet_order(f: Jet) -> Union[int, float]:
    return f.order()


def jet_derive(f: Jet, i: int) -> Jet:
    return f.partial(i)


# ---------------------------------------------------------------------------
# Text syntax
# ---------------------------------------------------------------------------

def format_jet(f: Jet) -> str:
    if f.is_zero():
        return "0"
    pieces = []
    for alpha, c in f.terms():
        mono = format_monomial(alpha)
        cs = format_coeff(c)
        if not mono:
            pieces.append(cs)
        elif cs == "1":
            pieces.append(mono)
        elif cs == "-1":
            pieces.append(f"-{mono}")
        else:
            pieces.append(f"{cs}*{mono}")
    return " + ".join(pieces).replace("+ -", "- ")


def expression_terms(expr, symbols: Sequence[Symbol]) -> Dict[Tuple[int, ...], Coeff]:
    """Split a sympy expression into {exponent tuple: QQ_I coefficient}.

    Exponents may be negative (the circle ring uses this for Fourier indices);
    callers check the range they accept.
    """
    out: Dict[Tuple[int, ...], Coeff] = {}
    for term in Add.make_args(expand(expr)):
        if term.is_zero:
            continue
        c, rest = term.as_independent(*symbols, as_Add=False)
        alpha = [0] * len(symbols)
        for base, e in rest.as_powers_dict().items():
            if base == 1:
                continue
            if base not in symbols:
                raise ParseError(f"unexpected factor {base} in {term}")
            if not e.is_Integer:
                raise ParseError(f"non-integer exponent in {term}")
            alpha[symbols.index(base)] += int(e)
        try:
            value = QQ_I.from_sympy(c)
        except CoercionFailed as exc:
            raise ParseError(f"coefficient {c} is not a Gaussian rational") from exc
        key = tuple(alpha)
        out[key] = out[key] + value if key in out else value
    return {k: v for k, v in out.items() if v}


def parse_expression(text: str, local_dict: Dict[str, Any]):
    try:
        return parse_expr(text, local_dict=local_dict, transformations=_TRANSFORMATIONS)
    except (SyntaxError, TypeError, ValueError, SympifyError) as exc:
        raise ParseError(f"cannot parse {text!r}: {exc}") from exc


def parse_jet(text: str, trunc: int, n_vars: Optional[int] = None) -> Jet:
    """Read a jet from text such as ``"z1^2 + 3*z1*z2 - (1/2)i*z2^3"``.

    A bare ``z`` denotes the single variable of a one-variable ring; ``z1``,
    ``z2``, ... index the variables otherwise.
    """
    names = set(_VAR_RE.findall(text))
    if "" in names:
        if len(names) > 1:
            raise ParseError("do not mix 'z' with indexed variables 'z1', 'z2', ...")
        if n_vars not in (None, 1):
            raise DimensionError("bare 'z' is only allowed in one variable")
        n = 1
        symbols = [Symbol("z")]
    else:
        indices = [int(k) for k in names]
        if any(k < 1 for k in indices):
            raise ParseError("variables are numbered from z1")
        top = max(indices, default=1)
        n = n_vars if n_vars is not None else top
        if top > n:
            raise DimensionError(f"z{top} used in a ring with {n} variables")
        symbols = [Symbol(f"z{k + 1}") for k in range(n)]
    local = {s.name: s for s in symbols}
    local.update({"i": I, "I": I})
    expr = parse_expression(text, local)
    coeffs = expression_terms(expr, symbols)
    if any(a < 0 for alpha in coeffs for a in alpha):
        raise ParseError(f"negative powers are not jets: {text!r}")
    return Jet(n, trunc, coeffs)


# ---------------------------------------------------------------------------
# Canonical records
# ---------------------------------------------------------------------------

def jet_to_record(f: Jet) -> Dict[str, Any]:
    return {
        "n_vars": f.n_vars,
        "trunc": f.trunc,
        "terms": [[list(alpha), list(coeff_to_pair(c))] for alpha, c in f.terms()],
    }


def jet_from_record(record: Mapping[str, Any]) -> Jet:
    try:
        n_vars = int(record["n_vars"])
        trunc = int(record["trunc"])
        coeffs = {tuple(int(a) for a in alpha): coeff_from_pair(pair)
                  for alpha, pair in record["terms"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed jet record: {exc}") from exc
    return Jet(n_vars, trunc, coeffs)


def map_to_record(phi: JetMap) -> List[Dict[str, Any]]:
    return [jet_to_record(c) for c in phi.components]


def map_from_record(records: Sequence[Mapping[str, Any]]) -> JetMap:
    return JetMap(tuple(jet_from_record(r) for r in records))


# ---------------------------------------------------------------------------
# Random jets for property suites and the bench command
# ---------------------------------------------------------------------------

def random_rational(rng, max_num: int = 5, max_den: int = 4) -> Any:
    num = int(rng.integers(-max_num, max_num + 1))
    den = int(rng.integers(1, max_den + 1))
    return QQ(num, den)


def random_jet(rng, n_vars: int, trunc: int, min_order: int = 0, density: float = 0.5,
               max_num: int = 5, max_den: int = 4, gaussian: bool = False,
               max_degree: Optional[int] = None) -> Jet:
    """Jet with random small rational coefficients on a random set of monomials."""
    top = trunc if max_degree is None else min(trunc, max_degree)
    coeffs: Dict[Exponent, Coeff] = {}
    for alpha in monomials_upto(n_vars, top, min_order):
        if rng.random() >= density:
            continue
        im = random_rational(rng, max_num, max_den) if gaussian else QQ(0)
        coeffs[alpha] = QQ_I(random_rational(rng, max_num, max_den), im)
    return Jet(n_vars, trunc, coeffs)
