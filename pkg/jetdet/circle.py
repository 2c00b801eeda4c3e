"""
Germs along the circle r = 0: series Σ a_{m,n} r^m e^{inθ}, truncated in r and
band-limited in θ.

Only derivations a(r, θ)∂_r are used here. For f = r^k the infinitesimal
action is a ↦ k r^{k-1} a, which is inverted exactly by a shift in r, so the
normalization of r^k + r^{k+1}g needs no linear algebra.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
from sympy import I, Symbol
from sympy.polys.domains import QQ

from . import config
from .exceptions import BandOverflowError, DimensionError, DomainError, ParseError, TruncationError
from .jet import (
    Coeff,
    Scalar,
    coeff_from_pair,
    coeff_to_pair,
    expression_terms,
    format_coeff,
    parse_expression,
    rational_to_float,
    to_coeff,
)
from .scale import _check_radius, round_up
from .schemas import FourierRecord

logger = logging.getLogger(__name__)

Key = Tuple[int, int]


@dataclass(frozen=True, eq=False)
class FourierJet:
    trunc_r: int
    band: int
    coeffs: Mapping[Key, Coeff] = field(default_factory=dict)

    def __post_init__(self):
        if self.trunc_r < 0:
            raise TruncationError(f"trunc_r must be nonnegative, got {self.trunc_r}")
        if self.band < 0:
            raise DomainError(f"band must be nonnegative, got {self.band}")
        clean: Dict[Key, Coeff] = {}
        for (m, n), c in self.coeffs.items():
            m, n = int(m), int(n)
            if m < 0:
                raise DomainError(f"negative power of r: {m}")
            if abs(n) > self.band:
                raise BandOverflowError(n, self.band)
            if m > self.trunc_r:
                continue
            c = to_coeff(c)
            if c:
                clean[(m, n)] = clean[(m, n)] + c if (m, n) in clean else c
        object.__setattr__(self, "coeffs", {k: v for k, v in clean.items() if v})

    @classmethod
    def _make(cls, trunc_r: int, band: int, coeffs: Dict[Key, Coeff]) -> "FourierJet":
        obj = object.__new__(cls)
        object.__setattr__(obj, "trunc_r", trunc_r)
        object.__setattr__(obj, "band", band)
        object.__setattr__(obj, "coeffs", coeffs)
        return obj

    @classmethod
    def zero(cls, trunc_r: int, band: int) -> "FourierJet":
        return cls(trunc_r, band)

    @classmethod
    def monomial(cls, m: int, n: int, value: Scalar, trunc_r: int, band: int) -> "FourierJet":
        """value·r^m e^{inθ}."""
        return cls(trunc_r, band, {(m, n): value})

    @classmethod
    def r_power(cls, m: int, trunc_r: int, band: int) -> "FourierJet":
        return cls.monomial(m, 0, 1, trunc_r, band)

    def terms(self) -> List[Tuple[Key, Coeff]]:
        return sorted(self.coeffs.items())

    def is_zero(self) -> bool:
        return not self.coeffs

    def order_r(self) -> Union[int, float]:
        if not self.coeffs:
            return float("inf")
        return min(m for m, _ in self.coeffs)

    def band_used(self) -> int:
        return max((abs(n) for _, n in self.coeffs), default=0)

    def with_band(self, band: int) -> "FourierJet":
        return FourierJet(self.trunc_r, band, self.coeffs)

    def with_trunc_r(self, trunc_r: int) -> "FourierJet":
        """Drop powers of r above ``trunc_r``, or read the missing tail as zero when raising it."""
        return FourierJet(trunc_r, self.band, self.coeffs)

    def _check(self, other: "FourierJet") -> None:
        if self.trunc_r != other.trunc_r:
            raise TruncationError(f"circle jets truncated at r^{self.trunc_r} and r^{other.trunc_r}")
        if self.band != other.band:
            raise DimensionError(f"circle jets with bands {self.band} and {other.band}")

    def _coerce(self, other) -> "FourierJet":
        if isinstance(other, FourierJet):
            self._check(other)
            return other
        return FourierJet.monomial(0, 0, other, self.trunc_r, self.band)

    def __add__(self, other) -> "FourierJet":
        other = self._coerce(other)
        out = dict(self.coeffs)
        for key, c in other.coeffs.items():
            s = out[key] + c if key in out else c
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return FourierJet._make(self.trunc_r, self.band, out)

    __radd__ = __add__

    def __neg__(self) -> "FourierJet":
        return FourierJet._make(self.trunc_r, self.band, {k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other) -> "FourierJet":
        return self + (-self._coerce(other))

    def scale(self, value: Scalar) -> "FourierJet":
        c = to_coeff(value)
        return FourierJet._make(self.trunc_r, self.band,
                                {k: v * c for k, v in self.coeffs.items() if v * c})

    def __mul__(self, other) -> "FourierJet":
        if not isinstance(other, FourierJet):
            return self.scale(other)
        self._check(other)
        out: Dict[Key, Coeff] = {}
        for (m1, n1), a in self.coeffs.items():
            for (m2, n2), b in other.coeffs.items():
                m = m1 + m2
                if m > self.trunc_r:
                    continue
                n = n1 + n2
                if abs(n) > self.band:
                    raise BandOverflowError(n, self.band)
                prod = a * b
                out[(m, n)] = out[(m, n)] + prod if (m, n) in out else prod
        return FourierJet._make(self.trunc_r, self.band, {k: v for k, v in out.items() if v})

    def __rmul__(self, other) -> "FourierJet":
        return self.scale(other)

    def __pow__(self, exponent: int) -> "FourierJet":
        if exponent < 0:
            raise DomainError("circle jets only take nonnegative powers")
        result = FourierJet.monomial(0, 0, 1, self.trunc_r, self.band)
        for _ in range(exponent):
            result = result * self
        return result

    def d_r(self) -> "FourierJet":
        return FourierJet._make(self.trunc_r, self.band,
                                {(m - 1, n): c * m for (m, n), c in self.coeffs.items() if m})

    def d_theta(self) -> "FourierJet":
        i = to_coeff(0, 1)
        return FourierJet._make(self.trunc_r, self.band,
                                {(m, n): c * i * n for (m, n), c in self.coeffs.items() if n})

    def shift_r(self, shift: int) -> "FourierJet":
        """Multiply by r^shift; a negative shift divides and requires order_r ≥ -shift."""
        if shift < 0 and self.order_r() < -shift:
            raise DomainError(f"cannot divide a series of r-order {self.order_r()} by r^{-shift}")
        return FourierJet._make(self.trunc_r, self.band,
                                {(m + shift, n): c for (m, n), c in self.coeffs.items()
                                 if m + shift <= self.trunc_r})

    def __eq__(self, other) -> bool:
        if not isinstance(other, FourierJet):
            return NotImplemented
        return (self.trunc_r == other.trunc_r and self.band == other.band
                and self.coeffs == other.coeffs)

    __hash__ = None

    def __str__(self) -> str:
        return format_fourier_jet(self)


def format_fourier_jet(F: FourierJet) -> str:
    if F.is_zero():
        return "0"
    pieces = []
    for (m, n), c in F.terms():
        factors = []
        if m:
            factors.append("r" if m == 1 else f"r^{m}")
        if n:
            factors.append(f"e({n})")
        cs = format_coeff(c)
        if not factors:
            pieces.append(cs)
        elif cs == "1":
            pieces.append("*".join(factors))
        else:
            pieces.append("*".join([cs] + factors))
    return " + ".join(pieces).replace("+ -", "- ")


def parse_fourier_jet(text: str, trunc_r: int, band: Optional[int] = None) -> FourierJet:
    """Read ``"r^2*e(3) + (1/2)*r"``; e(n) stands for e^{inθ}."""
    r, w = Symbol("r"), Symbol("w")
    local = {"r": r, "e": lambda n: w ** n, "i": I, "I": I}
    terms = expression_terms(parse_expression(text, local), [r, w])
    if any(m < 0 for m, _ in terms):
        raise ParseError(f"negative powers of r are not allowed: {text!r}")
    if band is None:
        band = max((abs(n) for _, n in terms), default=0)
    return FourierJet(trunc_r, band, terms)


def fourier_to_record(F: FourierJet) -> FourierRecord:
    return FourierRecord(trunc_r=F.trunc_r, band=F.band,
                         terms=[((m, n), coeff_to_pair(c)) for (m, n), c in F.terms()])


def fourier_from_record(record: FourierRecord) -> FourierJet:
    return FourierJet(record.trunc_r, record.band,
                      {(m, n): coeff_from_pair(pair) for (m, n), pair in record.terms})


def circle_majorant_norm(F: FourierJet, s: float) -> float:
    """Σ |a_{m,n}| s^m."""
    s = _check_radius(s)
    if F.is_zero():
        return 0.0
    moduli = np.array([np.hypot(rational_to_float(c.x), rational_to_float(c.y)) for c in F.coeffs.values()])
    powers = np.array([float(m) for m, _ in F.coeffs])
    return round_up(np.sum(moduli * np.power(s, powers)))


def compose_r(F: FourierJet, psi: FourierJet) -> FourierJet:
    """F(ψ(r, θ), θ): substitute r ↦ ψ with ψ of r-order ≥ 1."""
    F._coerce(psi)
    if psi.order_r() < 1:
        raise DomainError("substitution r ↦ ψ needs ψ of r-order ≥ 1")
    by_power: Dict[int, Dict[Key, Coeff]] = {}
    for (m, n), c in F.coeffs.items():
        by_power.setdefault(m, {})[(0, n)] = c
    result = FourierJet.zero(F.trunc_r, F.band)
    power = FourierJet.monomial(0, 0, 1, F.trunc_r, F.band)
    for m in range(max(by_power, default=-1) + 1):
        if m:
            power = power * psi
        if m in by_power:
            result = result + FourierJet._make(F.trunc_r, F.band, by_power[m]) * power
    return result


def _exp_dr(a: FourierJet, F: FourierJet) -> FourierJet:
    """e^{a∂_r} F for a of r-order ≥ 2."""
    result = F
    term = F
    for j in range(1, F.trunc_r + 2):
        term = (a * term.d_r()).scale(QQ(1, j))
        if term.is_zero():
            break
        result = result + term
    return result


def binomial_root_substitution(k: int, g: FourierJet, trunc_r: Optional[int] = None) -> FourierJet:
    """r·(1 + r g)^{1/k} expanded by the binomial series."""
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    trunc_r = g.trunc_r if trunc_r is None else trunc_r
    rg = FourierJet(trunc_r, g.band, g.coeffs).shift_r(1)
    total = FourierJet.monomial(0, 0, 1, trunc_r, g.band)
    term = total
    binom = QQ(1)
    for j in range(1, trunc_r):
        binom = binom * (QQ(1, k) - (j - 1)) / j
        term = term * rg
        if term.is_zero():
            break
        total = total + term.scale(binom)
    return total.shift_r(1)


@dataclass(frozen=True, eq=False)
class CircleResult:
    k: int
    g: FourierJet
    steps: Tuple[FourierJet, ...]  # a_n of u_n = a_n ∂_r
    phi: FourierJet  # the substitution r ↦ phi(r, θ)
    residual: FourierJet

    @property
    def verified(self) -> bool:
        return self.residual.is_zero()


def working_band(g: FourierJet, trunc_r: int) -> int:
    factor = config.CIRCLE_BAND_FACTOR or trunc_r
    return max(g.band, g.band_used() * factor)


def circle_normalize(k: int, g: FourierJet, trunc_r: Optional[int] = None,
                     band: Optional[int] = None) -> CircleResult:
    """Substitution r ↦ phi(r, θ) with phi^k = r^k + r^{k+1} g."""
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    trunc_r = g.trunc_r if trunc_r is None else trunc_r
    # phi^k modulo r^{trunc_r+1} leaves the top k-1 powers of phi free
    work = trunc_r + k - 1
    band = working_band(g, work) if band is None else band
    g = FourierJet(trunc_r, band, g.coeffs)
    f = FourierJet.r_power(k, work, band)
    b = g.with_trunc_r(work).shift_r(k + 1)
    steps: List[FourierJet] = []
    for n in range(work + 1):
        if b.is_zero():
            break
        # u(f) = a·k r^{k-1} = b
        a = b.shift_r(-(k - 1)).scale(QQ(1, k))
        steps.append(a)
        logger.debug(f"Circle step {n}: r-order of b is {b.order_r()}")
        b = _exp_dr(-a, f + b) - f
    identity = FourierJet.r_power(1, work, band)
    phi = identity
    for a in steps:
        phi = compose_r(_exp_dr(a, identity), phi)
    phi = phi.with_trunc_r(trunc_r)
    residual = compose_r(f.with_trunc_r(trunc_r), phi) - (f.with_trunc_r(trunc_r) + g.shift_r(k + 1))
    logger.info(f"Circle normalization with k = {k} took {len(steps)} steps")
    return CircleResult(k, g, tuple(steps), phi, residual)


def matches_oracle(result: CircleResult) -> bool:
    """phi equals r(1 + rg)^{1/k} coefficientwise."""
    return result.phi == binomial_root_substitution(result.k, result.g)
