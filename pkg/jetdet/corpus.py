"""
Germ corpus for the bench command and the iteration tests.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

from sympy.polys.domains import QQ, QQ_I

from .jet import Jet, monomials_upto, parse_jet


@dataclass(frozen=True)
class CorpusGerm:
    name: str
    expression: str
    n_vars: int
    trunc: int

    def jet(self) -> Jet:
        return parse_jet(self.expression, self.trunc, self.n_vars)


def a_series(max_k: int = 4) -> List[CorpusGerm]:
    """A_k: z^{k+1}."""
    return [CorpusGerm(f"A{k}", f"z^{k + 1}", 1, k + 5) for k in range(1, max_k + 1)]


def cubic_series(max_k: int = 3) -> List[CorpusGerm]:
    """z1^3 + z2^{k+1} for k = 2..max_k."""
    return [CorpusGerm(f"z1^3+z2^{k + 1}", f"z1^3 + z2^{k + 1}", 2, k + 5)
            for k in range(2, max_k + 1)]


def morse_series(max_n: int = 3) -> List[CorpusGerm]:
    out = []
    for n in range(1, max_n + 1):
        expr = "z^2" if n == 1 else " + ".join(f"z{i}^2" for i in range(1, n + 1))
        out.append(CorpusGerm(f"Morse{n}", expr, n, 8 if n < 3 else 6))
    return out


def germ_corpus(max_k: int = 4) -> List[CorpusGerm]:
    return a_series(max_k) + cubic_series(min(max_k, 3)) + morse_series()


def random_perturbation(rng, n_vars: int, trunc: int, min_order: int,
                        max_coeff: Fraction = Fraction(1, 256), density: float = 0.5,
                        max_degree: Optional[int] = None) -> Jet:
    """Random jet of order ≥ min_order with rational coefficients of modulus ≤ max_coeff."""
    top = trunc if max_degree is None else min(trunc, max_degree)
    coeffs = {}
    for alpha in monomials_upto(n_vars, top, min_order):
        if rng.random() >= density:
            continue
        num = int(rng.integers(-4, 5))
        if num:
            coeffs[alpha] = QQ_I(QQ(num * max_coeff.numerator, 4 * max_coeff.denominator), QQ(0))
    return Jet(n_vars, trunc, coeffs)
