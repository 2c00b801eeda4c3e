"""
Exact sparse linear algebra over the Gaussian rationals.

Vectors are dictionaries {index: coefficient}. ``SpanBasis`` keeps an echelon
basis whose pivot is the smallest index of each stored vector, and remembers
how every stored vector was combined from the inputs. That is enough for
membership, expression as a combination, kernels and repeated solves.
"""

import logging
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

from sympy.polys.domains import QQ_I

logger = logging.getLogger(__name__)

Vector = Dict[int, object]
Combo = Dict[Hashable, object]


def _axpy(target: dict, factor, source: dict, limit: Optional[int] = None) -> None:
    """target -= factor * source, in place, dropping keys ≥ limit."""
    for key, value in source.items():
        if limit is not None and key >= limit:
            continue
        new = target.get(key, QQ_I.zero) - factor * value
        if new:
            target[key] = new
        else:
            target.pop(key, None)


def _combo_axpy(target: Combo, factor, source: Combo) -> None:
    for key, value in source.items():
        new = target.get(key, QQ_I.zero) + factor * value
        if new:
            target[key] = new
        else:
            target.pop(key, None)


class SpanBasis:
    """Echelon basis of the span of labelled vectors."""

    def __init__(self):
        self._rows: Dict[int, Vector] = {}
        self._combos: Dict[int, Combo] = {}
        self.kernel: List[Combo] = []

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def pivots(self) -> List[int]:
        return sorted(self._rows)

    def rank(self, limit: Optional[int] = None) -> int:
        if limit is None:
            return len(self._rows)
        return sum(1 for p in self._rows if p < limit)

    def reduce(self, vector: Vector, limit: Optional[int] = None) -> Tuple[Vector, Combo]:
        """Split ``vector`` into (remainder, combination).

        vector = Σ combination[label]·input[label] + remainder, where the
        remainder only touches non-pivot indices. With ``limit`` every index
        ≥ limit is ignored, i.e. the computation happens in the quotient by
        those coordinates.
        """
        work = {k: v for k, v in vector.items() if v and (limit is None or k < limit)}
        remainder: Vector = {}
        combo: Combo = {}
        while work:
            p = min(work)
            row = self._rows.get(p)
            if row is None:
                remainder[p] = work.pop(p)
                continue
            factor = work[p] / row[p]
            _axpy(work, factor, row, limit)
            work.pop(p, None)
            _combo_axpy(combo, factor, self._combos[p])
        return remainder, combo

    def contains(self, vector: Vector, limit: Optional[int] = None) -> bool:
        remainder, _ = self.reduce(vector, limit)
        return not remainder

    def express(self, vector: Vector, limit: Optional[int] = None) -> Optional[Combo]:
        remainder, combo = self.reduce(vector, limit)
        if remainder:
            return None
        return combo

    def add(self, vector: Vector, label: Hashable) -> Optional[Combo]:
        """Insert a vector.

        Returns None when the span grows, otherwise the dependency
        {label: 1} - combination, a kernel vector over the labels.
        """
        remainder, combo = self.reduce(vector)
        own: Combo = {label: QQ_I.one}
        _combo_axpy(own, -QQ_I.one, combo)
        if not remainder:
            self.kernel.append(own)
            return own
        pivot = min(remainder)
        self._rows[pivot] = remainder
        self._combos[pivot] = own
        return None


class LinearSystem:
    """Square or rectangular system M y = rhs, eliminated once and solved many times.

    ``rows[r]`` is row r of M as {column: coefficient}.
    """

    def __init__(self, rows: Sequence[Vector]):
        self._basis = SpanBasis()
        for r, row in enumerate(rows):
            self._basis.add(row, r)
        self.n_rows = len(rows)
        logger.debug(f"Eliminated {self.n_rows} rows, rank {len(self._basis)}")

    @property
    def rank(self) -> int:
        return len(self._basis)

    @staticmethod
    def _combine(combo: Combo, rhs: Vector):
        total = QQ_I.zero
        for r, c in combo.items():
            value = rhs.get(r)
            if value:
                total += c * value
        return total

    def is_consistent(self, rhs: Vector) -> bool:
        return all(not self._combine(dep, rhs) for dep in self._basis.kernel)

    def solve(self, rhs: Vector) -> Optional[Vector]:
        """One solution (free variables set to zero), or None if inconsistent."""
        if not self.is_consistent(rhs):
            return None
        y: Vector = {}
        rows = self._basis._rows
        combos = self._basis._combos
        for p in sorted(rows, reverse=True):
            row = rows[p]
            value = self._combine(combos[p], rhs)
            for j, a in row.items():
                if j != p and j in y:
                    value -= a * y[j]
            if value:
                y[p] = value / row[p]
        return y
