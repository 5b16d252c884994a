"""Affine forms const + sum(coeff * variable) over spectral variables.

Variable coefficients are exact rationals even in numeric mode (operators are
built from integer shifts of spectral parameters); the constant may be a
rational or a complex number.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

from gmpy2 import mpq

from .scalars import Rat, is_exact_value


@dataclass(frozen=True)
class Affine:
    const: object                      # Rat or complex
    terms: Tuple[Tuple[str, Rat], ...]  # sorted by variable name, nonzero coeffs

    @staticmethod
    def make(const=0, **coeffs) -> "Affine":
        terms = tuple(sorted((v, mpq(c)) for v, c in coeffs.items() if c != 0))
        c = mpq(const) if is_exact_value(const) else complex(const)
        return Affine(c, terms)

    @staticmethod
    def var(name: str) -> "Affine":
        return Affine(mpq(0), ((name, mpq(1)),))

    @staticmethod
    def of_const(c) -> "Affine":
        return Affine(mpq(c) if is_exact_value(c) else complex(c), ())

    @property
    def is_const(self) -> bool:
        return not self.terms

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(v for v, _ in self.terms)

    def coeff(self, var: str) -> Rat:
        for v, c in self.terms:
            if v == var:
                return c
        return mpq(0)

    def _combine(self, other: "Affine", sign: int) -> "Affine":
        d = dict(self.terms)
        for v, c in other.terms:
            d[v] = d.get(v, mpq(0)) + sign * c
        terms = tuple(sorted((v, c) for v, c in d.items() if c != 0))
        return Affine(self.const + sign * other.const, terms)

    def __add__(self, other):
        if isinstance(other, Affine):
            return self._combine(other, 1)
        return Affine(self.const + other, self.terms)

    def __sub__(self, other):
        if isinstance(other, Affine):
            return self._combine(other, -1)
        return Affine(self.const - other, self.terms)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, r) -> "Affine":
        if r == 0:
            return Affine(mpq(0), ())
        const = self.const * r
        if is_exact_value(self.const) and is_exact_value(r):
            const = mpq(self.const) * mpq(r)
        return Affine(const, tuple((v, mpq(c * mpq(r))) for v, c in self.terms))

    def shift_var(self, var: str, delta) -> "Affine":
        """Substitute var -> var + delta."""
        c = self.coeff(var)
        if c == 0:
            return self
        if is_exact_value(self.const) and is_exact_value(delta):
            return Affine(mpq(self.const) + c * mpq(delta), self.terms)
        return Affine(self.const + c * delta, self.terms)

    def subst_const(self, var: str, val) -> "Affine":
        """Substitute var -> constant value."""
        c = self.coeff(var)
        if c == 0:
            return self
        terms = tuple((v, k) for v, k in self.terms if v != var)
        if is_exact_value(self.const) and is_exact_value(val):
            return Affine(mpq(self.const) + c * mpq(val), terms)
        return Affine(self.const + c * complex(val), terms)

    def rename(self, mapping: dict) -> "Affine":
        terms = tuple(sorted((mapping.get(v, v), c) for v, c in self.terms))
        return Affine(self.const, terms)

    def evaluate(self, assignment: dict):
        out = self.const
        for v, c in self.terms:
            out = out + c * assignment[v]
        return out

    def leading_normalize(self):
        """Return (canonical affine, scale) with unit leading coefficient.

        The leading slot is the first variable term, or the constant for a
        constant form; `self == canonical.scale(scale)`.
        """
        if self.terms:
            lead = self.terms[0][1]
        else:
            lead = self.const
            if lead == 0:
                return self, mpq(1)
        if lead == 1:
            return self, mpq(1)
        if not is_exact_value(lead):
            return self, mpq(1)
        inv = 1 / mpq(lead)
        return self.scale(inv), mpq(lead)

    def key(self):
        c = self.const
        if not is_exact_value(c):
            c = complex(c)
        return (c, self.terms)

    def __hash__(self):
        c = self.const
        return hash((complex(c) if not is_exact_value(c) else mpq(c), self.terms))

    def __eq__(self, other):
        if not isinstance(other, Affine):
            return NotImplemented
        return self.terms == other.terms and self.const == other.const

    def __repr__(self):
        parts = []
        for v, c in self.terms:
            parts.append(f"{'+' if c > 0 else '-'}{abs(c)}*{v}" if abs(c) != 1
                         else f"{'+' if c > 0 else '-'}{v}")
        if self.const != 0 or not parts:
            parts.append(f"+({self.const})")
        s = "".join(parts)
        return s[1:] if s.startswith("+") else s
