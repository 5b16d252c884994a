"""Scalar arithmetic: exact rationals, complex numerics, and radical monomials.

Exact-mode values are gmpy2 rationals, numeric-mode values are complex
doubles.  The two never mix inside one expression; `Scalar` enforces that at
construction/operation time.  `Radical` extends the rationals by the square
roots sqrt(2*hbar) and sqrt(pi) that show up in fusion constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from gmpy2 import mpq

EXACT = "exact"
NUMERIC = "numeric"

Rat = type(mpq(0))
Value = Union[Rat, complex]

QZERO = mpq(0)
QONE = mpq(1)


class ModeMixError(TypeError):
    """Raised when exact and numeric scalars meet in one expression."""


def rat(p, q=1) -> Rat:
    return mpq(p, q)


def is_exact_value(x) -> bool:
    return isinstance(x, (Rat, int))


def value_mode(x) -> str:
    if isinstance(x, (Rat, int)):
        return EXACT
    if isinstance(x, (complex, float)):
        return NUMERIC
    raise TypeError(f"not a scalar value: {x!r}")


def check_same_mode(a_mode: str, b_mode: str) -> str:
    if a_mode != b_mode:
        raise ModeMixError(f"cannot mix {a_mode} and {b_mode} scalars")
    return a_mode


def parse_rational(text: str) -> Rat:
    text = text.strip()
    if "/" in text:
        p, q = text.split("/")
        return mpq(int(p), int(q))
    return mpq(int(text))


def parse_complex(text: str) -> complex:
    """Parse 'a+bi' / 'a-bi' / 'bi' / 'a' complex literals."""
    t = text.strip().replace(" ", "")
    if t.endswith(("i", "I", "j", "J")):
        t = t[:-1] + "j"
    else:
        return complex(float(t), 0.0)
    # complex() needs the real part explicit for forms like '+j' or '-3j'
    if t in ("j", "+j"):
        return 1j
    if t == "-j":
        return -1j
    return complex(t)


@dataclass(frozen=True)
class Scalar:
    """Tagged scalar: exact rational or complex double.

    mode-mixing raises ModeMixError rather than silently coercing.
    """

    mode: str
    value: Value

    def __post_init__(self):
        if self.mode == EXACT:
            if not is_exact_value(self.value):
                raise ModeMixError("exact Scalar requires a rational value")
            object.__setattr__(self, "value", mpq(self.value))
        elif self.mode == NUMERIC:
            if is_exact_value(self.value):
                object.__setattr__(self, "value", complex(self.value))
            else:
                object.__setattr__(self, "value", complex(self.value))
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    @staticmethod
    def exact(v) -> "Scalar":
        return Scalar(EXACT, mpq(v))

    @staticmethod
    def numeric(v) -> "Scalar":
        return Scalar(NUMERIC, complex(v))

    def _coerce(self, other) -> "Scalar":
        if isinstance(other, Scalar):
            check_same_mode(self.mode, other.mode)
            return other
        if isinstance(other, (Rat, int)):
            # plain integers/rationals are mode-neutral literals
            if self.mode == EXACT:
                return Scalar(EXACT, mpq(other))
            return Scalar(NUMERIC, complex(other))
        if isinstance(other, (float, complex)):
            if self.mode == EXACT:
                raise ModeMixError("cannot mix exact and numeric scalars")
            return Scalar(NUMERIC, complex(other))
        raise TypeError(f"cannot combine Scalar with {other!r}")

    def __add__(self, other):
        o = self._coerce(other)
        return Scalar(self.mode, self.value + o.value)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Scalar(self.mode, self.value - o.value)

    def __rsub__(self, other):
        o = self._coerce(other)
        return Scalar(self.mode, o.value - self.value)

    def __mul__(self, other):
        o = self._coerce(other)
        return Scalar(self.mode, self.value * o.value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        return Scalar(self.mode, self.value / o.value)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        return Scalar(self.mode, o.value / self.value)

    def __neg__(self):
        return Scalar(self.mode, -self.value)

    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self.mode == other.mode and self.value == other.value
        return self.value == other

    def __hash__(self):
        return hash((self.mode, complex(self.value) if self.mode == NUMERIC else self.value))

    def __repr__(self):
        return f"Scalar({self.mode}, {self.value})"


@dataclass(frozen=True)
class Radical:
    """rational * (2*hbar)^(e2h/2) * pi^(epi/2) with e2h in {0,1} after folding.

    Only the multiplicative monoid is needed; sums of distinct radicals never
    arise in the prefactor algebra.
    """

    rat: Rat
    e2h: int
    epi: int

    @staticmethod
    def one() -> "Radical":
        return Radical(QONE, 0, 0)

    @staticmethod
    def of(r) -> "Radical":
        return Radical(mpq(r), 0, 0)

    def fold(self, hbar: Rat) -> "Radical":
        """Fold even powers of sqrt(2*hbar) into the rational part."""
        e = self.e2h
        r = self.rat
        two_h = 2 * mpq(hbar)
        while e >= 2:
            r *= two_h
            e -= 2
        while e <= -2:
            r /= two_h
            e += 2
        return Radical(r, e, self.epi)

    def mul(self, other: "Radical", hbar: Rat) -> "Radical":
        return Radical(self.rat * other.rat, self.e2h + other.e2h,
                       self.epi + other.epi).fold(hbar)

    def div(self, other: "Radical", hbar: Rat) -> "Radical":
        return Radical(self.rat / other.rat, self.e2h - other.e2h,
                       self.epi - other.epi).fold(hbar)

    def pow(self, n: int, hbar: Rat) -> "Radical":
        if n == 0:
            return Radical.one()
        r = self.rat ** abs(n)
        out = Radical(r if n > 0 else 1 / r, self.e2h * n, self.epi * n)
        return out.fold(hbar)

    def scale(self, r) -> "Radical":
        return Radical(self.rat * mpq(r), self.e2h, self.epi)

    @property
    def is_rational(self) -> bool:
        return self.e2h == 0 and self.epi == 0

    @property
    def is_one(self) -> bool:
        return self.is_rational and self.rat == 1

    def rational_value(self) -> Rat:
        if not self.is_rational:
            raise ValueError(f"radical residue {self} is irrational")
        return self.rat

    def numeric(self, hbar: complex) -> complex:
        import cmath
        import math
        v = complex(self.rat)
        if self.e2h:
            v *= (2 * complex(hbar)) ** (self.e2h / 2.0)
        if self.epi:
            v *= math.pi ** (self.epi / 2.0)
        return v

    def __repr__(self):
        return f"Radical({self.rat}, (2h)^{self.e2h}/2, pi^{self.epi}/2)"


@dataclass(frozen=True)
class Context:
    """Session constants: arithmetic mode and the deformation parameter."""

    mode: str
    hbar: Value

    def __post_init__(self):
        if self.mode == EXACT and not is_exact_value(self.hbar):
            raise ModeMixError("exact context requires rational hbar")
        if self.mode == NUMERIC:
            object.__setattr__(self, "hbar", complex(self.hbar))
        else:
            object.__setattr__(self, "hbar", mpq(self.hbar))

    @property
    def exact(self) -> bool:
        return self.mode == EXACT

    def value(self, x) -> Value:
        """Coerce a literal into this context's value domain."""
        if self.exact:
            if not is_exact_value(x):
                raise ModeMixError(f"numeric literal {x!r} in exact context")
            return mpq(x)
        return complex(x)

    def hbar_rat(self) -> Rat:
        if not self.exact:
            raise ModeMixError("rational hbar only available in exact mode")
        return self.hbar

    @property
    def hbar_build(self) -> Rat:
        """Rational hbar used for operator construction and contraction.

        Numeric sessions may evaluate at complex points, but the operator
        shift structure itself is rational in hbar; complex hbar (Thirring)
        is only meaningful for the scalar R/S-matrix layer.
        """
        h = self.hbar
        if isinstance(h, complex):
            if h.imag == 0 and mpq(h.real) == h.real:
                return mpq(h.real)
            raise ModeMixError("vertex-operator construction needs rational hbar")
        return mpq(h)


def exact_context(hbar=1) -> Context:
    return Context(EXACT, mpq(hbar))


def numeric_context(hbar=1.0) -> Context:
    return Context(NUMERIC, complex(hbar))
