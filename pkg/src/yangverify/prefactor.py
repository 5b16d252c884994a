"""Multiplicative prefactor algebra for contraction results.

A prefactor is radical * prod Gamma(arg)^e * prod (affine factor)^e.  Negative
affine powers carry a pivot tag naming the variable treated as outer in the
one-sided expansion; the tag is assigned from operator order at contraction
time and consumed when the prefactor is expanded into a Laurent series.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from gmpy2 import mpq

from .affine import Affine
from .gamma import GammaPoleError, log_gamma, reduce_gammas
from .scalars import EXACT, Radical, is_exact_value
from .series import Series, expand_affine_power


class DivergentContraction(ArithmeticError):
    pass


@dataclass
class Prefactor:
    rad: Radical = field(default_factory=Radical.one)
    gam: Dict[Affine, int] = field(default_factory=dict)
    affs: Dict[Tuple[Affine, Optional[str]], int] = field(default_factory=dict)
    zero_order: int = 0  # net order of vanishing from constant zeros/poles

    @staticmethod
    def one() -> "Prefactor":
        return Prefactor()

    def copy(self) -> "Prefactor":
        return Prefactor(self.rad, dict(self.gam), dict(self.affs), self.zero_order)

    # -- building ----------------------------------------------------------

    def mul_rad(self, r: Radical, hbar):
        self.rad = self.rad.mul(r, hbar)
        return self

    def mul_gamma(self, arg: Affine, e: int):
        if e:
            self.gam[arg] = self.gam.get(arg, 0) + e
            if self.gam[arg] == 0:
                del self.gam[arg]
        return self

    def mul_factor(self, aff: Affine, e: int, pivot: Optional[str], hbar):
        if e == 0:
            return self
        if aff.is_const:
            c = aff.const
            if c == 0:
                self.zero_order += e
                return self
            if is_exact_value(c):
                self.rad = self.rad.mul(Radical.of(c).pow(e, hbar), hbar)
            else:
                raise TypeError("numeric constant factor in exact prefactor algebra")
            return self
        canon, scale = aff.leading_normalize()
        if scale != 1:
            self.rad = self.rad.mul(Radical.of(scale).pow(e, hbar), hbar)
        key = (canon, pivot if e < 0 else None)
        self.affs[key] = self.affs.get(key, 0) + e
        if self.affs[key] == 0:
            del self.affs[key]
        return self

    def mul(self, other: "Prefactor", hbar) -> "Prefactor":
        out = self.copy()
        out.rad = out.rad.mul(other.rad, hbar)
        for a, e in other.gam.items():
            out.mul_gamma(a, e)
        for (a, piv), e in other.affs.items():
            key = (a, piv)
            out.affs[key] = out.affs.get(key, 0) + e
            if out.affs[key] == 0:
                del out.affs[key]
        out.zero_order += other.zero_order
        return out

    def inverse(self, hbar) -> "Prefactor":
        out = Prefactor(self.rad.pow(-1, hbar),
                        {a: -e for a, e in self.gam.items()},
                        {k: -e for k, e in self.affs.items()},
                        -self.zero_order)
        return out

    def pow(self, n: int, hbar) -> "Prefactor":
        out = Prefactor(self.rad.pow(n, hbar),
                        {a: e * n for a, e in self.gam.items()},
                        {k: e * n for k, e in self.affs.items()},
                        self.zero_order * n)
        return out

    # -- normalization -----------------------------------------------------

    def cancel_affs(self):
        """Cancel equal affine factors across direction tags (exact identity)."""
        by_aff: Dict[Affine, list] = {}
        for (a, piv), e in self.affs.items():
            by_aff.setdefault(a, []).append((piv, e))
        out: Dict[Tuple[Affine, Optional[str]], int] = {}
        for a, entries in by_aff.items():
            pos = sum(e for _, e in entries if e > 0)
            negs = [(piv, e) for piv, e in entries if e < 0]
            for piv, e in negs:
                take = min(pos, -e)
                pos -= take
                e += take
                if e:
                    out[(a, piv)] = out.get((a, piv), 0) + e
            if pos:
                out[(a, None)] = out.get((a, None), 0) + pos
        self.affs = {k: e for k, e in out.items() if e}
        return self

    def reduce(self, hbar, pivot: Optional[str] = None) -> "Prefactor":
        """Apply Gamma(x+1)=x*Gamma(x) reduction and constant evaluation."""
        red = reduce_gammas(self.gam, hbar)
        self.gam = red.residual
        self.rad = self.rad.mul(red.rad, hbar)
        self.zero_order += red.pole_order
        for aff, e in red.factors:
            self.mul_factor(aff, e, pivot, hbar)
        self.cancel_affs()
        return self

    @property
    def is_rational(self) -> bool:
        return not self.gam and self.rad.is_rational

    def is_one(self, hbar) -> bool:
        p = self.copy().reduce(hbar)
        return (not p.gam and not p.affs and p.zero_order == 0 and p.rad.is_one)

    def equals(self, other: "Prefactor", hbar) -> bool:
        return self.mul(other.inverse(hbar), hbar).is_one(hbar)

    # -- realization -------------------------------------------------------

    def series(self, caps: Dict[str, tuple], order, mode: str, hbar,
               allow_radical: bool = False):
        """Expand the rational content as a Laurent series on `caps`.

        Returns (Radical, Series); the radical must be consumed by the caller
        (or be trivial unless allow_radical).
        """
        p = self.copy().reduce(hbar)
        if p.gam:
            raise ValueError(f"Gamma residue in series expansion: {p.gam}")
        if p.zero_order < 0:
            raise ZeroDivisionError("pole in prefactor")
        if p.zero_order > 0:
            return Radical.one(), Series.zero(mode)
        if not allow_radical and not p.rad.is_rational:
            raise ValueError(f"radical residue {p.rad} in series expansion")
        out = Series.constant(1 if allow_radical else p.rad.rational_value(), mode)
        rad = p.rad if allow_radical else Radical.one()
        for (aff, piv), e in sorted(p.affs.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]))):
            out = out.mul(expand_affine_power(aff, e, order, caps, mode, pivot=piv),
                          caps=caps)
        return rad, out

    def numeric(self, assignment: Dict[str, complex], hbar: complex) -> complex:
        if self.zero_order > 0:
            return 0j
        if self.zero_order < 0:
            raise ZeroDivisionError("pole in prefactor")
        val = self.rad.numeric(hbar)
        logsum = 0j
        for arg, e in self.gam.items():
            logsum += e * log_gamma(arg.evaluate(assignment))
        for (aff, _), e in self.affs.items():
            v = aff.evaluate(assignment)
            if v == 0:
                if e > 0:
                    return 0j
                raise ZeroDivisionError(f"pole: {aff} = 0")
            logsum += e * cmath.log(v)
        return val * cmath.exp(logsum)

    def __repr__(self):
        parts = [repr(self.rad)]
        for a, e in self.gam.items():
            parts.append(f"G({a})^{e}")
        for (a, piv), e in self.affs.items():
            parts.append(f"({a})^{e}" + (f"[{piv}]" if piv else ""))
        if self.zero_order:
            parts.append(f"O(eps^{self.zero_order})")
        return " * ".join(parts)
