"""Truncated multivariate Laurent series with per-variable exactness windows.

Every series records, per variable, the interval of exponents on which its
stored coefficients are the true ones ("known interval"); `None` endpoints
mean the series is known to vanish beyond its stored support on that side.
Arithmetic propagates these intervals, so a check can assert that an identity
holds on exactly the region where both sides were computed without loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from gmpy2 import mpq

from .affine import Affine
from .scalars import EXACT, NUMERIC, is_exact_value

INF = math.inf


def _lo(b):
    return -INF if b is None else b


def _hi(b):
    return INF if b is None else b


def _mk(lo, hi) -> Tuple[Optional[int], Optional[int]]:
    if lo == INF or hi == -INF or lo > hi:
        return (0, -1)  # empty known region
    return (None if lo == -INF else int(lo), None if hi == INF else int(hi))


def binom_general(e: int, k: int):
    """C(e, k) for any integer e and k >= 0, as an exact rational."""
    num = mpq(1)
    for j in range(k):
        num *= mpq(e - j, j + 1)
    return num


class Series:
    """Laurent series over a fixed variable tuple, truncated to known windows."""

    __slots__ = ("vars", "known", "coeff", "mode")

    def __init__(self, vars: Tuple[str, ...], known: Dict[str, tuple],
                 coeff: Dict[tuple, object], mode: str):
        self.vars = vars
        self.known = known
        self.coeff = coeff
        self.mode = mode

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(value, mode: str, vars: Tuple[str, ...] = ()) -> "Series":
        known = {v: (None, None) for v in vars}
        key = (0,) * len(vars)
        coeff = {} if value == 0 else {key: value}
        return Series(vars, known, coeff, mode)

    @staticmethod
    def zero(mode: str, vars: Tuple[str, ...] = ()) -> "Series":
        return Series.constant(0, mode, vars)

    @staticmethod
    def monomial(value, exps: Dict[str, int], mode: str) -> "Series":
        vars = tuple(sorted(exps))
        key = tuple(exps[v] for v in vars)
        known = {v: (None, None) for v in vars}
        coeff = {} if value == 0 else {key: value}
        return Series(vars, known, coeff, mode)

    # -- bookkeeping -------------------------------------------------------

    def copy(self) -> "Series":
        return Series(self.vars, dict(self.known), dict(self.coeff), self.mode)

    def embed(self, vars: Tuple[str, ...]) -> "Series":
        """View this series over a superset of variables."""
        if vars == self.vars:
            return self
        idx = {v: i for i, v in enumerate(self.vars)}
        known = {}
        for v in vars:
            known[v] = self.known[v] if v in idx else (None, None)
        coeff = {}
        for key, c in self.coeff.items():
            coeff[tuple(key[idx[v]] if v in idx else 0 for v in vars)] = c
        return Series(vars, known, coeff, self.mode)

    def support_min(self, v: str):
        lo, _ = self.known[v]
        if lo is not None:
            return -INF
        i = self.vars.index(v)
        return min((k[i] for k in self.coeff), default=INF)

    def support_max(self, v: str):
        _, hi = self.known[v]
        if hi is not None:
            return INF
        i = self.vars.index(v)
        return max((k[i] for k in self.coeff), default=-INF)

    def in_known(self, key: tuple) -> bool:
        for i, v in enumerate(self.vars):
            lo, hi = self.known[v]
            if _lo(lo) > key[i] or key[i] > _hi(hi):
                return False
        return True

    def is_empty_region(self) -> bool:
        return any(_lo(lo) > _hi(hi) for lo, hi in self.known.values())

    # -- arithmetic --------------------------------------------------------

    def add(self, other: "Series", scale=1) -> "Series":
        vars = tuple(sorted(set(self.vars) | set(other.vars)))
        a, b = self.embed(vars), other.embed(vars)
        known = {}
        for v in vars:
            alo, ahi = a.known[v]
            blo, bhi = b.known[v]
            known[v] = _mk(max(_lo(alo), _lo(blo)), min(_hi(ahi), _hi(bhi)))
        coeff = dict(a.coeff)
        for key, c in b.coeff.items():
            c = c * scale if scale != 1 else c
            acc = coeff.get(key)
            coeff[key] = c if acc is None else acc + c
        out = Series(vars, known, coeff, self.mode)
        out._clip_to_known()
        return out

    def sub(self, other: "Series") -> "Series":
        return self.add(other, scale=-1)

    def scale(self, c) -> "Series":
        if c == 0:
            return Series(self.vars, dict(self.known), {}, self.mode)
        return Series(self.vars, dict(self.known),
                      {k: v * c for k, v in self.coeff.items()}, self.mode)

    def mul(self, other: "Series", caps: Optional[Dict[str, tuple]] = None) -> "Series":
        vars = tuple(sorted(set(self.vars) | set(other.vars)))
        a, b = self.embed(vars), other.embed(vars)
        known = {}
        store = {}
        for v in vars:
            alo, ahi = a.known[v]
            blo, bhi = b.known[v]
            asmin, asmax = a.support_min(v), a.support_max(v)
            bsmin, bsmax = b.support_min(v), b.support_max(v)
            hi_bound = INF
            if ahi is not None:
                hi_bound = min(hi_bound, ahi + bsmin)
            if bhi is not None:
                hi_bound = min(hi_bound, bhi + asmin)
            lo_bound = -INF
            if alo is not None:
                lo_bound = max(lo_bound, alo + bsmax)
            if blo is not None:
                lo_bound = max(lo_bound, blo + asmax)
            slo, shi = lo_bound, hi_bound
            if caps and v in caps:
                clo, chi = caps[v]
                # clipping real support makes the clipped side unknown
                if _lo(clo) > asmin + bsmin:
                    lo_bound = max(lo_bound, _lo(clo))
                if _hi(chi) < asmax + bsmax:
                    hi_bound = min(hi_bound, _hi(chi))
                slo, shi = max(lo_bound, _lo(clo)), min(hi_bound, _hi(chi))
            else:
                slo, shi = lo_bound, hi_bound
            known[v] = _mk(lo_bound, hi_bound)
            store[v] = (slo, shi)
        los = [store[v][0] for v in vars]
        his = [store[v][1] for v in vars]
        coeff: Dict[tuple, object] = {}
        for ka, ca in a.coeff.items():
            for kb, cb in b.coeff.items():
                key = tuple(x + y for x, y in zip(ka, kb))
                ok = True
                for i in range(len(vars)):
                    if key[i] < los[i] or key[i] > his[i]:
                        ok = False
                        break
                if not ok:
                    continue
                c = ca * cb
                acc = coeff.get(key)
                coeff[key] = c if acc is None else acc + c
        return Series(vars, known, coeff, self.mode)

    def _clip_to_known(self):
        drop = [k for k in self.coeff if not self.in_known(k)]
        for k in drop:
            del self.coeff[k]

    def prune(self) -> "Series":
        self.coeff = {k: c for k, c in self.coeff.items() if c != 0}
        return self

    def restrict(self, caps: Dict[str, tuple]) -> "Series":
        """Clip storage to caps; the known region shrinks only where real
        (or potentially real) support is dropped."""
        known = dict(self.known)
        for v, (clo, chi) in caps.items():
            if v not in known:
                continue
            lo, hi = known[v]
            nlo, nhi = _lo(lo), _hi(hi)
            if _lo(clo) > self.support_min(v):
                nlo = max(nlo, _lo(clo))
            if _hi(chi) < self.support_max(v):
                nhi = min(nhi, _hi(chi))
            known[v] = _mk(nlo, nhi)
        out = Series(self.vars, known, dict(self.coeff), self.mode)
        for v, (clo, chi) in caps.items():
            if v not in out.vars:
                continue
            i = out.vars.index(v)
            out.coeff = {k: c for k, c in out.coeff.items()
                         if _lo(clo) <= k[i] <= _hi(chi)}
        return out

    def shift_exp(self, v: str, delta: int) -> "Series":
        """Multiply by v**delta."""
        if v not in self.vars:
            s = self.embed(tuple(sorted(set(self.vars) | {v})))
        else:
            s = self
        i = s.vars.index(v)
        lo, hi = s.known[v]
        known = dict(s.known)
        known[v] = (None if lo is None else lo + delta,
                    None if hi is None else hi + delta)
        coeff = {k[:i] + (k[i] + delta,) + k[i + 1:]: c for k, c in s.coeff.items()}
        return Series(s.vars, known, coeff, s.mode)

    def slice_exp(self, v: str, e: int) -> "Series":
        """Coefficient of v**e, as a series over the remaining variables."""
        i = self.vars.index(v)
        lo, hi = self.known[v]
        if not (_lo(lo) <= e <= _hi(hi)):
            raise ValueError(f"slice at {v}^{e} outside known interval {self.known[v]}")
        vars = self.vars[:i] + self.vars[i + 1:]
        known = {w: b for w, b in self.known.items() if w != v}
        coeff = {}
        for key, c in self.coeff.items():
            if key[i] == e:
                coeff[key[:i] + key[i + 1:]] = c
        return Series(vars, known, coeff, self.mode)

    def subst_var_shift(self, v: str, w: str, const) -> "Series":
        """Substitute v -> w + const (w fresh); exact binomial re-expansion.

        Only valid for series polynomial in v on its known interval (no
        truncated negative tail), which is how it is used.
        """
        i = self.vars.index(v)
        lo, hi = self.known[v]
        out = Series.zero(self.mode, tuple(sorted(set(self.vars) - {v} | {w})))
        for key, c in self.coeff.items():
            e = key[i]
            if e < 0:
                raise ValueError("subst_var_shift needs polynomial dependence")
            rest = {self.vars[j]: key[j] for j in range(len(key)) if j != i}
            for k in range(e + 1):
                coeffk = c * binom_general(e, k) * const ** (e - k) if e - k else c * binom_general(e, k)
                mono = Series.monomial(coeffk, {**rest, w: k}, self.mode)
                out = out.add(mono)
        for u in out.vars:
            if u != w and u in self.known:
                out.known[u] = self.known[u]
        return out

    # -- queries -----------------------------------------------------------

    def coefficient(self, exps: Dict[str, int]):
        key = tuple(exps.get(v, 0) for v in self.vars)
        if not self.in_known(key):
            raise ValueError(f"coefficient {exps} outside known region")
        return self.coeff.get(key, mpq(0) if self.mode == EXACT else 0j)

    def max_abs(self) -> float:
        m = 0.0
        for c in self.coeff.values():
            m = max(m, abs(complex(c)))
        return m

    def nonzero_items(self):
        return [(k, c) for k, c in self.coeff.items() if c != 0]

    def __repr__(self):
        items = sorted(self.nonzero_items())[:8]
        body = ", ".join(f"{dict(zip(self.vars, k))}: {c}" for k, c in items)
        return f"Series[{','.join(self.vars)}]({body}{'...' if len(self.coeff) > 8 else ''})"


def known_intersection(a: Series, b: Series) -> Dict[str, tuple]:
    vars = set(a.vars) | set(b.vars)
    out = {}
    for v in vars:
        alo, ahi = a.known.get(v, (None, None))
        blo, bhi = b.known.get(v, (None, None))
        out[v] = _mk(max(_lo(alo), _lo(blo)), min(_hi(ahi), _hi(bhi)))
    return out


def expand_affine_power(aff: Affine, e: int, order, caps: Dict[str, tuple],
                        mode: str, pivot: Optional[str] = None) -> Series:
    """One-sided expansion of (affine)^e truncated to caps.

    `order` lists variables outermost first; a negative power expands
    geometrically against the outermost variable present (or `pivot` when the
    provenance of the factor dictates a specific direction).
    """
    present = [v for v, c in aff.terms]
    if not present:
        c = aff.const
        if e >= 0:
            val = c ** e
        else:
            if c == 0:
                raise ZeroDivisionError("pole: constant affine factor is zero")
            val = mpq(c) ** e if is_exact_value(c) else c ** e
        return Series.constant(val, mode)
    if e == 0:
        return Series.constant(1, mode)
    if pivot is None:
        for v in order:
            if v in present:
                pivot = v
                break
        else:
            raise ValueError(f"no ordered variable in {aff!r}")
    elif pivot not in present:
        raise ValueError(f"declared pivot {pivot} absent from {aff!r}")
    a = aff.coeff(pivot)
    # aff = a*pivot * (1 + R),  R = (aff - a*pivot)/(a*pivot)
    rest = aff.subst_const(pivot, 0)
    vars_all = tuple(sorted(set(present)))
    r = Series.zero(mode, vars_all)
    if rest.const != 0:
        r = r.add(Series.monomial(rest.const / a, {pivot: -1}, mode))
    for v, cv in rest.terms:
        r = r.add(Series.monomial(cv / a, {v: 1, pivot: -1}, mode))
    trivial_rest = rest.const == 0 and not rest.terms
    if e >= 0 or trivial_rest:
        kmax = max(e, 0) if trivial_rest else e
    else:
        plo, _ = caps[pivot]
        if plo is None:
            raise ValueError("geometric expansion needs a finite lower cap on the pivot")
        kmax = e - plo
    head = Series.monomial(mpq(a) ** e if is_exact_value(a) else a ** e,
                           {pivot: e}, mode)
    acc = Series.constant(1, mode, vars_all)
    out = Series.zero(mode, vars_all)
    rcaps = {v: caps.get(v, (None, None)) for v in vars_all}
    for k in range(int(kmax) + 1):
        if k > 0:
            acc = acc.mul(r, caps=None)
        out = out.add(acc.scale(binom_general(e, k)))
    out = head.mul(out, caps=None)
    if e < 0 and not trivial_rest:
        # geometric tail cut below the pivot cap: unknown further down
        lo, hi = out.known[pivot]
        out.known[pivot] = (plo, hi)
    out = out.restrict(rcaps)
    return out.prune()


def delta_series(u: str, v: str, offset, ucap: tuple, vcap: tuple, mode: str) -> Series:
    """delta(u - v - offset) = sum_{n+m=-1} u^n (v+offset)^m on the given caps."""
    ulo, uhi = ucap
    vlo, vhi = vcap
    coeff: Dict[tuple, object] = {}
    for a in range(ulo, uhi + 1):
        mt = -1 - a
        if mt >= 0:
            for j in range(mt + 1):
                e = mt - j
                if e < vlo or e > vhi:
                    continue
                c = binom_general(mt, j) * offset ** j if j else binom_general(mt, j)
                key = (a, e) if u < v else (e, a)
                coeff[key] = coeff.get(key, 0) + c
        else:
            if offset == 0:
                if vlo <= mt <= vhi:
                    key = (a, mt) if u < v else (mt, a)
                    coeff[key] = coeff.get(key, 0) + 1
                continue
            jmax = mt - vlo
            for j in range(0, int(jmax) + 1):
                e = mt - j
                if e > vhi:
                    continue
                c = binom_general(mt, j) * offset ** j if j else binom_general(mt, j)
                key = (a, e) if u < v else (e, a)
                coeff[key] = coeff.get(key, 0) + c
    vars = tuple(sorted((u, v)))
    known = {u: ucap, v: vcap}
    out = Series(vars, known, coeff, mode)
    return out.prune()
