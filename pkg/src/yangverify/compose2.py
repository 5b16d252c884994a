"""Momentum-factorized two-current composition.

For products of e/f currents the zero mode is a pure monomial u^{+-da}, so
the boson content of e(u)X e(v)Y |p, m> is momentum independent.  This module
builds the boson-level transition maps of a single current once, composes two
of them over the intermediate states, and only then slices the result per
momentum by shifting exponents, which turns the O(#momenta) repetition of the
dominated DY2 work into exponent bookkeeping.

Exponent keys are packed ints: key = e_first * STRIDE + e_second with the
variable order fixed by the caller.
"""

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

from gmpy2 import mpq

from .fock import Partition, partition_degree, partitions_up_to
from .series import binom_general
from .vertex import VertexFactor

STRIDE = 1 << 12
HALF = STRIDE // 2


def _poly_of_points(points, n: int, sign: int, width: tuple) -> Dict[int, object]:
    """sum_j w_j (var+shift)^ (sign*n) as {exp: coeff}; shifts are constants."""
    lo, hi = width
    out: Dict[int, object] = {}
    for aff, w in points:
        vars = aff.variables
        if len(vars) != 1:
            raise ValueError("core maps need single-variable factors")
        c = aff.const
        e = sign * n
        if e >= 0:
            for k in range(e + 1):
                coeff = w * binom_general(e, k) * c ** (e - k)
                if lo <= k <= hi:
                    out[k] = out.get(k, 0) + coeff
        else:
            if c == 0:
                out[e] = out.get(e, 0) + w
            else:
                kk = e
                j = 0
                while kk >= lo:
                    coeff = w * binom_general(e, j) * c ** j
                    if kk <= hi:
                        out[kk] = out.get(kk, 0) + coeff
                    kk -= 1
                    j += 1
    return {k: v for k, v in out.items() if v != 0}


def _pmul(a: Dict[int, object], b: Dict[int, object], lo: int, hi: int):
    out: Dict[int, object] = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = ka + kb
            if lo <= k <= hi:
                out[k] = out.get(k, 0) + ca * cb
    return out


def boson_core_map(factor: VertexFactor, inputs: Sequence[Partition],
                   out_cap: int, width: tuple, hbar) -> Dict[Partition, list]:
    """Boson-only transition map p -> [(q, {exp: coeff})] for one current.

    Zero modes are ignored (handled at slice time); `width` clips the carried
    variable exponents, `out_cap` the output boson degree.
    """
    f = factor.canonical(hbar)
    if f.ann.ladders or f.cre.ladders:
        raise ValueError("core maps need finite factors")
    lo, hi = width
    ann1 = {n: _poly_of_points(f.ann.points, n, -1, width) for n in range(1, 40)}
    cre1 = {n: _poly_of_points(f.cre.points, n, +1, (0, max(out_cap, 0)))
            for n in range(1, out_cap + 1)}

    # creation multiset polynomials, sorted by degree
    cre_list: List[Tuple[Partition, int, Dict[int, object]]] = [((), 0, {0: mpq(1)})]
    if not f.cre.is_empty:
        def extend(part, poly, max_mode, rem):
            for n in range(1, min(max_mode, rem) + 1):
                mult = dict(part).get(n, 0)
                newpoly = {k: v * mpq(1, n * (mult + 1))
                           for k, v in _pmul(poly, cre1[n], 0, out_cap).items()}
                d = dict(part)
                d[n] = mult + 1
                newpart = tuple(sorted(d.items()))
                cre_list.append((newpart, partition_degree(newpart), newpoly))
                extend(newpart, newpoly, n, rem - n)
        extend((), {0: mpq(1)}, out_cap, out_cap)
        cre_list.sort(key=lambda t: t[1])

    ann_pows: Dict[Tuple[int, int], Dict[int, object]] = {}

    def ann_pow(n, k):
        if (n, k) not in ann_pows:
            if k == 1:
                ann_pows[(n, k)] = ann1[n]
            else:
                ann_pows[(n, k)] = _pmul(ann_pow(n, k - 1), ann1[n], lo, 0)
        return ann_pows[(n, k)]

    out: Dict[Partition, list] = {}
    for p in inputs:
        acc: Dict[Partition, Dict[int, object]] = {}
        removals = [((), {0: mpq(1)})]
        for n, mult in p:
            nxt = []
            for kept, w in removals:
                nxt.append((kept + ((n, mult),), w))
                for k in range(1, mult + 1):
                    wk = _pmul(w, ann_pow(n, k), lo, 0)
                    if not wk:
                        continue
                    b = binom_general(mult, k)
                    if b != 1:
                        wk = {kk: v * b for kk, v in wk.items()}
                    if mult - k:
                        nxt.append((kept + ((n, mult - k),), wk))
                    else:
                        nxt.append((kept, wk))
            removals = nxt
        for kept, w in removals:
            rem = tuple(t for t in kept if t[1])
            rem_deg = partition_degree(rem)
            room = out_cap - rem_deg
            if room < 0:
                continue
            if f.cre.is_empty:
                tgt = acc.setdefault(rem, {})
                for k, c in w.items():
                    tgt[k] = tgt.get(k, 0) + c
                continue
            for lam, deg, poly in cre_list:
                if deg > room:
                    break
                d = dict(rem)
                for n, mult in lam:
                    d[n] = d.get(n, 0) + mult
                q = tuple(sorted(d.items()))
                prod = _pmul(w, poly, lo, hi)
                if not prod:
                    continue
                tgt = acc.setdefault(q, {})
                for k, c in prod.items():
                    tgt[k] = tgt.get(k, 0) + c
        out[p] = [(q, {k: c for k, c in d.items() if c != 0})
                  for q, d in acc.items() if any(c != 0 for c in d.values())]
    return out


def compose_cores(map_first: Dict[Partition, list],
                  map_second: Dict[Partition, list],
                  width2: tuple) -> Dict[Partition, Dict[Partition, dict]]:
    """C[p][r] = sum_q second[q->r](u) x first[p->q](v), packed (u,v) keys.

    `map_first` carries the inner variable (exponent packed in the low slot),
    `map_second` the outer one (high slot).
    """
    lo2, hi2 = width2
    out: Dict[Partition, Dict[Partition, dict]] = {}
    for p, firsts in map_first.items():
        accp = out.setdefault(p, {})
        for q, poly1 in firsts:
            seconds = map_second.get(q)
            if not seconds:
                continue
            for r, poly2 in seconds:
                tgt = accp.get(r)
                if tgt is None:
                    tgt = accp[r] = {}
                for k2, c2 in poly2.items():
                    base = k2 * STRIDE
                    for k1, c1 in poly1.items():
                        key = base + k1
                        prev = tgt.get(key)
                        tgt[key] = c1 * c2 if prev is None else prev + c1 * c2
    return out


def slice_momentum(block: dict, shift_outer: int, shift_inner: int,
                   window: int) -> dict:
    """Shift packed (outer, inner) exponents and clip to |exp| <= window."""
    out = {}
    for key, c in block.items():
        k1 = (key + HALF) % STRIDE - HALF
        k2 = (key - k1) // STRIDE
        e2 = k2 + shift_outer
        e1 = k1 + shift_inner
        if -window <= e1 <= window and -window <= e2 <= window and c != 0:
            out[(e2, e1)] = c
    return out
