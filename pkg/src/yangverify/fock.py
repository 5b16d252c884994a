"""Graded truncated Fock modules V0, V1.

Basis states are monomials prod a_{-n}^{mult} acting on e^{m a0} with
half-integer momentum m (stored doubled as `mom2` to stay integral); the
sector is mom2 mod 2.  The commutation relations are [a_n, a_m] = n d_{n+m,0}
and [del_alpha, a0] = 2, so u^{del_alpha} scales a momentum-m state by u^{2m}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

from gmpy2 import mpq

from .scalars import EXACT, NUMERIC

Partition = Tuple[Tuple[int, int], ...]  # sorted ((mode, mult), ...)


def partition_degree(p: Partition) -> int:
    return sum(n * m for n, m in p)


def make_partition(modes: Iterable[int]) -> Partition:
    d: Dict[int, int] = {}
    for n in modes:
        d[n] = d.get(n, 0) + 1
    return tuple(sorted(d.items()))


def partitions_up_to(degree: int) -> List[Partition]:
    """All boson partitions with degree <= `degree`, ascending in degree."""
    out: List[List[Partition]] = [[] for _ in range(degree + 1)]
    out[0].append(())

    def helper(rem: int, max_mode: int):
        if rem == 0:
            yield []
            return
        for n in range(min(rem, max_mode), 0, -1):
            for rest in helper(rem - n, n):
                yield [n] + rest

    for d in range(1, degree + 1):
        for modes in helper(d, d):
            out[d].append(make_partition(modes))
    return [p for bucket in out for p in bucket]


@dataclass(frozen=True)
class FockState:
    partition: Partition
    mom2: int  # doubled momentum; sector = mom2 mod 2

    @property
    def sector(self) -> int:
        return self.mom2 & 1

    @property
    def degree(self) -> int:
        return partition_degree(self.partition)

    def __repr__(self):
        bos = "*".join(f"a(-{n})^{m}" if m > 1 else f"a(-{n})" for n, m in self.partition)
        return f"|{bos or '1'}; m={self.mom2}/2>"


VACUUM0 = FockState((), 0)
VACUUM1 = FockState((), 1)


@dataclass
class TruncationPolicy:
    """Cutoffs standing in for the formal completion of the modules."""

    D: int = 8               # max boson degree kept
    M: int = 3               # |momentum| <= M (mom2 bounded by 2M)
    mode_cutoff: int = 8     # max |k| for extracted modes
    window: int = 8          # default symmetric exponent window per variable

    def __post_init__(self):
        if self.D < 1 or self.M < 1 or self.mode_cutoff < 1:
            raise ValueError("cutoffs must be >= 1")

    @property
    def mom2_max(self) -> int:
        return 2 * self.M


class FockVector:
    """Finite linear combination of basis states of one sector."""

    __slots__ = ("terms", "mode", "loss")

    def __init__(self, terms: Dict[FockState, object] | None = None,
                 mode: str = EXACT, loss: int = 0):
        self.terms = {s: c for s, c in (terms or {}).items() if c != 0}
        self.mode = mode
        self.loss = loss
        sectors = {s.sector for s in self.terms}
        if len(sectors) > 1:
            raise ValueError("mixed sectors in one FockVector")

    @staticmethod
    def basis(state: FockState, mode: str = EXACT) -> "FockVector":
        one = mpq(1) if mode == EXACT else 1.0 + 0j
        return FockVector({state: one}, mode)

    def component_of(self, state: FockState):
        if self.terms and state.sector != next(iter(self.terms)).sector:
            raise ValueError("sector mismatch in component_of")
        zero = mpq(0) if self.mode == EXACT else 0j
        return self.terms.get(state, zero)

    def add(self, other: "FockVector", scale=1) -> "FockVector":
        if self.mode != other.mode:
            raise ValueError("mode mismatch")
        terms = dict(self.terms)
        for s, c in other.terms.items():
            terms[s] = terms.get(s, 0) + c * scale
        return FockVector(terms, self.mode, self.loss + other.loss)

    def scale(self, c) -> "FockVector":
        return FockVector({s: v * c for s, v in self.terms.items()}, self.mode, self.loss)

    def __repr__(self):
        items = ", ".join(f"{c}*{s}" for s, c in sorted(
            self.terms.items(), key=lambda t: (t[0].degree, t[0].partition))[:6])
        return f"FockVector({items}{'...' if len(self.terms) > 6 else ''})"


def apply_boson(n: int, vec: FockVector, policy: TruncationPolicy) -> FockVector:
    """Action of a_n: creation for n < 0 (degree-truncated), annihilation for n > 0."""
    if n == 0:
        raise ValueError("a_0 acts through momentum, use zero-mode operations")
    out: Dict[FockState, object] = {}
    loss = vec.loss
    for state, c in vec.terms.items():
        d = dict(state.partition)
        if n < 0:
            mode = -n
            if state.degree + mode > policy.D:
                loss += 1
                continue
            d[mode] = d.get(mode, 0) + 1
            s2 = FockState(tuple(sorted(d.items())), state.mom2)
            out[s2] = out.get(s2, 0) + c
        else:
            mult = d.get(n, 0)
            if mult == 0:
                continue
            # [a_n, a_{-n}^m] = n*m*a_{-n}^{m-1}
            if mult == 1:
                del d[n]
            else:
                d[n] = mult - 1
            s2 = FockState(tuple(sorted(d.items())), state.mom2)
            out[s2] = out.get(s2, 0) + c * n * mult
    return FockVector(out, vec.mode, loss)


def apply_exp_a0(sign: int, vec: FockVector, policy: TruncationPolicy) -> FockVector:
    """e^{sign*a0}: shifts the momentum by sign (mom2 by 2*sign)."""
    out: Dict[FockState, object] = {}
    loss = vec.loss
    for state, c in vec.terms.items():
        m2 = state.mom2 + 2 * sign
        if abs(m2) > policy.mom2_max:
            loss += 1
            continue
        s2 = FockState(state.partition, m2)
        out[s2] = out.get(s2, 0) + c
    return FockVector(out, vec.mode, loss)


def momentum_weights(vec: FockVector) -> Dict[FockState, int]:
    """Exponent 2m carried by u^{del_alpha} on each basis state."""
    return {s: s.mom2 for s in vec.terms}
