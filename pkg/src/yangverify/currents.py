"""Bosonized currents of the level-1 realization.

e(u)  = exp(sum a_{-n}/n [(u-h)^n + u^n]) e^{a0} u^{da}  exp(-sum a_n/n u^{-n})
f(u)  = exp(-sum a_{-n}/n [(u+h)^n + u^n]) e^{-a0} u^{-da} exp(sum a_n/n u^{-n})
h-(u) = exp(sum a_{-n}/n [(u-h)^n - (u+h)^n])
h+(u) = exp(sum a_n/n [(u-h)^{-n} - u^{-n}]) ((u-h)/u)^{-da}
k-(z) = phi-(z+h)/phi-(z)
k+(z) = eta+(z)/eta+(z-h)  (annihilation tail, Gamma-ratio zero mode)

with phi+-(z) = exp(a+-(z)) the half-current exponentials and h = hbar.
"""

from __future__ import annotations

from gmpy2 import mpq

from .affine import Affine
from .scalars import Context, Radical
from .vertex import Family, VertexFactor, ZeroMode


def _pt(var: str, shift) -> Affine:
    return Affine(mpq(shift), ((var, mpq(1)),))


def _gam_arg(var: str, num_shift, hbar) -> Affine:
    """(num_shift - var) / (2*hbar) as a Gamma argument."""
    return Affine(mpq(num_shift) / (2 * hbar), ((var, mpq(-1) / (2 * hbar)),))


def phi_plus(var: str, ctx: Context, inv: bool = False) -> VertexFactor:
    s = -1 if inv else 1
    return VertexFactor(f"phi+{'^-1' if inv else ''}({var})",
                        ann=Family.of(points=[(_pt(var, 0), s)]),
                        zero=ZeroMode(0, ((_pt(var, 0), -s),)))


def phi_minus(var: str, ctx: Context, inv: bool = False) -> VertexFactor:
    s = -1 if inv else 1
    return VertexFactor(f"phi-{'^-1' if inv else ''}({var})",
                        cre=Family.of(points=[(_pt(var, 0), s)]),
                        zero=ZeroMode(s))


def current_e(var: str, ctx: Context) -> VertexFactor:
    h = ctx.hbar_build
    return VertexFactor(f"e({var})",
                        cre=Family.of(points=[(_pt(var, -h), 1), (_pt(var, 0), 1)]),
                        ann=Family.of(points=[(_pt(var, 0), -1)]),
                        zero=ZeroMode(2, ((_pt(var, 0), 1),)))


def current_f(var: str, ctx: Context) -> VertexFactor:
    h = ctx.hbar_build
    return VertexFactor(f"f({var})",
                        cre=Family.of(points=[(_pt(var, h), -1), (_pt(var, 0), -1)]),
                        ann=Family.of(points=[(_pt(var, 0), 1)]),
                        zero=ZeroMode(-2, ((_pt(var, 0), -1),)))


def current_h_minus(var: str, ctx: Context) -> VertexFactor:
    h = ctx.hbar_build
    return VertexFactor(f"h-({var})",
                        cre=Family.of(points=[(_pt(var, -h), 1), (_pt(var, h), -1)]))


def current_h_plus(var: str, ctx: Context) -> VertexFactor:
    h = ctx.hbar_build
    return VertexFactor(f"h+({var})",
                        ann=Family.of(points=[(_pt(var, -h), 1), (_pt(var, 0), -1)]),
                        zero=ZeroMode(0, ((_pt(var, -h), -1), (_pt(var, 0), 1))))


def eta_plus(var: str, ctx: Context, inv: bool = False) -> VertexFactor:
    """Regularized product prod_k phi+(z-2kh)/phi+(z-h-2kh), closed-form zero mode."""
    h = ctx.hbar_build
    s = -1 if inv else 1
    return VertexFactor(f"eta+{'^-1' if inv else ''}({var})",
                        ann=Family.of(ladders=[(_pt(var, 0), s), (_pt(var, -h), -s)]),
                        zero=ZeroMode(0, (),
                                      ((_gam_arg(var, 0, h), s),
                                       (_gam_arg(var, h, h), -s)),
                                      Radical(mpq(1), -s, 0)))


def k_minus(var: str, ctx: Context) -> VertexFactor:
    h = ctx.hbar_build
    return VertexFactor(f"k-({var})",
                        cre=Family.of(points=[(_pt(var, h), 1), (_pt(var, 0), -1)]))


def k_minus_inv(var: str, ctx: Context) -> VertexFactor:
    h = ctx.hbar_build
    return VertexFactor(f"k-^-1({var})",
                        cre=Family.of(points=[(_pt(var, h), -1), (_pt(var, 0), 1)]))


def k_plus(var: str, ctx: Context, inv: bool = False) -> VertexFactor:
    h = ctx.hbar_build
    s = -1 if inv else 1
    return VertexFactor(f"k+{'^-1' if inv else ''}({var})",
                        ann=Family.of(ladders=[(_pt(var, 0), s), (_pt(var, -h), -2 * s),
                                               (_pt(var, -2 * h), s)]),
                        zero=ZeroMode(0, (),
                                      ((_gam_arg(var, 0, h), s),
                                       (_gam_arg(var, h, h), -2 * s),
                                       (_gam_arg(var, 2 * h, h), s))))


def frenkel_kac_e(var: str, ctx: Context) -> VertexFactor:
    return VertexFactor(f"eFK({var})",
                        cre=Family.of(points=[(_pt(var, 0), 2)]),
                        ann=Family.of(points=[(_pt(var, 0), -1)]),
                        zero=ZeroMode(2, ((_pt(var, 0), 1),)))


def frenkel_kac_f(var: str, ctx: Context) -> VertexFactor:
    return VertexFactor(f"fFK({var})",
                        cre=Family.of(points=[(_pt(var, 0), -2)]),
                        ann=Family.of(points=[(_pt(var, 0), 1)]),
                        zero=ZeroMode(-2, ((_pt(var, 0), -1),)))


_BUILDERS = {
    "e": current_e,
    "f": current_f,
    "h+": current_h_plus,
    "h-": current_h_minus,
    "k-": k_minus,
    "k+": k_plus,
    "phi+": phi_plus,
    "phi-": phi_minus,
}


def build_current(name: str, var: str, ctx: Context) -> VertexFactor:
    try:
        return _BUILDERS[name](var, ctx)
    except KeyError:
        raise ValueError(f"unknown current {name!r}") from None
