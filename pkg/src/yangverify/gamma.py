"""Gamma-function machinery.

Symbolic side: products of Gamma factors whose arguments are affine forms in
the spectral variables (already divided by 2*hbar).  Reduction applies
Gamma(x+1) = x*Gamma(x) within each congruence class and evaluates constant
arguments exactly at integers and half-integers, producing rational factors,
sqrt(pi) radicals and pole/zero orders.

Numeric side: log-Gamma via scipy (Lanczos-class, reflection for Re < 1/2),
relative accuracy ~1e-14 away from poles, plus truncated Gauss products for
the convergence property tests.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from gmpy2 import mpq
from scipy.special import loggamma as _loggamma

from .affine import Affine
from .scalars import Radical, Rat, is_exact_value


class GammaPoleError(ArithmeticError):
    """Gamma evaluated at a non-positive integer."""


def log_gamma(z: complex) -> complex:
    z = complex(z)
    if z.imag == 0 and z.real == round(z.real) and z.real <= 0:
        raise GammaPoleError(f"Gamma pole at {z}")
    return complex(_loggamma(z))


def gamma_value(z: complex) -> complex:
    return cmath.exp(log_gamma(z))


def factorial_q(n: int) -> Rat:
    out = mpq(1)
    for k in range(2, n + 1):
        out *= k
    return out


def gamma_exact(q: Rat):
    """Exact Gamma at a rational argument.

    Returns ("finite", Radical) for integer/half-integer non-pole arguments,
    ("pole", leading Radical) at non-positive integers where the leading
    Laurent coefficient is (-1)^n/n!, and ("other", None) otherwise.
    """
    q = mpq(q)
    d = q.denominator
    if d == 1:
        n = int(q)
        if n >= 1:
            return "finite", Radical(factorial_q(n - 1), 0, 0)
        m = -n
        return "pole", Radical(mpq((-1) ** m) / factorial_q(m), 0, 0)
    if d == 2:
        n = int(q - mpq(1, 2))
        # Gamma(1/2 + n), n integer
        if n >= 0:
            r = factorial_q(2 * n) / (mpq(4) ** n * factorial_q(n))
        else:
            m = -n
            r = mpq(-4) ** m * factorial_q(m) / factorial_q(2 * m)
        return "finite", Radical(r, 0, 1)
    return "other", None


@dataclass
class GammaReduction:
    rad: Radical = field(default_factory=Radical.one)
    factors: List[Tuple[Affine, int]] = field(default_factory=list)
    residual: Dict[Affine, int] = field(default_factory=dict)
    pole_order: int = 0  # net order of vanishing contributed (poles count < 0)


def reduce_gammas(gam: Dict[Affine, int], hbar: Rat) -> GammaReduction:
    """Cancel Gamma factors within integer-shift classes; evaluate constants."""
    out = GammaReduction()
    classes: Dict[tuple, list] = {}
    for aff, e in gam.items():
        if e == 0:
            continue
        if aff.is_const and is_exact_value(aff.const):
            kind, val = gamma_exact(aff.const)
            if kind == "finite":
                out.rad = out.rad.mul(val.pow(e, hbar), hbar)
            elif kind == "pole":
                # Gamma(q)^e ~ (leading/eps)^e: vanishing order -e
                out.pole_order -= e
                out.rad = out.rad.mul(val.pow(e, hbar), hbar)
            else:
                out.residual[aff] = out.residual.get(aff, 0) + e
            continue
        if not is_exact_value(aff.const):
            out.residual[aff] = out.residual.get(aff, 0) + e
            continue
        frac = mpq(aff.const) - (mpq(aff.const).numerator // mpq(aff.const).denominator)
        classes.setdefault((aff.terms, frac), []).append((mpq(aff.const), e))
    for (terms, _), entries in classes.items():
        base = min(c for c, _ in entries)
        net = 0
        for c, e in entries:
            n = int(c - base)
            for j in range(n):
                out.factors.append((Affine(base + j, terms), e))
            net += e
        if net:
            out.residual[Affine(base, terms)] = out.residual.get(Affine(base, terms), 0) + net
    return out


def gauss_product_partial(alphas, K: int) -> complex:
    """prod_{k=0}^{K} prod_i (k + alpha_i)^{e_i}, numerically."""
    out = 1.0 + 0j
    for k in range(K + 1):
        for a, e in alphas:
            out *= (k + complex(a)) ** e
    return out


def gauss_product_closed(alphas) -> complex:
    """lim_K of the partial product: prod_i Gamma(alpha_i)^{-e_i}.

    Requires sum e_i = 0 and sum e_i alpha_i = 0 (else the product diverges).
    """
    se = sum(e for _, e in alphas)
    sa = sum(complex(a) * e for a, e in alphas)
    if se != 0 or abs(sa) > 1e-12:
        raise ArithmeticError("unbalanced Gauss product")
    return cmath.exp(-sum(e * log_gamma(a) for a, e in alphas))
