"""Independent brute-force oracle for vertex-operator application.

Expands the exponentials of a VertexFactor by repeated apply_boson action,
never sharing code with the production Applier: annihilation/creation parts
are applied as truncated exp-series of first-order boson operators.
Coefficients are dicts {exponent-key: rational}, exponent keys over a fixed
variable tuple.
"""

from gmpy2 import mpq

from yangverify.fock import FockState, FockVector, apply_boson
from yangverify.series import expand_affine_power


def _aff_pow_dict(aff, e, avars, width, assignment=None):
    a = aff
    if assignment:
        for v, val in assignment.items():
            if val is not None:
                a = a.subst_const(v, val)
    if a.is_const:
        if e >= 0:
            val = a.const ** e
        else:
            val = mpq(1) / (mpq(a.const) ** (-e)) if not isinstance(a.const, complex) \
                else a.const ** e
        return {(0,) * len(avars): val}
    caps = {v: (-width, width) for v in avars}
    s = expand_affine_power(a, e, avars, caps, "exact" if not isinstance(a.const, complex) else "numeric")
    out = {}
    for k, c in s.coeff.items():
        key = tuple(k[s.vars.index(v)] if v in s.vars else 0 for v in avars)
        out[key] = out.get(key, 0) + c
    return out


def _ser_mul(d1, d2, width, nv):
    out = {}
    for k1, c1 in d1.items():
        for k2, c2 in d2.items():
            k = tuple(k1[i] + k2[i] for i in range(nv))
            if all(abs(x) <= width for x in k):
                out[k] = out.get(k, 0) + c1 * c2
    return out


def brute_apply(factor, state, hbar, avars, width, deg_max, mom2_max,
                assignment=None):
    """Apply one canonical vertex factor to a basis state.

    Returns {FockState: {exp-key: coeff}}; `width` is the internal exponent
    cutoff (choose generously), `deg_max` the output boson-degree cutoff.
    """
    f = factor.canonical(hbar)
    if f.ann.ladders or f.cre.ladders or f.zero.gam:
        raise ValueError("brute oracle handles finite factors only")
    nv = len(avars)
    one = {(0,) * nv: mpq(1)}

    class Pol:
        D = 10 ** 9
        mom2_max = 10 ** 9

    def fam_coeff(fam, n, side):
        out = {}
        for a, w in fam.points:
            for k, c in _aff_pow_dict(a, side * n, avars, width, assignment).items():
                out[k] = out.get(k, 0) + w * c
        return out

    # annihilation phase: exp(sum_n (a_n/n) A_n)
    vec = {state: one}

    def x_ann(vec):
        out = {}
        for st, ser in vec.items():
            for n in range(1, st.degree + 1):
                an = fam_coeff(f.ann, n, -1)
                if not an:
                    continue
                fv = apply_boson(n, FockVector({st: mpq(1)}), Pol)
                for st2, c2 in fv.terms.items():
                    add = _ser_mul(ser, {k: c * c2 / n for k, c in an.items()},
                                   width, nv)
                    tgt = out.setdefault(st2, {})
                    for k, c in add.items():
                        tgt[k] = tgt.get(k, 0) + c
        return out

    acc = {st: dict(ser) for st, ser in vec.items()}
    cur = vec
    fact = 1
    for j in range(1, 64):
        cur = x_ann(cur)
        if not cur:
            break
        fact *= j
        for st, ser in cur.items():
            tgt = acc.setdefault(st, {})
            for k, c in ser.items():
                tgt[k] = tgt.get(k, 0) + c / fact

    # zero modes: momentum multiplier, then charge shift
    out = {}
    for st, ser in acc.items():
        m2 = st.mom2
        zser = {(0,) * nv: f.zero.rad.pow(m2, hbar).rational_value()
                if not isinstance(hbar, complex) else
                f.zero.rad.numeric(hbar) ** 1}
        if isinstance(hbar, complex):
            zser = {(0,) * nv: f.zero.rad.pow(m2, mpq(1)).numeric(hbar)}
        for a, e in f.zero.powers:
            zser = _ser_mul(zser, _aff_pow_dict(a, e * m2, avars, width, assignment),
                            width, nv)
        new_m2 = m2 + f.zero.charge2
        if abs(new_m2) > mom2_max:
            continue
        st2 = FockState(st.partition, new_m2)
        ser2 = _ser_mul(ser, zser, width, nv)
        tgt = out.setdefault(st2, {})
        for k, c in ser2.items():
            tgt[k] = tgt.get(k, 0) + c
    vec = out

    # creation phase
    def x_cre(vec):
        outv = {}
        for st, ser in vec.items():
            for n in range(1, deg_max - st.degree + 1):
                cn = fam_coeff(f.cre, n, +1)
                if not cn:
                    continue
                fv = apply_boson(-n, FockVector({st: mpq(1)}), Pol)
                for st2, c2 in fv.terms.items():
                    if st2.degree > deg_max:
                        continue
                    add = _ser_mul(ser, {k: c * c2 / n for k, c in cn.items()},
                                   width, nv)
                    tgt = outv.setdefault(st2, {})
                    for k, c in add.items():
                        tgt[k] = tgt.get(k, 0) + c
        return outv

    acc = {st: dict(ser) for st, ser in vec.items()}
    cur = vec
    fact = 1
    for j in range(1, 64):
        cur = x_cre(cur)
        if not cur:
            break
        fact *= j
        for st, ser in cur.items():
            tgt = acc.setdefault(st, {})
            for k, c in ser.items():
                tgt[k] = tgt.get(k, 0) + c / fact
    return {st: {k: c for k, c in ser.items() if c != 0}
            for st, ser in acc.items() if any(c != 0 for c in ser.values())}


def brute_compose(factors, state, hbar, avars, width, deg_max, mom2_max,
                  assignment=None, stage_degs=None):
    """Apply an ordered product (rightmost first) by brute force.

    `stage_degs[i]` caps the boson degree after applying factors[i]; the
    rightmost-first order means stage_degs is consumed from the end.
    """
    n = len(list(factors))
    if stage_degs is None:
        stage_degs = [deg_max] * n
    vecs = {state: {(0,) * len(avars): mpq(1)}}
    for i in range(n - 1, -1, -1):
        f = factors[i]
        cap = stage_degs[i]
        nxt = {}
        for st, ser in vecs.items():
            res = brute_apply(f, st, hbar, avars, width, cap, mom2_max,
                              assignment)
            for st2, ser2 in res.items():
                prod = _ser_mul(ser, ser2, width, len(avars))
                tgt = nxt.setdefault(st2, {})
                for k, c in prod.items():
                    tgt[k] = tgt.get(k, 0) + c
        vecs = nxt
    return vecs
