"""Dev: DY2 line 1 (ee exchange) and line 7 (ef commutator = delta terms)."""
import time
from gmpy2 import mpq

from yangverify.affine import Affine
from yangverify.scalars import exact_context
from yangverify.fock import FockState, TruncationPolicy, partitions_up_to
from yangverify.series import delta_series, expand_affine_power, known_intersection, _lo, _hi
from yangverify.vertex import Applier, SeriesVector
from yangverify.currents import (current_e, current_f, current_h_minus,
                                 current_h_plus)

ctx = exact_context(1)
W = 4
DOUT = 4
M = 2
caps = {"u": (-W, W), "v": (-W, W)}
order = ("u", "v")
pol = TruncationPolicy(D=DOUT + W + 2 * (M + 1), M=M + 1, mode_cutoff=6, window=W)

eu = current_e("u", ctx)
ev = current_e("v", ctx)
fv = current_f("v", ctx)
hplus_u = current_h_plus("u", ctx)
hminus_v = current_h_minus("v", ctx)

poly = lambda aff: expand_affine_power(aff, 1, order, caps, "exact")
u_, v_ = Affine.var("u"), Affine.var("v")
h = ctx.hbar

mom2s = [m for m in range(-2 * M, 2 * M + 1)]
parts = partitions_up_to(DOUT)

t0 = time.time()
# --- line 1: (u-v-h) e(u)e(v) = (u-v+h) e(v)e(u)
bad = tested = 0
for m2 in mom2s:
    capfn_e = lambda mm2: mm2 + DOUT + W  # second op e(u): u-exp = +m2
    for part in parts:
        s = FockState(part, m2)
        sv = SeriesVector.basis(s)
        x1 = Applier(eu, ctx, pol, caps, order).apply(
            Applier(ev, ctx, pol, caps, order).apply(sv, deg_cap_fn=capfn_e),
            out_deg=DOUT)
        x2 = Applier(ev, ctx, pol, caps, order).apply(
            Applier(eu, ctx, pol, caps, order).apply(sv, deg_cap_fn=capfn_e),
            out_deg=DOUT)
        L = x1.mul_series(poly(u_ - v_ - h), caps).sub(
            x2.mul_series(poly(u_ - v_ + h), caps))
        for st, ser in L.terms.items():
            for k, c in ser.coeff.items():
                if c != 0 and all(abs(x) <= W for x in k):
                    bad += 1
        tested += 1
print(f"line1 ee: {tested} states checked, nonzero in-window coeffs: {bad}  [{time.time()-t0:.1f}s]")

# --- line 7: [e(u), f(v)] = (1/h)(delta(u-v-h) h+(u) - delta(u-v) h-(v))
t0 = time.time()
bad = badreg = tested = 0
hcaps = {"u": (-(2 * W + 1), W), "v": (-(2 * W + 1), 2 * W + 1)}
for m2 in mom2s:
    for part in parts:
        s = FockState(part, m2)
        sv = SeriesVector.basis(s)
        x1 = Applier(eu, ctx, pol, hcaps, order).apply(
            Applier(fv, ctx, pol, hcaps, order).apply(
                sv, deg_cap_fn=lambda mm2: mm2 + DOUT + W),
            out_deg=DOUT)
        x2 = Applier(fv, ctx, pol, hcaps, order).apply(
            Applier(eu, ctx, pol, hcaps, order).apply(
                sv, deg_cap_fn=lambda mm2: -mm2 + DOUT + W),
            out_deg=DOUT)
        lhs = x1.sub(x2)
        hp = Applier(hplus_u, ctx, pol, hcaps, order).apply(sv, out_deg=DOUT)
        hm = Applier(hminus_v, ctx, pol, hcaps, order).apply(sv, out_deg=DOUT)
        d1 = delta_series("u", "v", h, (-W, W), (-W, W), "exact")
        d0 = delta_series("u", "v", 0, (-W, W), (-W, W), "exact")
        rhs = hp.mul_series(d1, caps).sub(hm.mul_series(d0, caps)).scale(1 / mpq(h))
        diff = lhs.sub(rhs)
        for st, ser in diff.terms.items():
            reg = ser.known
            for ku in range(-W, W + 1):
                for kv in range(-W, W + 1):
                    key = tuple(ku if vv == "u" else kv for vv in ser.vars)
                    val = ser.coeff.get(key, mpq(0))
                    inreg = all(_lo(reg[vv][0]) <= key[i] <= _hi(reg[vv][1])
                                for i, vv in enumerate(ser.vars))
                    if not inreg:
                        if val != 0:
                            badreg += 1
                        continue
                    if val != 0:
                        bad += 1
                        if bad < 6:
                            print("MISMATCH", s, st, key, val)
        tested += 1
print(f"line7 ef: {tested} states, nonzero-in-region: {bad}, nonzero-out-of-region: {badreg}  [{time.time()-t0:.1f}s]")
