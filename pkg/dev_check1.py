"""Dev validation: prefactor x :AB: == A.B applied to states (exact mode),
compared on the intersection of tracked known-regions."""
from gmpy2 import mpq

from yangverify.scalars import exact_context
from yangverify.fock import FockState, TruncationPolicy, make_partition
from yangverify.series import known_intersection, _lo, _hi
from yangverify.vertex import Applier, SeriesVector, contract_prefactor, merge_factors
from yangverify.currents import current_e, current_f

ctx = exact_context(1)
W = 5
DOUT = 6
M = 4
caps = {"u": (-W, W), "v": (-W, W)}
# prefactor series needs reach beyond the target window by the op's support
WP = W + DOUT + 2 * M + 2
pcaps = {"u": (-WP, WP), "v": (-WP, WP)}
order = ("u", "v")
pol = TruncationPolicy(D=16, M=M, mode_cutoff=6, window=W)

A = current_e("u", ctx)
B = current_f("v", ctx)

pref = contract_prefactor(A, B, ctx.hbar, pivot="u")
merged = merge_factors([A, B], ctx.hbar)

for part, m2 in [((), 0), (make_partition([1]), 1), (make_partition([1, 2]), 1),
                 (make_partition([3]), -2), (make_partition([1, 1, 2]), 3)]:
    state = FockState(part, m2)
    sv = SeriesVector.basis(state)
    apB = Applier(B, ctx, pol, pcaps, order)
    apA = Applier(A, ctx, pol, pcaps, order)
    direct = apA.apply(apB.apply(sv), out_deg=DOUT)
    apM = Applier(merged, ctx, pol, pcaps, order)
    rhs_op = apM.apply(sv, out_deg=DOUT)
    rad, pser = pref.series(pcaps, order, ctx.mode, ctx.hbar)
    assert rad.is_one
    rhs = rhs_op.mul_series(pser, pcaps)

    bad = tested = 0
    for s in sorted(set(direct.terms) | set(rhs.terms),
                    key=lambda t: (t.degree, t.partition)):
        d = direct.terms.get(s)
        r = rhs.terms.get(s)
        if d is None or r is None:
            # absent = zero within that route's region; compare stored of the other
            present = d or r
            reg = present.known
            for k, c in present.coeff.items():
                if all(abs(k[i]) <= W for i, v in enumerate(present.vars)) and c != 0:
                    ok = all(_lo(reg[v][0]) <= k[i] <= _hi(reg[v][1])
                             for i, v in enumerate(present.vars))
                    if ok:
                        bad += 1
            continue
        reg = known_intersection(d, r)
        for ku in range(-W, W + 1):
            for kv in range(-W, W + 1):
                if not (_lo(reg["u"][0]) <= ku <= _hi(reg["u"][1])):
                    continue
                if not (_lo(reg["v"][0]) <= kv <= _hi(reg["v"][1])):
                    continue
                key = (ku, kv)
                tested += 1
                if d.coeff.get(key, mpq(0)) != r.coeff.get(key, mpq(0)):
                    bad += 1
                    if bad < 5:
                        print("MISMATCH", s, key, d.coeff.get(key), r.coeff.get(key))
    print(f"state {state}: tested {tested} in-region coefficients, mismatches {bad}")
