"""Dev: numeric-point comparison of direct composition vs prefactor route."""
from yangverify.scalars import numeric_context
from yangverify.fock import FockState, TruncationPolicy, make_partition
from yangverify.vertex import Applier, SeriesVector, contract_prefactor, merge_factors
from yangverify.currents import current_e, current_f

ctx = numeric_context(1.0)
pol = TruncationPolicy(D=22, M=4, mode_cutoff=6, window=5)
caps = {}
order = ()

uval, vval = 3.0 + 0.4j, 0.45 - 0.2j  # |v| < |u|
A = current_e("u", ctx)
B = current_f("v", ctx)

asn = {"u": uval, "v": vval}
apB = Applier(B, ctx, pol, caps, order, assignment=asn)
apA = Applier(A, ctx, pol, caps, order, assignment=asn)
apM = Applier(merge_factors([A, B], ctx.hbar_build), ctx, pol, caps, order, assignment=asn)

state = FockState(make_partition([1, 2]), 1)
sv = SeriesVector.basis(state, mode="numeric")

direct = apA.apply(apB.apply(sv), out_deg=6)
rhs_op = apM.apply(sv, out_deg=6)

pref = contract_prefactor(A, B, 1, pivot="u")
pval = pref.numeric(asn, 1.0)
print("pref value:", pval, "expected:", 1.0 / ((uval - vval - 1) * (uval - vval)))

states = sorted(set(direct.terms) | set(rhs_op.terms),
                key=lambda s: (s.degree, s.partition))
worst = 0.0
for s in states:
    d = direct.terms.get(s)
    r = rhs_op.terms.get(s)
    dv = d.coeff.get((), 0j) if d else 0j
    rv = (r.coeff.get((), 0j) if r else 0j) * pval
    err = abs(dv - rv) / max(1.0, abs(dv))
    worst = max(worst, err)
    if err > 1e-8:
        print("MISMATCH", s, dv, rv)
print("worst rel err:", worst, "n states:", len(states))
