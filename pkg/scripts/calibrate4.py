"""Fourth pass: single-well design explorer near the hydro-balance fold.

For a shared liquid density, anchor each candidate well at
(q_target, prh_target) and map its production surface, gain profile,
failure cells, and fast-mode stiffness. Then assemble a triple and
report the static improvement preview.

Run: python3 scripts/calibrate4.py
"""

import sys
from math import isnan

import numpy as np

sys.path.insert(0, "src")
sys.path.insert(0, "scripts")

from calibrate import GEOM, P_PUMP, PLATEAUS, anchor_thetas, make_consts
from calibrate3 import WellDesign, grid_opt, j_at, PRICES
from gaslift_rto.model import (ControlInputs, DisturbanceState,
                               ModelDomainError, NoConvergence, ThetaVector,
                               steady_state_solve)


def probe_well(q_target, prh_target, consts, label):
    anc = anchor_thetas(consts, q_target, prh_target)
    if anc is None:
        print(f"  {label}: anchor infeasible")
        return None
    w = WellDesign(anc[0], anc[1], consts)
    rows = []
    for vo in (0.4, 0.6, 0.8, 1.0):
        qs = [w.ql(u, vo) for u in (1.0, 1.5, 2.5, 4.0, 5.0)]
        lam = min((w.lam(u, vo) for u in (1.0, 2.5, 5.0)
                   if not isnan(w.ql(u, vo))), default=float("nan"))
        rows.append((vo, qs, lam))
    print(f"  {label}: thr={anc[0]:.3e} tht={anc[1]:.3e} "
          f"dPres={P_PUMP - anc[2]:6.0f}")
    for vo, qs, lam in rows:
        msg = " ".join("  nan" if isnan(q) else f"{q:5.2f}" for q in qs)
        g25 = ("  nan" if isnan(qs[2]) or isnan(qs[4])
               else f"{(qs[4] - qs[2]) / 2.5:4.2f}")
        print(f"    vo={vo:3.1f}: Ql(1/1.5/2.5/4/5)= {msg}  "
              f"gain[2.5->5]={g25}  lam={lam:9.1f}")
    return w


def try_triple(wells, label):
    if any(w is None for w in wells):
        print(f"=== {label}: missing well design")
        return
    Jf_tot = Jo_tot = 0.0
    rows = []
    for (dur, *vo3) in PLATEAUS:
        Jf = j_at(wells, vo3, (2.5, 2.5, 2.5))
        Jo, uo = grid_opt(wells, vo3)
        rows.append((vo3, Jf, Jo, uo))
        Jf_tot += dur * Jf
        Jo_tot += dur * Jo
    imp = 100.0 * (Jo_tot / Jf_tot - 1.0)
    print(f"=== {label}: static imp = {imp:5.1f}%")
    for vo3, Jf, Jo, uo in rows:
        print(f"    vo={vo3} Jf={Jf:6.1f} Jo={Jo:6.1f} (+{100*(Jo/Jf-1):4.1f}%) u*={uo}")


if __name__ == "__main__":
    for rho_l in (1400.0, 1415.0, 1425.0):
        consts = make_consts(rho_l, 0.005)
        print(f"### rho_l = {rho_l}")
        probe_well(10.0, 0.005, consts, "hot q10/prh.005")
        probe_well(9.0, 0.005, consts, "hot q9/prh.005")
        probe_well(8.0, 0.01, consts, "warm q8/prh.01")
        probe_well(6.0, 0.02, consts, "med q6/prh.02")
        probe_well(5.0, 0.03, consts, "small q5/prh.03")
        probe_well(4.0, 0.05, consts, "flat q4/prh.05")
    # assemble triples at the density that looks best
    consts = make_consts(1415.0, 0.005)
    w_hot = probe_well(10.0, 0.005, consts, "w3 hot")
    w_med = probe_well(6.0, 0.02, consts, "w1 med")
    w_flat = probe_well(4.0, 0.05, consts, "w2 flat")
    try_triple([w_med, w_flat, w_hot], "1415: med/flat/hot")
