"""Third calibration pass: per-well asymmetric designs.

Each well gets its own (theta_res, theta_top) from an anchor pair
(q_target at u = 2.5 sL/min, v_o = 1; P_rh target). The study checks,
per candidate triple:

  * feasibility and spectral stiffness over the (u, v_o) box
  * static improvement: grid-optimal J vs fixed 2.5/2.5/2.5 along the
    depletion plateaus
  * a quasi-static preview of filtered tracking (the 0.4 input filter
    applied on 10 s ticks along the plateau path)
  * per-well rate envelope

Run: python3 scripts/calibrate3.py
"""

import sys
from itertools import product
from math import isnan

import numpy as np

sys.path.insert(0, "src")
sys.path.insert(0, "scripts")

from calibrate import GEOM, P_PUMP, PLATEAUS, anchor_thetas, make_consts
from gaslift_rto import _kernels as K
from gaslift_rto.model import (ControlInputs, DisturbanceState,
                               InfeasibleRegime, ModelDomainError,
                               NoConvergence, ThetaVector,
                               chain_params, jacobians, steady_state_solve)
from gaslift_rto.units import kgps_to_lpm, slpm_to_kgps

PRICES = np.array([20.0, 10.0, 30.0])
U_GRID = np.round(np.arange(1.0, 5.0 + 1e-9, 0.1), 10)
VO_SET = (0.4, 0.5, 0.6, 0.7, 0.8, 1.0)


class WellDesign:
    """Per-well steady production table Q_l(u, vo) with caching."""

    def __init__(self, thr, tht, consts):
        self.thr = thr
        self.tht = tht
        self.consts = consts
        self.par = chain_params(consts, GEOM)
        self.cache = {}

    def ql(self, u, vo):
        key = (round(float(u), 4), round(float(vo), 4))
        if key in self.cache:
            return self.cache[key][0]
        theta = ThetaVector([self.thr] * 3, [self.tht] * 3)
        dist = DisturbanceState(v_o=(vo, vo, vo), P_pump=P_PUMP)
        try:
            st = steady_state_solve(ControlInputs((u, u, u)), dist, theta,
                                    self.consts, GEOM)
            r = K.well_chain(st.m_g[0], st.m_l[0],
                             slpm_to_kgps(u, self.consts.rho_g_std),
                             vo, self.thr, self.tht, float("nan"),
                             P_PUMP, *self.par)
            ql = kgps_to_lpm(r[7], self.consts.rho_l)
            J = jacobians(st, ControlInputs((u, u, u)), dist, theta,
                          self.consts, GEOM)
            lam = np.linalg.eigvals(J.dfdx[0:2, 0:2])
            lam_fast = float(np.min(lam.real))
        except (ModelDomainError, NoConvergence, InfeasibleRegime):
            ql, lam_fast = float("nan"), float("nan")
        self.cache[key] = (ql, lam_fast)
        return ql

    def lam(self, u, vo):
        self.ql(u, vo)
        return self.cache[(round(float(u), 4), round(float(vo), 4))][1]


def design_from_anchor(q_target, prh_target, consts):
    anc = anchor_thetas(consts, q_target, prh_target)
    if anc is None:
        return None
    return WellDesign(anc[0], anc[1], consts)


def grid_opt(wells, vo3):
    tabs = [np.array([w.ql(u, vo) for u in U_GRID])
            for w, vo in zip(wells, vo3)]
    best_J, best_u = -np.inf, None
    for i, u1 in enumerate(U_GRID):
        if isnan(tabs[0][i]):
            continue
        for j, u2 in enumerate(U_GRID):
            if u1 + u2 > 6.5 + 1e-9 or isnan(tabs[1][j]):
                continue
            rem = 7.5 - u1 - u2
            for k, u3 in enumerate(U_GRID):
                if u3 > rem + 1e-9 or isnan(tabs[2][k]):
                    continue
                J = (PRICES[0] * tabs[0][i] + PRICES[1] * tabs[1][j]
                     + PRICES[2] * tabs[2][k])
                if J > best_J:
                    best_J, best_u = J, (u1, u2, u3)
    return best_J, best_u


def j_at(wells, vo3, u3):
    return float(sum(p * w.ql(u, vo)
                     for p, w, u, vo in zip(PRICES, wells, u3, vo3)))


def evaluate(wells, label):
    # feasibility + stiffness over the box
    bad, lam_worst = 0, 0.0
    for w in wells:
        for vo in VO_SET:
            for u in (1.0, 2.5, 5.0):
                if isnan(w.ql(u, vo)):
                    bad += 1
                else:
                    lam_worst = min(lam_worst, w.lam(u, vo))
    # envelopes at vo = 1
    env = [(w.ql(1.0, 1.0), w.ql(2.5, 1.0), w.ql(5.0, 1.0)) for w in wells]
    # static optimum along plateaus
    Jf_tot = Jo_tot = 0.0
    u_first = u_last = None
    plateau_rows = []
    for (dur, *vo3) in PLATEAUS:
        Jf = j_at(wells, vo3, (2.5, 2.5, 2.5))
        Jo, uo = grid_opt(wells, vo3)
        if u_first is None:
            u_first = uo
        u_last = uo
        plateau_rows.append((vo3, Jf, Jo, uo))
        Jf_tot += dur * Jf
        Jo_tot += dur * Jo
    imp_static = 100.0 * (Jo_tot / Jf_tot - 1.0)
    # quasi-static filtered tracking preview (10 s ticks, K_u = 0.4)
    u = np.array([2.5, 2.5, 2.5])
    Jt_tot = Jf2 = 0.0
    for (dur, *vo3) in PLATEAUS:
        _, uo = grid_opt(wells, vo3)
        uo = np.array(uo)
        for _tick in range(int(dur * 6)):
            u = u + 0.4 * (uo - u)
            if u.sum() > 7.5:
                u = u * (7.5 / u.sum())
            Jt_tot += 10.0 * j_at(wells, vo3, u)
            Jf2 += 10.0 * j_at(wells, vo3, (2.5, 2.5, 2.5))
    imp_track = 100.0 * (Jt_tot / Jf2 - 1.0)
    print(f"--- {label}")
    for i, e in enumerate(env):
        print(f"    well{i+1}: Ql(1/2.5/5)@vo1 = "
              f"{e[0]:5.2f}/{e[1]:5.2f}/{e[2]:5.2f}")
    print(f"    bad={bad} lam_fast_worst={lam_worst:8.1f} "
          f"(dt_max={-2.78 / lam_worst if lam_worst < 0 else 99:.4f})")
    print(f"    static imp = {imp_static:5.1f}%  tracked imp = {imp_track:5.1f}%")
    print(f"    u*(t=0) = {u_first}  u*(end) = {u_last}")
    for vo3, Jf, Jo, uo in plateau_rows[:2] + plateau_rows[-2:]:
        print(f"      vo={vo3} Jf={Jf:6.1f} Jo={Jo:6.1f} "
              f"(+{100 * (Jo / Jf - 1):4.1f}%) u*={uo}")
    return imp_static, imp_track


if __name__ == "__main__":
    rho_l, mu = 1390.0, 0.005
    consts = make_consts(rho_l, mu)
    candidates = {
        # (q1, prh1), (q2, prh2), (q3, prh3)
        "A: w1 med, w2 small flat, w3 hot": ((7.0, 0.02), (4.0, 0.05), (10.0, 0.005)),
        "B: w1 hot-, w2 small flat, w3 hot": ((8.0, 0.01), (4.0, 0.05), (10.0, 0.005)),
        "C: w1 small, w2 small, w3 hot": ((5.0, 0.03), (4.0, 0.05), (10.0, 0.005)),
        "D: all hot": ((10.0, 0.005), (10.0, 0.005), (10.0, 0.005)),
        "E: w1 med, w2 tiny, w3 hot": ((6.0, 0.02), (3.0, 0.06), (10.0, 0.005)),
    }
    for label, specs in candidates.items():
        wells = []
        ok = True
        for (q, prh) in specs:
            w = design_from_anchor(q, prh, consts)
            if w is None:
                print(f"--- {label}: anchor ({q},{prh}) infeasible")
                ok = False
                break
            wells.append(w)
        if ok:
            try:
                evaluate(wells, label)
            except Exception as e:
                print(f"--- {label}: {type(e).__name__}: {e}")
