"""Calibration study for the twin's default constants.

Explores (rho_l, mu_mix, theta_res, theta_top) candidates and reports,
for each, the properties the defaults must satisfy:

  * liquid-rate envelope at v_o = 1 across the gas-injection box
  * total reservoir inflow at the scenario start
  * feasibility of every (u, v_o) pair the optimizer may visit
  * steady-state gain dQ_l/dQ_g across openings (sign and trend)
  * static preview of the closed-loop improvement: grid-optimal J vs
    the fixed 2.5/2.5/2.5 allocation along the depletion plateaus
  * open-loop settling time after a 1 sL/min setpoint step

Not part of the installed package; run from the repo root:
    python3 scripts/calibrate.py
"""

import sys
from itertools import product
from math import sqrt

import numpy as np

sys.path.insert(0, "src")

from gaslift_rto import _kernels as K
from gaslift_rto.model import (ControlInputs, DisturbanceState, NoConvergence,
                               ModelDomainError, PhysicalConstants,
                               RigGeometry, ThetaVector, chain_params,
                               steady_state_solve)
from gaslift_rto.units import kgps_to_lpm, slpm_to_kgps

GEOM = RigGeometry(D=0.02, L=3.7, dH=2.2)
P_ATM = 101325.0
P_PUMP = P_ATM + 0.3e5
PRICES = np.array([20.0, 10.0, 30.0])
U_FIX = 2.5
U_GRID = np.round(np.arange(1.0, 5.0 + 1e-9, 0.1), 10)

# depletion plateaus: (duration min, vo1, vo2, vo3)
PLATEAUS = [
    (4, 0.8, 0.6, 0.8),
    (2, 0.7, 0.6, 0.8),
    (2, 0.6, 0.6, 0.8),
    (2, 0.5, 0.6, 0.8),
    (2, 0.4, 0.6, 0.8),
    (2, 0.4, 0.6, 0.7),
    (2, 0.4, 0.6, 0.6),
    (2, 0.4, 0.6, 0.5),
    (2, 0.4, 0.6, 0.4),
]


def make_consts(rho_l, mu):
    return PhysicalConstants(rho_l=rho_l, mu_mix=mu, M_g=0.02897,
                             R_gas=8.314462618, T_amb=293.15,
                             g_acc=9.81, P_atm=P_ATM)


def anchor_thetas(consts, q_l_target, prh_barg_target, u_anchor=2.5, vo=1.0):
    """Solve (theta_res, theta_top) that put the v_o=1 steady state at the
    anchor (Q_l, P_rh). 1-D bisection in m_g via the volume constraint."""
    rho_l, RT_Mg, gdH, Cf, _, Vtot = chain_params(consts, GEOM)
    w_l = q_l_target / 60000.0 * rho_l
    w_g = slpm_to_kgps(u_anchor, consts.rho_g_std)
    G = w_l / w_g
    P_rh = P_ATM + prh_barg_target * 1e5
    w_total = w_l + w_g

    def vol_gap(mg):
        rho_mix = mg * (1.0 + G) / Vtot
        P_bi = P_rh + rho_mix * gdH + Cf * w_total / rho_mix
        rho_g = P_bi / RT_Mg
        return mg / rho_g + G * mg / rho_l - Vtot, P_bi

    lo, hi = 1e-9, consts.rho_g_std * Vtot * 5.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gap, P_bi = vol_gap(mid)
        if gap > 0.0:
            hi = mid
        else:
            lo = mid
    mg = 0.5 * (lo + hi)
    _, P_bi = vol_gap(mg)
    if P_bi >= P_PUMP:
        return None
    rho_mix = mg * (1.0 + G) / Vtot
    theta_res = w_l / (vo * sqrt(rho_l * (P_PUMP - P_bi)))
    theta_top = w_total / sqrt(rho_mix * (P_rh - P_ATM))
    return theta_res, theta_top, P_bi, mg


def well_ql(u, vo, thr, tht, consts, cache):
    """Steady Q_l of one well, NaN when infeasible."""
    key = (round(u, 3), round(vo, 3))
    if key in cache:
        return cache[key]
    theta = ThetaVector([thr] * 3, [tht] * 3)
    dist = DisturbanceState(v_o=(vo, vo, vo), P_pump=P_PUMP)
    try:
        st = steady_state_solve(ControlInputs((u, u, u)), dist, theta,
                                consts, GEOM)
        par = chain_params(consts, GEOM)
        r = K.well_chain(st.m_g[0], st.m_l[0], slpm_to_kgps(u, consts.rho_g_std),
                         vo, thr, tht, float("nan"), P_PUMP, *par)
        ql = kgps_to_lpm(r[7], consts.rho_l) if r[0] == K.OK else float("nan")
    except (ModelDomainError, NoConvergence):
        ql = float("nan")
    cache[key] = ql
    return ql


def grid_opt(vo3, thr, tht, consts, cache):
    """Best J over the 0.1 sL/min grid with sum(u) <= 7.5."""
    tabs = []
    for vo in vo3:
        tabs.append(np.array([well_ql(u, vo, thr, tht, consts, cache)
                              for u in U_GRID]))
    best = (-np.inf, None)
    for i, u1 in enumerate(U_GRID):
        if np.isnan(tabs[0][i]):
            continue
        for j, u2 in enumerate(U_GRID):
            if u1 + u2 > 6.5 + 1e-9 or np.isnan(tabs[1][j]):
                continue
            kmax = 7.5 - u1 - u2
            for k, u3 in enumerate(U_GRID):
                if u3 > kmax + 1e-9 or np.isnan(tabs[2][k]):
                    continue
                J = 20.0 * tabs[0][i] + 10.0 * tabs[1][j] + 30.0 * tabs[2][k]
                if J > best[0]:
                    best = (J, (u1, u2, u3))
    return best


def settle_time(thr, tht, consts, vo=0.8, u0=2.5, u1=3.5):
    """95% settling time of Q_l after a setpoint step (includes gas lag)."""
    theta = ThetaVector([thr] * 3, [tht] * 3)
    dist = DisturbanceState(v_o=(vo, vo, vo), P_pump=P_PUMP)
    st = steady_state_solve(ControlInputs((u0, u0, u0)), dist, theta,
                            consts, GEOM)
    par = chain_params(consts, GEOM)
    th6 = tuple(theta.as_flat())
    y = list(st.as_flat()) + [u0, u0, u0]
    tau, dt, nsub = 4.0 / 3.0, 0.05, 20
    rho_std = consts.rho_g_std
    vo3 = tuple(dist.v_o)
    qls = []
    for step in range(1200):
        err, _, y = K.twin_rk4(tuple(y), (u1, u1, u1), vo3, vo3,
                               P_PUMP, P_PUMP, th6, tau, rho_std,
                               dt, nsub, par)
        if err != K.OK:
            return float("nan"), qls
        y = list(y)
        r = K.well_chain(y[0], y[1], slpm_to_kgps(y[6], rho_std), vo, thr,
                         tht, float("nan"), P_PUMP, *par)
        qls.append(kgps_to_lpm(r[7], consts.rho_l))
    q_start, q_end = qls[0], qls[-1]
    span = q_end - q_start
    if abs(span) < 1e-9:
        return 0.0, qls
    for i, q in enumerate(qls):
        if abs(q - q_start) >= 0.95 * abs(span) and all(
                abs(qq - q_start) >= 0.90 * abs(span) for qq in qls[i:]):
            return (i + 1) * 1.0, qls
    return float("nan"), qls


def evaluate(rho_l, mu, prh_target, q_l_target=10.0):
    consts = make_consts(rho_l, mu)
    anc = anchor_thetas(consts, q_l_target, prh_target)
    if anc is None:
        print(f"rho_l={rho_l} mu={mu} prh={prh_target}: anchor infeasible")
        return
    thr, tht, P_bi, _ = anc
    cache = {}
    # envelope at vo=1
    env = [well_ql(u, 1.0, thr, tht, consts, cache) for u in (1.0, 2.5, 5.0)]
    # gains across openings at u = 2.5 (centered difference 0.5 sL/min)
    gains = {}
    for vo in (0.4, 0.6, 0.8, 1.0):
        qm = well_ql(2.0, vo, thr, tht, consts, cache)
        qp = well_ql(3.0, vo, thr, tht, consts, cache)
        q0 = well_ql(2.5, vo, thr, tht, consts, cache)
        gains[vo] = ((qp - qm) / 1.0, q0)
    # feasibility across box
    bad = 0
    for vo in (0.4, 0.6, 0.8, 1.0):
        for u in (1.0, 3.0, 5.0):
            if np.isnan(well_ql(u, vo, thr, tht, consts, cache)):
                bad += 1
    # static improvement preview along plateaus
    Jf_tot = Jo_tot = 0.0
    first_opt = last_opt = None
    for (dur, *vo3) in PLATEAUS:
        qf = [well_ql(U_FIX, vo3[i], thr, tht, consts, cache) for i in range(3)]
        Jf = float(np.dot(PRICES, qf))
        Jo, uopt = grid_opt(vo3, thr, tht, consts, cache)
        if first_opt is None:
            first_opt = uopt
        last_opt = uopt
        Jf_tot += dur * Jf
        Jo_tot += dur * Jo
    imp = 100.0 * (Jo_tot / Jf_tot - 1.0)
    ts, _ = settle_time(thr, tht, consts)
    print(f"rho_l={rho_l:6.0f} mu={mu:7.4f} prh={prh_target:5.3f} "
          f"thr={thr:.4e} tht={tht:.4e} | Ql(1,2.5,5)@vo1="
          f"{env[0]:5.2f}/{env[1]:5.2f}/{env[2]:5.2f} | "
          f"g(.4)={gains[0.4][0]:5.2f} g(.6)={gains[0.6][0]:5.2f} "
          f"g(.8)={gains[0.8][0]:5.2f} g(1)={gains[1.0][0]:5.2f} | "
          f"q0(.4)={gains[0.4][1]:5.2f} q0(.8)={gains[0.8][1]:5.2f} | "
          f"bad={bad} | imp={imp:5.1f}% u*0={first_opt} u*end={last_opt} | "
          f"settle={ts:4.0f}s")


if __name__ == "__main__":
    for rho_l, mu, prh in product(
            (998.0, 1200.0, 1350.0, 1400.0, 1450.0),
            (1e-3, 5e-3, 1e-2, 2e-2),
            (0.02, 0.05, 0.10)):
        try:
            evaluate(rho_l, mu, prh)
        except Exception as e:
            print(f"rho_l={rho_l} mu={mu} prh={prh}: {type(e).__name__}: {e}")
