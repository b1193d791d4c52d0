"""Second calibration pass: walk toward the hydro-balance frontier.

Reports anchor pressure drops, the liquid-rate curve at healthy and
depleted openings, feasibility over the admissible box, oscillation
flags, and the static improvement preview.
"""

import sys
from itertools import product
from math import isnan

import numpy as np

sys.path.insert(0, "src")
sys.path.insert(0, "scripts")

from calibrate import (GEOM, P_ATM, P_PUMP, PLATEAUS, PRICES, U_FIX,
                       anchor_thetas, grid_opt, make_consts, well_ql)
from gaslift_rto import _kernels as K
from gaslift_rto.model import (ControlInputs, DisturbanceState,
                               ModelDomainError, NoConvergence, ThetaVector,
                               chain_params, steady_state_solve)
from gaslift_rto.units import kgps_to_lpm, slpm_to_kgps


def osc_check(thr, tht, consts, vo, u, horizon=120):
    """Simulate at constant inputs from steady state; peak-to-peak of the
    last 30 s of Q_l (should be ~0 when stable, noise-free)."""
    theta = ThetaVector([thr] * 3, [tht] * 3)
    dist = DisturbanceState(v_o=(vo, vo, vo), P_pump=P_PUMP)
    try:
        st = steady_state_solve(ControlInputs((u, u, u)), dist, theta,
                                consts, GEOM)
    except (ModelDomainError, NoConvergence):
        return float("nan")
    par = chain_params(consts, GEOM)
    th6 = tuple(theta.as_flat())
    y = list(st.as_flat()) + [u, u, u]
    vo3 = tuple(dist.v_o)
    qls = []
    for step in range(horizon):
        err, _, y = K.twin_rk4(tuple(y), (u, u, u), vo3, vo3, P_PUMP, P_PUMP,
                               th6, 4.0 / 3.0, consts.rho_g_std, 0.05, 20, par)
        if err != K.OK:
            return float("inf")
        y = list(y)
        r = K.well_chain(y[0], y[1], slpm_to_kgps(y[6], consts.rho_g_std),
                         vo, thr, tht, float("nan"), P_PUMP, *par)
        if r[0] != K.OK:
            return float("inf")
        qls.append(kgps_to_lpm(r[7], consts.rho_l))
    tail = qls[-30:]
    return max(tail) - min(tail)


def evaluate2(rho_l, mu, prh_target):
    consts = make_consts(rho_l, mu)
    anc = anchor_thetas(consts, 10.0, prh_target)
    if anc is None:
        print(f"rho_l={rho_l:5.0f} mu={mu:6.4f} prh={prh_target:5.3f}: "
              "anchor infeasible")
        return
    thr, tht, P_bi, _ = anc
    dp_res = P_PUMP - P_bi
    cache = {}
    cu1 = [well_ql(u, 1.0, thr, tht, consts, cache) for u in (1.0, 2.5, 5.0)]
    cu4 = [well_ql(u, 0.4, thr, tht, consts, cache) for u in (1.0, 2.5, 5.0)]
    g = {}
    for vo in (0.4, 0.8, 1.0):
        g[vo] = (well_ql(3.0, vo, thr, tht, consts, cache)
                 - well_ql(2.0, vo, thr, tht, consts, cache))
    bad = 0
    for vo in (0.4, 0.5, 0.6, 0.7, 0.8, 1.0):
        for u in (1.0, 2.5, 5.0):
            if isnan(well_ql(u, vo, thr, tht, consts, cache)):
                bad += 1
    Jf_tot = Jo_tot = 0.0
    uopts = []
    for (dur, *vo3) in PLATEAUS:
        qf = [well_ql(U_FIX, vo3[i], thr, tht, consts, cache)
              for i in range(3)]
        Jf = float(np.dot(PRICES, qf))
        Jo, uopt = grid_opt(vo3, thr, tht, consts, cache)
        uopts.append(uopt)
        Jf_tot += dur * Jf
        Jo_tot += dur * Jo
    imp = 100.0 * (Jo_tot / Jf_tot - 1.0)
    oscs = [osc_check(thr, tht, consts, vo, u)
            for vo, u in ((0.8, 2.5), (0.4, 2.5), (0.4, 1.0), (1.0, 5.0))]
    osc = max(oscs)
    uo0 = tuple(round(float(x), 1) for x in uopts[0]) if uopts[0] else None
    uoe = tuple(round(float(x), 1) for x in uopts[-1]) if uopts[-1] else None
    print(f"rho_l={rho_l:5.0f} mu={mu:6.4f} prh={prh_target:5.3f} "
          f"thr={thr:.3e} tht={tht:.3e} dPres={dp_res:6.0f} | "
          f"vo1:{cu1[0]:5.2f}/{cu1[1]:5.2f}/{cu1[2]:5.2f} "
          f"vo.4:{cu4[0]:5.2f}/{cu4[1]:5.2f}/{cu4[2]:5.2f} | "
          f"g1={g[1.0]:4.2f} g.8={g[0.8]:4.2f} g.4={g[0.4]:4.2f} | "
          f"bad={bad} osc={osc:8.2e} | imp={imp:5.1f}% u*0={uo0} u*end={uoe}")


if __name__ == "__main__":
    for rho_l, mu, prh in product((1340.0, 1360.0, 1375.0, 1390.0),
                                  (0.002, 0.005, 0.01),
                                  (0.005, 0.01, 0.02)):
        try:
            evaluate2(rho_l, mu, prh)
        except Exception as e:
            print(f"rho_l={rho_l} mu={mu} prh={prh}: {type(e).__name__}: {e}")
