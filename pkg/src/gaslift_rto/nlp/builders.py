"""Problem builders: steady economic optimum, steady fit, dynamic plan.

All three return NLProblem instances for nlp.core.solve. Decision
variables are scaled so a unit step means roughly the same thing in
every direction (gas holdups are ~0.01 kg while liquid holdups are
~1 kg), and steady-residual rows are scaled to O(1). The brute-force
grid enumerator provides an independent check of the economic problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import defaults as dflt
from ..model import (
    ControlInputs,
    DisturbanceState,
    ModelDomainError,
    InfeasibleRegime,
    NetworkState,
    NoConvergence,
    ThetaVector,
    chain_params,
    steady_state_solve,
    well_steady_residual_fwd,
    _S_MG, _S_ML, _S_WG, _S_THR, _S_THT, _S_AOV,
)
from .core import NLProblem

__all__ = [
    "CollocationGrid",
    "OracleResult",
    "build_ss_econ",
    "build_ss_fit",
    "build_drto",
    "brute_force_ss_oracle",
    "simulate_collocation",
    "fit_measurements",
    "project_u_plan",
]

SCALE_MG = 1e-3                    # gas holdup variable scale, kg
ROW_SCALE = np.array([1e4, 10.0])  # (gas, liquid) steady-residual rows
GUARD_SCALE = 1e-4                 # pressure guard rows, 1/Pa
EPS_GUARD = 50.0                   # Pa of margin demanded on both valves
STATE_LB = np.array([0.01, 0.01] * 3)   # scaled (mg/SCALE_MG, ml) boxes
STATE_UB = np.array([200.0, 1.9] * 3)
_S6 = np.array([SCALE_MG, 1.0] * 3)

# 3-point Radau IIA data, derived exactly in scripts/oracle_radau.py
RADAU_C = np.array([
    0.1550510257216821901802716,
    0.6449489742783178098197284,
    1.0,
])
RADAU_B = np.array([
    0.3764030627004672750500754,
    0.5124858261884216138388134,
    0.1111111111111111111111111,
])
RADAU_D = np.array([
    [-4.139387691339813717836741, 3.224744871391589049098642,
     1.167840084690405494924041, -0.2531972647421808261859424],
    [1.739387691339813717836741, -3.567840084690405494924041,
     0.7752551286084109509013580, 1.053197264742180826185942],
    [-3.0, 5.531972647421808261859424,
     -7.531972647421808261859424, 5.0],
])


@dataclass(frozen=True)
class CollocationGrid:
    """Fixed-step grid of n_elements, each T_p seconds, Radau IIA(3)."""

    n_elements: int = dflt.DRTO_NP
    T_p: float = dflt.DRTO_TP

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("need at least one element")
        if self.T_p <= 0:
            raise ValueError("element length must be positive")

    @property
    def c(self):
        return RADAU_C

    @property
    def b(self):
        return RADAU_B

    @property
    def D(self):
        return RADAU_D

    @property
    def horizon_s(self):
        return self.n_elements * self.T_p


def _theta_pairs(theta: ThetaVector):
    return [(theta.theta_res[i], theta.theta_top[i]) for i in range(3)]


def _default_cg(consts, geom):
    if consts is None:
        consts = dflt.CONSTANTS
    if geom is None:
        geom = dflt.GEOMETRY
    return consts, geom


def _steady_guess(u, dist, theta, consts, geom):
    """Steady network state for x0 seeding, trying fallback inputs."""
    for cand in (u, (2.5, 2.5, 2.5), (2.0, 2.0, 2.0), (1.5, 1.5, 1.5)):
        try:
            st = steady_state_solve(ControlInputs(tuple(cand)), dist,
                                    theta, consts, geom)
            return np.asarray(cand, float), st
        except (ModelDomainError, InfeasibleRegime, NoConvergence):
            continue
    # let the original failure surface
    st = steady_state_solve(ControlInputs(tuple(u)), dist, theta,
                            consts, geom)
    return np.asarray(u, float), st


class _Memo:
    """One-slot cache keyed on the evaluation point."""

    def __init__(self, fn):
        self.fn = fn
        self.key = None
        self.val = None

    def __call__(self, x):
        key = x.tobytes()
        if key != self.key:
            self.val = self.fn(np.asarray(x, float))
            self.key = key
        return self.val


def _shrink_to_budget(u, lo, total):
    """Scale u toward lo until sum(u) <= total; preserves u >= lo."""
    u = np.array(u, float)
    excess = u.sum() - total
    if excess <= 0:
        return u
    room = u - lo
    return lo + room * (total - lo.sum()) / room.sum()


def build_ss_econ(theta_hat: ThetaVector, dist: DisturbanceState,
                  consts=None, geom=None, u0=None,
                  prices=None, eps_guard: float = EPS_GUARD) -> NLProblem:
    """Steady-state economic allocation problem.

    Nine variables: the three injection setpoints plus the per-well
    steady states. Equalities are the scaled steady residuals; the
    inequalities are the shared gas budget and pressure margins on both
    check valves so the optimum stays inside the flowing regime.
    """
    consts, geom = _default_cg(consts, geom)
    prices = np.asarray(dflt.PRICES if prices is None else prices, float)
    lpm = 60000.0 / consts.rho_l
    k_gas = consts.rho_g_std / 60000.0
    pairs = _theta_pairs(theta_hat)
    Pp = dist.P_pump

    u_start = np.clip(np.asarray(
        dflt.U_BASELINE.as_array() if u0 is None else u0, float),
        dflt.U_MIN, dflt.U_MAX)
    u_start, st0 = _steady_guess(u_start, dist, theta_hat, consts, geom)
    x0 = np.concatenate([u_start, st0.as_flat() / _S6])

    def bundle(z):
        u = z[:3]
        f = 0.0
        grad = np.zeros(9)
        cE = np.zeros(6)
        JE = np.zeros((6, 9))
        cI = np.zeros(7)
        JI = np.zeros((7, 9))
        cI[0] = u.sum() - dflt.U_TOTAL_MAX
        JI[0, :3] = 1.0
        for i in range(3):
            mg = z[3 + 2 * i] * SCALE_MG
            ml = z[4 + 2 * i]
            thr, tht = pairs[i]
            r, dr_dm, dr_du, _, aux = well_steady_residual_fwd(
                mg, ml, u[i], dist.v_o[i], Pp, thr, tht, consts, geom)
            s = 2 * i
            cE[s:s + 2] = r * ROW_SCALE
            JE[s:s + 2, i] = dr_du * ROW_SCALE
            JE[s:s + 2, 3 + s] = dr_dm[:, 0] * SCALE_MG * ROW_SCALE
            JE[s:s + 2, 4 + s] = dr_dm[:, 1] * ROW_SCALE

            q_l = aux["w_l_out"] * lpm
            dwlo = aux["dw_l_out"]
            f -= prices[i] * q_l
            grad[i] -= prices[i] * dwlo[_S_WG] * k_gas * lpm
            grad[3 + s] -= prices[i] * dwlo[_S_MG] * SCALE_MG * lpm
            grad[4 + s] -= prices[i] * dwlo[_S_ML] * lpm

            dpbi, dprh = aux["dP_bi"], aux["dP_rh"]
            row = 1 + 2 * i
            cI[row] = (eps_guard + aux["P_bi"] - Pp) * GUARD_SCALE
            JI[row, i] = dpbi[_S_WG] * k_gas * GUARD_SCALE
            JI[row, 3 + s] = dpbi[_S_MG] * SCALE_MG * GUARD_SCALE
            JI[row, 4 + s] = dpbi[_S_ML] * GUARD_SCALE
            cI[row + 1] = (eps_guard + consts.P_atm
                           - aux["P_rh"]) * GUARD_SCALE
            JI[row + 1, i] = -dprh[_S_WG] * k_gas * GUARD_SCALE
            JI[row + 1, 3 + s] = -dprh[_S_MG] * SCALE_MG * GUARD_SCALE
            JI[row + 1, 4 + s] = -dprh[_S_ML] * GUARD_SCALE
        return f, grad, cE, JE, cI, JI

    memo = _Memo(bundle)

    def restore(z):
        u = np.clip(z[:3], dflt.U_MIN, dflt.U_MAX)
        u = _shrink_to_budget(u, np.full(3, dflt.U_MIN), dflt.U_TOTAL_MAX)
        st = steady_state_solve(ControlInputs(tuple(u)), dist, theta_hat,
                                consts, geom)
        return np.concatenate([u, st.as_flat() / _S6])

    lb = np.concatenate([np.full(3, dflt.U_MIN), STATE_LB])
    ub = np.concatenate([np.full(3, dflt.U_MAX), STATE_UB])
    return NLProblem(
        n_vars=9,
        objective=lambda z: memo(z)[0],
        gradient=lambda z: memo(z)[1],
        c_eq=lambda z: memo(z)[2],
        J_eq=lambda z: memo(z)[3],
        c_in=lambda z: memo(z)[4],
        J_in=lambda z: memo(z)[5],
        lb=lb, ub=ub, x0=x0, restore=restore, name="ss_econ")


# fit measurement order: P_rh,1..3 in barg then Q_l,1..3 in L/min
def fit_measurements(measured10):
    """Slice the informative six channels out of a raw 10-channel row."""
    y = np.asarray(measured10, float)
    return np.concatenate([y[0:3], y[4:7]])


def build_ss_fit(y_bar, u_p, dist: DisturbanceState,
                 V=None, theta_guess: Optional[ThetaVector] = None,
                 theta_lo=None, theta_hi=None,
                 param_set: str = "theta_top", alpha_bounds=(0.05, 0.95),
                 consts=None, geom=None) -> NLProblem:
    """Weighted least-squares steady fit of six parameters.

    param_set picks the estimated pair per well: reservoir inflow plus
    either the top-valve coefficient ("theta_top", the default) or the
    outflow liquid volume fraction ("alpha_l", the identifiability
    stress case; theta_top is then frozen at the guess).
    """
    if param_set not in ("theta_top", "alpha_l"):
        raise ValueError(f"unknown param_set {param_set!r}")
    consts, geom = _default_cg(consts, geom)
    y_bar = np.asarray(y_bar, float)
    if y_bar.shape != (6,):
        raise ValueError("y_bar must hold the six fit channels")
    V = np.eye(6) if V is None else np.asarray(V, float)
    if V.shape != (6, 6) or not np.allclose(V, V.T, atol=1e-12):
        raise ValueError("V must be a symmetric 6x6 matrix")
    if theta_guess is None:
        theta_guess = dflt.THETA_NOMINAL.copy()
    lo = dflt.THETA_LO if theta_lo is None else np.asarray(theta_lo)
    hi = dflt.THETA_HI if theta_hi is None else np.asarray(theta_hi)
    nom = dflt.THETA_NOMINAL.as_flat()
    alpha_mode = param_set == "alpha_l"
    u_p = np.asarray(u_p, float)
    lpm = 60000.0 / consts.rho_l
    Pp = dist.P_pump

    # variable layout: (p_res, p_sec) per well interleaved, then states;
    # p_res is theta_res over nominal, p_sec is theta_top over nominal or
    # the raw volume fraction alpha_l
    guess_flat = theta_guess.as_flat()
    q0 = guess_flat / nom
    if alpha_mode:
        st_probe = steady_state_solve(ControlInputs(tuple(u_p)), dist,
                                      theta_guess, consts, geom)
        probe = [well_steady_residual_fwd(
            st_probe.m_g[i], st_probe.m_l[i], u_p[i], dist.v_o[i], Pp,
            guess_flat[2 * i], guess_flat[2 * i + 1], consts, geom)
            for i in range(3)]
        alpha0 = [p[4]["alpha_l"] for p in probe]
        q0 = q0.copy()
        q0[1::2] = np.clip(alpha0, *alpha_bounds)
        st0 = st_probe
    else:
        st0 = steady_state_solve(ControlInputs(tuple(u_p)), dist,
                                 theta_guess, consts, geom)
    x0 = np.concatenate([q0, st0.as_flat() / _S6])

    def unpack_theta(z):
        th = np.empty(6)
        th[0::2] = z[0:6:2] * nom[0::2]
        if alpha_mode:
            th[1::2] = guess_flat[1::2]
        else:
            th[1::2] = z[1:6:2] * nom[1::2]
        return th

    def bundle(z):
        th = unpack_theta(z)
        cE = np.zeros(6)
        JE = np.zeros((6, 12))
        y = np.zeros(6)
        Jy = np.zeros((6, 12))
        for i in range(3):
            mg = z[6 + 2 * i] * SCALE_MG
            ml = z[7 + 2 * i]
            kw = {}
            if alpha_mode:
                kw = {"alpha_ov": z[1 + 2 * i], "theta_is_alpha": True}
            r, dr_dm, _, dr_dth, aux = well_steady_residual_fwd(
                mg, ml, u_p[i], dist.v_o[i], Pp, th[2 * i], th[2 * i + 1],
                consts, geom, **kw)
            s = 2 * i
            cE[s:s + 2] = r * ROW_SCALE
            JE[s:s + 2, 6 + s] = dr_dm[:, 0] * SCALE_MG * ROW_SCALE
            JE[s:s + 2, 7 + s] = dr_dm[:, 1] * ROW_SCALE
            JE[s:s + 2, s] = dr_dth[:, 0] * nom[s] * ROW_SCALE
            sec_scale = 1.0 if alpha_mode else nom[s + 1]
            JE[s:s + 2, s + 1] = dr_dth[:, 1] * sec_scale * ROW_SCALE

            dprh, dwlo = aux["dP_rh"], aux["dw_l_out"]
            ith = _S_AOV if alpha_mode else _S_THT
            y[i] = (aux["P_rh"] - consts.P_atm) / 1e5
            Jy[i, 6 + s] = dprh[_S_MG] * SCALE_MG / 1e5
            Jy[i, 7 + s] = dprh[_S_ML] / 1e5
            Jy[i, s] = dprh[_S_THR] * nom[s] / 1e5
            Jy[i, s + 1] = dprh[ith] * sec_scale / 1e5
            y[3 + i] = aux["w_l_out"] * lpm
            Jy[3 + i, 6 + s] = dwlo[_S_MG] * SCALE_MG * lpm
            Jy[3 + i, 7 + s] = dwlo[_S_ML] * lpm
            Jy[3 + i, s] = dwlo[_S_THR] * nom[s] * lpm
            Jy[3 + i, s + 1] = dwlo[ith] * sec_scale * lpm
        resid = y - y_bar
        f = 0.5 * float(resid @ V @ resid)
        grad = Jy.T @ (V @ resid)
        return f, grad, cE, JE, Jy.T @ V @ Jy

    memo = _Memo(bundle)

    q_lo = (lo / nom).copy()
    q_hi = (hi / nom).copy()
    if alpha_mode:
        q_lo[1::2] = alpha_bounds[0]
        q_hi[1::2] = alpha_bounds[1]
    lb = np.concatenate([q_lo, STATE_LB])
    ub = np.concatenate([q_hi, STATE_UB])

    def restore(z):
        zc = np.clip(z, lb, ub)
        th = ThetaVector.from_flat(unpack_theta(zc))
        st = steady_state_solve(ControlInputs(tuple(u_p)), dist, th,
                                consts, geom)
        out = zc.copy()
        out[6:] = st.as_flat() / _S6
        return out

    return NLProblem(
        n_vars=12,
        objective=lambda z: memo(z)[0],
        gradient=lambda z: memo(z)[1],
        c_eq=lambda z: memo(z)[2],
        J_eq=lambda z: memo(z)[3],
        c_in=lambda z: np.zeros(0),
        J_in=lambda z: np.zeros((0, 12)),
        lb=lb, ub=ub, x0=np.clip(x0, lb, ub), restore=restore,
        hessian=lambda z: memo(z)[4],
        name=f"ss_fit[{param_set}]")


def _plan_slices(grid):
    """Index helpers for the dynamic plan layout."""
    per = 21
    n = grid.n_elements * per
    state_idx = [slice(k * per, k * per + 18) for k in range(grid.n_elements)]
    u_idx = [slice(k * per + 18, (k + 1) * per) for k in range(grid.n_elements)]
    return n, state_idx, u_idx


def build_drto(theta_hat: ThetaVector, x_hat: NetworkState, u_prev,
               dist: DisturbanceState, grid: Optional[CollocationGrid] = None,
               R: float = dflt.DRTO_R, du_max: float = dflt.DU_MAX,
               prices=None, consts=None, geom=None,
               x0: Optional[np.ndarray] = None) -> NLProblem:
    """Dynamic economic plan on the collocation grid.

    Variables per element: the six network states at each of the three
    Radau points (scaled) followed by that element's input triple.
    Element-to-element continuity is structural: the last Radau point is
    the element endpoint and seeds the next element's interpolation, so
    no extra continuity equations are needed. The objective integrates
    the production value by Radau quadrature (normalized by the horizon)
    minus the input-move penalty R|du|^2/T_p per element.
    """
    consts, geom = _default_cg(consts, geom)
    grid = CollocationGrid() if grid is None else grid
    prices = np.asarray(dflt.PRICES if prices is None else prices, float)
    u_prev = np.asarray(u_prev, float)
    lpm = 60000.0 / consts.rho_l
    k_gas = consts.rho_g_std / 60000.0
    pairs = _theta_pairs(theta_hat)
    Pp = dist.P_pump
    h = grid.T_p
    n_el = grid.n_elements
    T_tot = grid.horizon_s
    D = grid.D
    n, sidx, uidx = _plan_slices(grid)
    xs_hat = x_hat.as_flat() / _S6
    m_eq = 18 * n_el

    def bundle(z):
        f_obj = 0.0
        grad = np.zeros(n)
        cE = np.zeros(m_eq)
        JE = np.zeros((m_eq, n))
        for k in range(n_el):
            uk = z[uidx[k]]
            base = sidx[k].start
            # start-of-element scaled state and where it lives
            if k == 0:
                x_start, start_col = xs_hat, None
            else:
                start_col = sidx[k - 1].start + 12
                x_start = z[start_col:start_col + 6]
            for j in range(3):
                scol = base + 6 * j
                xt = z[scol:scol + 6]
                row0 = 18 * k + 6 * j
                # interpolation part of the residual
                cE[row0:row0 + 6] += D[j, 0] * x_start
                if start_col is not None:
                    for m in range(6):
                        JE[row0 + m, start_col + m] += D[j, 0]
                for i in range(3):
                    icol = base + 6 * i
                    cE[row0:row0 + 6] += D[j, i + 1] * z[icol:icol + 6]
                    for m in range(6):
                        JE[row0 + m, icol + m] += D[j, i + 1]
                wq = RADAU_B[j] * h / T_tot
                for w in range(3):
                    mg = xt[2 * w] * SCALE_MG
                    ml = xt[2 * w + 1]
                    thr, tht = pairs[w]
                    r, dr_dm, dr_du, _, aux = well_steady_residual_fwd(
                        mg, ml, uk[w], dist.v_o[w], Pp, thr, tht,
                        consts, geom)
                    # r is the net mass balance, i.e. the dynamics rhs
                    rr = row0 + 2 * w
                    sc = _S6[2 * w:2 * w + 2]
                    cE[rr:rr + 2] -= h * r / sc
                    JE[rr, scol + 2 * w] -= h * dr_dm[0, 0] * SCALE_MG / sc[0]
                    JE[rr, scol + 2 * w + 1] -= h * dr_dm[0, 1] / sc[0]
                    JE[rr + 1, scol + 2 * w] -= h * dr_dm[1, 0] * SCALE_MG / sc[1]
                    JE[rr + 1, scol + 2 * w + 1] -= h * dr_dm[1, 1] / sc[1]
                    ucol = uidx[k].start + w
                    JE[rr, ucol] -= h * dr_du[0] / sc[0]
                    JE[rr + 1, ucol] -= h * dr_du[1] / sc[1]

                    q_l = aux["w_l_out"] * lpm
                    dwlo = aux["dw_l_out"]
                    f_obj -= wq * prices[w] * q_l
                    grad[scol + 2 * w] -= (wq * prices[w]
                                           * dwlo[_S_MG] * SCALE_MG * lpm)
                    grad[scol + 2 * w + 1] -= (wq * prices[w]
                                               * dwlo[_S_ML] * lpm)
                    grad[ucol] -= wq * prices[w] * dwlo[_S_WG] * k_gas * lpm
            du = uk - (u_prev if k == 0 else z[uidx[k - 1]])
            f_obj += R * float(du @ du) / h / T_tot
            grad[uidx[k]] += 2.0 * R * du / h / T_tot
            if k > 0:
                grad[uidx[k - 1]] -= 2.0 * R * du / h / T_tot
        return f_obj, grad, cE, JE

    memo = _Memo(bundle)

    def c_in(z):
        out = np.zeros(7 * n_el)
        for k in range(n_el):
            uk = z[uidx[k]]
            up = u_prev if k == 0 else z[uidx[k - 1]]
            out[k] = uk.sum() - dflt.U_TOTAL_MAX
            r = n_el + 6 * k
            out[r:r + 3] = (uk - up) - du_max
            out[r + 3:r + 6] = -(uk - up) - du_max
        return out

    def J_in(z):
        J = np.zeros((7 * n_el, n))
        for k in range(n_el):
            J[k, uidx[k]] = 1.0
            r = n_el + 6 * k
            for w in range(3):
                J[r + w, uidx[k].start + w] = 1.0
                J[r + 3 + w, uidx[k].start + w] = -1.0
                if k > 0:
                    J[r + w, uidx[k - 1].start + w] = -1.0
                    J[r + 3 + w, uidx[k - 1].start + w] = 1.0
        return J

    lb = np.empty(n)
    ub = np.empty(n)
    for k in range(n_el):
        lb[sidx[k]] = np.tile(STATE_LB[:6], 3)[:18]
        ub[sidx[k]] = np.tile(STATE_UB[:6], 3)[:18]
        lb[uidx[k]] = dflt.U_MIN
        ub[uidx[k]] = dflt.U_MAX

    if x0 is None:
        x0 = np.empty(n)
        for k in range(n_el):
            x0[sidx[k]] = np.tile(xs_hat, 3)
            x0[uidx[k]] = np.clip(u_prev, dflt.U_MIN, dflt.U_MAX)

    def restore(z):
        plan = project_u_plan(
            np.array([z[uidx[k]] for k in range(n_el)]), u_prev, du_max)
        states = simulate_collocation(x_hat, plan, theta_hat, dist, grid,
                                      consts, geom)
        out = np.empty(n)
        for k in range(n_el):
            out[sidx[k]] = (states[k] / _S6).ravel()
            out[uidx[k]] = plan[k]
        return out

    # seed the quasi-Newton model with the rough curvature of production
    # against a lift-rate move so early steps are not wildly overlong
    b0 = np.ones(n)
    for k in range(n_el):
        b0[uidx[k]] = 5.0

    return NLProblem(
        n_vars=n,
        objective=lambda z: memo(z)[0],
        gradient=lambda z: memo(z)[1],
        c_eq=lambda z: memo(z)[2],
        J_eq=lambda z: memo(z)[3],
        c_in=c_in, J_in=J_in,
        lb=lb, ub=ub, x0=np.asarray(x0, float), restore=restore,
        b0_diag=b0, name="drto")


def project_u_plan(plan, u_prev, du_max=dflt.DU_MAX):
    """Sequentially project an input plan onto box, budget and rate set."""
    plan = np.array(plan, float)
    prev = np.asarray(u_prev, float)
    for k in range(plan.shape[0]):
        lo = np.maximum(dflt.U_MIN, prev - du_max)
        hi = np.minimum(dflt.U_MAX, prev + du_max)
        u = np.clip(plan[k], lo, hi)
        u = _shrink_to_budget(u, lo, dflt.U_TOTAL_MAX)
        plan[k] = u
        prev = u
    return plan


def simulate_collocation(x_start: NetworkState, u_plan, theta, dist,
                         grid=None, consts=None, geom=None, tol=1e-12,
                         max_iter=40):
    """Solve the collocation equations element by element (Newton).

    Returns an array of shape (n_elements, 3, 6) of raw states at the
    Radau points. Independent of the NLP path through the same
    equations, so it doubles as the restoration simulator and as a
    fixture for integrator cross-checks.
    """
    consts, geom = _default_cg(consts, geom)
    grid = CollocationGrid() if grid is None else grid
    u_plan = np.asarray(u_plan, float)
    pairs = _theta_pairs(theta)
    h = grid.T_p
    D = grid.D
    Pp = dist.P_pump
    out = np.empty((grid.n_elements, 3, 6))
    xs = x_start.as_flat() / _S6

    for k in range(grid.n_elements):
        uk = u_plan[k]
        X = np.tile(xs, 3)          # scaled, 18
        for _ in range(max_iter):
            F = np.zeros(18)
            J = np.zeros((18, 18))
            for j in range(3):
                xt = X[6 * j:6 * j + 6]
                r0 = 6 * j
                F[r0:r0 + 6] += D[j, 0] * xs
                for i in range(3):
                    F[r0:r0 + 6] += D[j, i + 1] * X[6 * i:6 * i + 6]
                    for m in range(6):
                        J[r0 + m, 6 * i + m] += D[j, i + 1]
                for w in range(3):
                    r, dr_dm, _, _, _ = well_steady_residual_fwd(
                        xt[2 * w] * SCALE_MG, xt[2 * w + 1], uk[w],
                        dist.v_o[w], Pp, *pairs[w], consts, geom)
                    rr = r0 + 2 * w
                    sc = _S6[2 * w:2 * w + 2]
                    F[rr:rr + 2] -= h * r / sc
                    J[rr, r0 + 2 * w] -= h * dr_dm[0, 0] * SCALE_MG / sc[0]
                    J[rr, r0 + 2 * w + 1] -= h * dr_dm[0, 1] / sc[0]
                    J[rr + 1, r0 + 2 * w] -= h * dr_dm[1, 0] * SCALE_MG / sc[1]
                    J[rr + 1, r0 + 2 * w + 1] -= h * dr_dm[1, 1] / sc[1]
            if np.abs(F).max() < tol:
                break
            X = X - np.linalg.solve(J, F)
        out[k] = (X.reshape(3, 6) * _S6)
        xs = X[12:18]
    return out


@dataclass(frozen=True)
class OracleResult:
    u: tuple
    J: float
    n_feasible: int
    n_failed: int
    grid_step: float


def brute_force_ss_oracle(theta: ThetaVector, dist: DisturbanceState,
                          grid_step: float = 0.1, consts=None, geom=None,
                          prices=None,
                          eps_guard: float = EPS_GUARD) -> OracleResult:
    """Enumerate the injection grid and return the best feasible triple.

    The wells are hydraulically independent, so each well's production
    is tabulated once per grid value (41 steady solves at step 0.1,
    not 41^3) and the triple enumeration is pure table lookup under the
    budget mask. Grid points whose steady solve fails or whose pressure
    margins fall below eps_guard are excluded and counted.
    """
    consts, geom = _default_cg(consts, geom)
    prices = np.asarray(dflt.PRICES if prices is None else prices, float)
    span = dflt.U_MAX - dflt.U_MIN
    n_pts = round(span / grid_step)
    if abs(n_pts * grid_step - span) > 1e-9:
        raise ValueError("grid_step must divide the injection box")
    n_pts += 1
    values = dflt.U_MIN + grid_step * np.arange(n_pts)
    lpm = 60000.0 / consts.rho_l
    flat = theta.as_flat()
    Pp = dist.P_pump

    q_tab = np.full((3, n_pts), np.nan)
    ok = np.zeros((3, n_pts), dtype=bool)
    n_failed = 0
    for gi, v in enumerate(values):
        try:
            st = steady_state_solve(ControlInputs((v, v, v)), dist, theta,
                                    consts, geom)
        except (ModelDomainError, InfeasibleRegime, NoConvergence):
            n_failed += 3
            continue
        for i in range(3):
            _, _, _, _, aux = well_steady_residual_fwd(
                st.m_g[i], st.m_l[i], v, dist.v_o[i], Pp,
                flat[2 * i], flat[2 * i + 1], consts, geom)
            guard_ok = (Pp - aux["P_bi"] >= eps_guard
                        and aux["P_rh"] - consts.P_atm >= eps_guard)
            q_tab[i, gi] = aux["w_l_out"] * lpm
            ok[i, gi] = guard_ok

    J3 = (prices[0] * np.where(ok[0], q_tab[0], -np.inf)[:, None, None]
          + prices[1] * np.where(ok[1], q_tab[1], -np.inf)[None, :, None]
          + prices[2] * np.where(ok[2], q_tab[2], -np.inf)[None, None, :])
    budget = (values[:, None, None] + values[None, :, None]
              + values[None, None, :]) <= dflt.U_TOTAL_MAX + 1e-12
    J3 = np.where(budget, J3, -np.inf)
    flat_best = int(np.argmax(J3))
    a, b, c = np.unravel_index(flat_best, J3.shape)
    best_J = float(J3[a, b, c])
    if not np.isfinite(best_J):
        raise InfeasibleRegime("no feasible grid point")
    n_feasible = int(np.isfinite(J3).sum())
    return OracleResult(
        u=(float(values[a]), float(values[b]), float(values[c])),
        J=best_J, n_feasible=n_feasible, n_failed=n_failed,
        grid_step=grid_step)
