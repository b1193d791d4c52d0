"""Physics of the three-well gas-lift network.

The network is three identical, uncoupled vertical-riser wells fed by a
shared pump. Per well the differential states are the gas and liquid mass
holdups (m_g, m_l); everything else follows from an explicit algebraic
chain: the volume constraint fixes the gas density, the ideal-gas law
gives the pressure before the injection point, the reservoir valve gives
the liquid inflow, the hydrostatic column plus laminar friction give the
riser-head pressure, the top valve gives the total outlet flow, and the
holdup liquid fraction splits it into phases.

All public containers use SI units; flow setpoints in sL/min and gauge
pressures appear only in interface vectors (see units.py).
"""

from dataclasses import dataclass, field
from math import isnan, pi, sqrt

import numpy as np

from . import _kernels as K
from .units import kgps_to_lpm, kgps_to_slpm, pa_to_barg, rho_gas_std, slpm_to_kgps

NAN = float("nan")

# Measurement vector layout (interface units).
MEAS_NAMES = (
    "P_rh1_barg", "P_rh2_barg", "P_rh3_barg", "P_pump_barg",
    "Q_l1_lpm", "Q_l2_lpm", "Q_l3_lpm",
    "Q_g1_slpm", "Q_g2_slpm", "Q_g3_slpm",
)
N_MEAS = len(MEAS_NAMES)


class ModelDomainError(Exception):
    """Base for states outside the model's physical domain."""


class PipeFlooded(ModelDomainError):
    """Liquid holdup at or above the pipe volume (no free gas left)."""


class NonPositiveHoldup(ModelDomainError):
    """Gas mass non-positive or liquid mass negative."""


class NoConvergence(Exception):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"no convergence after {iterations} iterations, "
                         f"residual {residual:.3e}")


class InfeasibleRegime(Exception):
    """No steady state exists for the requested operating point."""


_ERR_MAP = {
    K.ERR_FLOODED: PipeFlooded,
    K.ERR_HOLDUP: NonPositiveHoldup,
    K.ERR_SINGULAR: ModelDomainError,
}


def raise_model_error(code, well=None):
    exc = _ERR_MAP.get(code, ModelDomainError)
    msg = exc.__name__ if well is None else f"well {well + 1}"
    raise exc(msg)


@dataclass(frozen=True)
class PhysicalConstants:
    rho_l: float          # liquid density, kg/m3
    mu_mix: float         # mixture (= liquid) viscosity, Pa s
    M_g: float            # gas molar mass, kg/mol
    R_gas: float          # universal gas constant, J/(mol K)
    T_amb: float          # ambient temperature, K
    g_acc: float          # gravitational acceleration, m/s2
    P_atm: float          # atmospheric pressure, Pa

    def __post_init__(self):
        for name in ("rho_l", "mu_mix", "M_g", "R_gas", "T_amb", "g_acc", "P_atm"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def rho_g_std(self):
        return rho_gas_std(self.M_g, self.R_gas)


@dataclass(frozen=True)
class RigGeometry:
    D: float    # pipe inner diameter, m
    L: float    # total pipe length (well + riser), m
    dH: float   # riser height, m

    def __post_init__(self):
        if min(self.D, self.L, self.dH) <= 0.0:
            raise ValueError("geometry values must be positive")
        if self.dH > self.L:
            raise ValueError("riser height cannot exceed total length")

    @property
    def V_total(self):
        return pi * self.D * self.D / 4.0 * self.L


@dataclass
class ThetaVector:
    theta_res: np.ndarray   # 3 reservoir valve flow coefficients
    theta_top: np.ndarray   # 3 top valve flow coefficients

    def __post_init__(self):
        self.theta_res = np.asarray(self.theta_res, dtype=float)
        self.theta_top = np.asarray(self.theta_top, dtype=float)
        if self.theta_res.shape != (3,) or self.theta_top.shape != (3,):
            raise ValueError("theta vectors must have 3 entries per valve set")

    def as_flat(self):
        """Interleaved (res1, top1, res2, top2, res3, top3)."""
        out = np.empty(6)
        out[0::2] = self.theta_res
        out[1::2] = self.theta_top
        return out

    @classmethod
    def from_flat(cls, flat):
        flat = np.asarray(flat, dtype=float)
        return cls(theta_res=flat[0::2].copy(), theta_top=flat[1::2].copy())

    def copy(self):
        return ThetaVector(self.theta_res.copy(), self.theta_top.copy())


@dataclass
class NetworkState:
    m_g: np.ndarray   # 3 gas holdups, kg
    m_l: np.ndarray   # 3 liquid holdups, kg

    def __post_init__(self):
        self.m_g = np.asarray(self.m_g, dtype=float)
        self.m_l = np.asarray(self.m_l, dtype=float)

    def as_flat(self):
        """Interleaved (mg1, ml1, mg2, ml2, mg3, ml3)."""
        out = np.empty(6)
        out[0::2] = self.m_g
        out[1::2] = self.m_l
        return out

    @classmethod
    def from_flat(cls, flat):
        flat = np.asarray(flat, dtype=float)
        return cls(m_g=flat[0::2].copy(), m_l=flat[1::2].copy())

    def copy(self):
        return NetworkState(self.m_g.copy(), self.m_l.copy())


@dataclass(frozen=True)
class ControlInputs:
    Q_g_sp: tuple   # 3 gas-lift setpoints, sL/min

    def as_array(self):
        return np.asarray(self.Q_g_sp, dtype=float)


@dataclass(frozen=True)
class DisturbanceState:
    v_o: tuple        # 3 reservoir valve openings, 0..1
    P_pump: float     # pump outlet pressure, Pa absolute

    def __post_init__(self):
        if not all(0.0 < v <= 1.0 for v in self.v_o):
            raise ValueError("valve openings must be in (0, 1]")


@dataclass
class WellAlgebraics:
    rho_g: float
    rho_mix: float
    P_bi: float
    P_rh: float
    w_l: float
    w_total: float
    w_l_out: float
    w_g_out: float
    alpha_l: float


def chain_params(consts: PhysicalConstants, geom: RigGeometry):
    """Precomputed scalar bundle shared by both kernel backends."""
    RT_Mg = consts.R_gas * consts.T_amb / consts.M_g
    gdH = consts.g_acc * geom.dH
    D2 = geom.D * geom.D
    Cf = 128.0 * consts.mu_mix * geom.L / (pi * (D2 * D2))
    return (consts.rho_l, RT_Mg, gdH, Cf, consts.P_atm, geom.V_total)


def algebraics(state: NetworkState, w_g_in, dist: DisturbanceState,
               theta: ThetaVector, consts, geom):
    """Evaluate the per-well algebraic chain. w_g_in in kg/s."""
    par = chain_params(consts, geom)
    out = []
    for i in range(3):
        r = K.well_chain(state.m_g[i], state.m_l[i], w_g_in[i],
                         dist.v_o[i], theta.theta_res[i], theta.theta_top[i],
                         NAN, dist.P_pump, *par)
        if r[0] != K.OK:
            raise_model_error(r[0], i)
        out.append(WellAlgebraics(*r[1:]))
    return out


def rhs(state: NetworkState, w_g_in, dist, theta, consts, geom):
    """Mass balances. w_g_in in kg/s; returns flat 6-vector (kg/s)."""
    par = chain_params(consts, geom)
    y6 = state.as_flat()
    err, iw, dy = K.network_rhs(tuple(y6), tuple(w_g_in),
                                tuple(dist.v_o), dist.P_pump,
                                tuple(theta.as_flat()), par)
    if err != K.OK:
        raise_model_error(err, iw)
    return np.asarray(dy)


@dataclass
class ModelOutputs:
    P_rh: np.ndarray    # 3 riser-head pressures, Pa absolute
    P_pump: float       # pump pressure, Pa absolute
    Q_l: np.ndarray     # 3 liquid rates, L/min
    Q_g: np.ndarray     # 3 gas rates, sL/min

    def interface_vector(self, P_atm):
        """10-vector in interface units (see MEAS_NAMES): gauge bar for
        pressures, L/min and sL/min for flows."""
        y = np.empty(N_MEAS)
        for i in range(3):
            y[i] = pa_to_barg(self.P_rh[i], P_atm)
            y[4 + i] = self.Q_l[i]
            y[7 + i] = self.Q_g[i]
        y[3] = pa_to_barg(self.P_pump, P_atm)
        return y


def measurement_map(state: NetworkState, inputs: ControlInputs, dist,
                    theta, consts, geom):
    """Noise-free sensor outputs (pressures absolute Pa; flows L/min,
    sL/min)."""
    rho_std = consts.rho_g_std
    u = inputs.as_array()
    wg = [slpm_to_kgps(q, rho_std) for q in u]
    alg = algebraics(state, wg, dist, theta, consts, geom)
    return ModelOutputs(
        P_rh=np.array([a.P_rh for a in alg]),
        P_pump=dist.P_pump,
        Q_l=np.array([kgps_to_lpm(a.w_l_out, consts.rho_l) for a in alg]),
        Q_g=u.copy(),
    )


def measurement_vector(state, inputs, dist, theta, consts, geom):
    """Interface-unit measurement vector (what the sensors report)."""
    out = measurement_map(state, inputs, dist, theta, consts, geom)
    return out.interface_vector(consts.P_atm)


@dataclass
class ModelJacobians:
    dfdx: np.ndarray    # 6x6
    dfdth: np.ndarray   # 6x6
    dfdu: np.ndarray    # 6x3 (u in sL/min)
    dhdx: np.ndarray    # 10x6
    dhdth: np.ndarray   # 10x6
    dhdu: np.ndarray    # 10x3


# Seed order inside well_chain_fwd: (mg, ml, wg, thr, tht, vo, Pp, aov).
_S_MG, _S_ML, _S_WG, _S_THR, _S_THT, _S_VO, _S_PP, _S_AOV = range(8)


def _well_fwd(state, u_slpm, dist, theta, consts, geom, i, par, k_gas,
              alpha_ov=NAN):
    r = K.well_chain_fwd(state.m_g[i], state.m_l[i], u_slpm[i] * k_gas,
                         dist.v_o[i], theta.theta_res[i], theta.theta_top[i],
                         alpha_ov, dist.P_pump, *par)
    if r[0] != K.OK:
        raise_model_error(r[0], i)
    return r[1], r[2]


def jacobians(state: NetworkState, inputs: ControlInputs, dist, theta,
              consts, geom):
    """Analytic sensitivities of rhs and of the measurement map.

    State and theta orderings are the interleaved flat ones; the input
    direction is in sL/min so these blocks can be used directly on
    ControlInputs. The wells are uncoupled, so the state and theta blocks
    are 2x2 block-diagonal.
    """
    par = chain_params(consts, geom)
    k_gas = consts.rho_g_std / 60000.0
    u = inputs.as_array()
    dfdx = np.zeros((6, 6))
    dfdth = np.zeros((6, 6))
    dfdu = np.zeros((6, 3))
    dhdx = np.zeros((N_MEAS, 6))
    dhdth = np.zeros((N_MEAS, 6))
    dhdu = np.zeros((N_MEAS, 3))
    lpm = 60000.0 / consts.rho_l
    for i in range(3):
        vals, J = _well_fwd(state, u, dist, theta, consts, geom, i, par, k_gas)
        dP_rh, dw_l, dw_lo, dw_go = J[1], J[2], J[4], J[5]
        s = 2 * i
        # balances: dmg' = wg - w_g_out, dml' = w_l - w_l_out
        dfdx[s, s] = -dw_go[_S_MG]
        dfdx[s, s + 1] = -dw_go[_S_ML]
        dfdx[s + 1, s] = dw_l[_S_MG] - dw_lo[_S_MG]
        dfdx[s + 1, s + 1] = dw_l[_S_ML] - dw_lo[_S_ML]
        dfdth[s, s] = -dw_go[_S_THR]
        dfdth[s, s + 1] = -dw_go[_S_THT]
        dfdth[s + 1, s] = dw_l[_S_THR] - dw_lo[_S_THR]
        dfdth[s + 1, s + 1] = dw_l[_S_THT] - dw_lo[_S_THT]
        dfdu[s, i] = (1.0 - dw_go[_S_WG]) * k_gas
        dfdu[s + 1, i] = (dw_l[_S_WG] - dw_lo[_S_WG]) * k_gas
        # measurements: P_rh in barg, Q_l in L/min, Q_g passthrough
        dhdx[i, s] = dP_rh[_S_MG] / 1e5
        dhdx[i, s + 1] = dP_rh[_S_ML] / 1e5
        dhdth[i, s] = dP_rh[_S_THR] / 1e5
        dhdth[i, s + 1] = dP_rh[_S_THT] / 1e5
        dhdu[i, i] = dP_rh[_S_WG] * k_gas / 1e5
        dhdx[4 + i, s] = dw_lo[_S_MG] * lpm
        dhdx[4 + i, s + 1] = dw_lo[_S_ML] * lpm
        dhdth[4 + i, s] = dw_lo[_S_THR] * lpm
        dhdth[4 + i, s + 1] = dw_lo[_S_THT] * lpm
        dhdu[4 + i, i] = dw_lo[_S_WG] * k_gas * lpm
        dhdu[7 + i, i] = 1.0
    return ModelJacobians(dfdx, dfdth, dfdu, dhdx, dhdth, dhdu)


def well_steady_residual_fwd(mg, ml, u_slpm, vo, P_pump, thr, tht,
                             consts, geom, alpha_ov=NAN, theta_is_alpha=False):
    """Steady residual of one well and its partials.

    Residual r = (wg_in - w_g_out, w_l - w_l_out) in kg/s. Returns
    (r, dr_dm, dr_du, dr_dth, aux) where dr_dm is 2x2 wrt (mg, ml),
    dr_du is 2-vector wrt u in sL/min, dr_dth is 2x2 wrt the well's
    estimable pair: (theta_res, theta_top), or (theta_res, alpha_l)
    when theta_is_alpha is set. aux carries (P_bi, P_rh, w_l_out) values
    and their partial rows for output maps and pressure guards.
    """
    par = chain_params(consts, geom)
    k_gas = consts.rho_g_std / 60000.0
    res = K.well_chain_fwd(mg, ml, u_slpm * k_gas, vo, thr, tht,
                           alpha_ov, P_pump, *par)
    if res[0] != K.OK:
        raise_model_error(res[0])
    vals, J = res[1], res[2]
    dP_bi, dP_rh, dw_l, _, dw_lo, dw_go = J
    r = np.array([u_slpm * k_gas - vals[7], vals[4] - vals[6]])
    dr_dm = np.array([[-dw_go[_S_MG], -dw_go[_S_ML]],
                      [dw_l[_S_MG] - dw_lo[_S_MG], dw_l[_S_ML] - dw_lo[_S_ML]]])
    dr_du = np.array([(1.0 - dw_go[_S_WG]) * k_gas,
                      (dw_l[_S_WG] - dw_lo[_S_WG]) * k_gas])
    ith = _S_AOV if theta_is_alpha else _S_THT
    dr_dth = np.array([[-dw_go[_S_THR], -dw_go[ith]],
                       [dw_l[_S_THR] - dw_lo[_S_THR], dw_l[ith] - dw_lo[ith]]])
    aux = {
        "P_bi": vals[2], "P_rh": vals[3], "w_l_out": vals[6],
        "alpha_l": vals[8],
        "dP_bi": np.asarray(dP_bi), "dP_rh": np.asarray(dP_rh),
        "dw_l_out": np.asarray(dw_lo),
    }
    return r, dr_dm, dr_du, dr_dth, aux


def _well_residual(mg, ml, wg, vo, Pp, thr, tht, par):
    r = K.well_chain(mg, ml, wg, vo, thr, tht, NAN, Pp, *par)
    if r[0] != K.OK:
        return None
    return (wg - r[8], r[5] - r[7])


def _newton_well(mg, ml, wg, vo, Pp, thr, tht, par, tol, max_iter):
    """Damped Newton on the 2-state steady residual of one well."""
    r = _well_residual(mg, ml, wg, vo, Pp, thr, tht, par)
    if r is None:
        raise NoConvergence(0, float("inf"))
    last_res = sqrt(r[0] * r[0] + r[1] * r[1])
    for it in range(max_iter):
        if max(abs(r[0]), abs(r[1])) < tol:
            return mg, ml
        res = K.well_chain_fwd(mg, ml, wg, vo, thr, tht, NAN, Pp, *par)
        if res[0] != K.OK:
            raise_model_error(res[0])
        J = res[2]
        dw_l, dw_lo, dw_go = J[2], J[4], J[5]
        a = -dw_go[_S_MG]
        b = -dw_go[_S_ML]
        c = dw_l[_S_MG] - dw_lo[_S_MG]
        d = dw_l[_S_ML] - dw_lo[_S_ML]
        det = a * d - b * c
        if det == 0.0:
            raise NoConvergence(it, last_res)
        pg = -(d * r[0] - b * r[1]) / det
        pl = -(a * r[1] - c * r[0]) / det
        lam = 1.0
        moved = False
        while lam > 1e-12:
            r_new = _well_residual(mg + lam * pg, ml + lam * pl,
                                   wg, vo, Pp, thr, tht, par)
            if r_new is not None:
                nrm = sqrt(r_new[0] * r_new[0] + r_new[1] * r_new[1])
                if nrm < (1.0 - 1e-4 * lam) * last_res:
                    mg += lam * pg
                    ml += lam * pl
                    r = r_new
                    last_res = nrm
                    moved = True
                    break
            lam *= 0.5
        if not moved:
            raise NoConvergence(it, last_res)
    if max(abs(r[0]), abs(r[1])) < tol:
        return mg, ml
    raise NoConvergence(max_iter, last_res)


def _holdup_at_balance(P_bi, wg, vo, Pp, thr, tht, par):
    """Hold-up masses and net flow imbalance at a trial injection pressure.

    Pinning the hold-up split to the steady flow ratio reduces the
    2-state steady problem to one scalar balance in P_bi.  Returns
    (imbalance, m_g, m_l); positive imbalance means the column takes in
    more than the riser discharges.
    """
    rho_l, RT_Mg, gdH, Cf, Patm, Vtot = par
    rho_g = P_bi / RT_Mg
    w_l = vo * thr * sqrt(rho_l * (Pp - P_bi))
    ratio = w_l / wg
    m_g = rho_g * Vtot * rho_l / (rho_l + ratio * rho_g)
    m_l = ratio * m_g
    rho_mix = (m_g + m_l) / Vtot
    w_tot = w_l + wg
    dP_top = P_bi - rho_mix * gdH - Cf * w_tot / rho_mix - Patm
    out = tht * sqrt(rho_mix * dP_top) if dP_top > 0.0 else 0.0
    return w_tot - out, m_g, m_l


_SCAN_POINTS = 256


def _solve_well(wg, vo, Pp, thr, tht, consts, geom, guess, tol, max_iter):
    """Steady state of one well.

    A warm guess goes straight to damped Newton.  Cold solves scan the
    injection pressure for flow-balance sign changes, bisect each
    bracket, and polish the resulting masses with the same Newton
    iteration.  Should several balance points exist, the lowest
    injection pressure (highest production) wins, or the one nearest
    the guess when Newton rejected it.
    """
    par = chain_params(consts, geom)
    if wg <= 0.0:
        raise InfeasibleRegime("no steady state without gas injection")
    if guess is not None:
        try:
            return _newton_well(guess[0], guess[1], wg, vo, Pp, thr, tht,
                                par, tol, max_iter)
        except (NoConvergence, ModelDomainError):
            pass
    rho_l, RT_Mg = par[0], par[1]
    Patm, Vtot = par[4], par[5]
    lo, hi = Patm + 1.0, Pp - 1.0
    if hi <= lo:
        raise InfeasibleRegime("pump pressure at or below atmospheric")
    grid = np.linspace(lo, hi, _SCAN_POINTS)
    p_prev = grid[0]
    f_prev = _holdup_at_balance(p_prev, wg, vo, Pp, thr, tht, par)[0]
    roots = []
    for p in grid[1:]:
        f = _holdup_at_balance(p, wg, vo, Pp, thr, tht, par)[0]
        if f_prev == 0.0:
            roots.append(p_prev)
        elif (f_prev > 0.0) != (f > 0.0):
            a, fa, b = p_prev, f_prev, p
            for _ in range(50):
                m = 0.5 * (a + b)
                fm = _holdup_at_balance(m, wg, vo, Pp, thr, tht, par)[0]
                if fm == 0.0:
                    a = b = m
                    break
                if (fa > 0.0) == (fm > 0.0):
                    a, fa = m, fm
                else:
                    b = m
            roots.append(0.5 * (a + b))
        p_prev, f_prev = p, f
    if f_prev == 0.0:
        roots.append(p_prev)
    if not roots:
        raise InfeasibleRegime(
            "inflow and riser discharge never balance over the feasible "
            "injection-pressure range")
    if guess is not None and len(roots) > 1:
        v_gas = Vtot - guess[1] / rho_l
        if v_gas > 0.0:
            pb_guess = RT_Mg * guess[0] / v_gas
            roots.sort(key=lambda p: abs(p - pb_guess))
    _, mg0, ml0 = _holdup_at_balance(roots[0], wg, vo, Pp, thr, tht, par)
    return _newton_well(mg0, ml0, wg, vo, Pp, thr, tht, par, tol, max_iter)


def steady_state_solve(inputs: ControlInputs, dist, theta, consts, geom,
                       guess: NetworkState = None, tol=1e-10, max_iter=80):
    """Solve the network steady state well by well (damped Newton)."""
    rho_std = consts.rho_g_std
    u = inputs.as_array()
    mg = np.empty(3)
    ml = np.empty(3)
    for i in range(3):
        g = None
        if guess is not None:
            g = (guess.m_g[i], guess.m_l[i])
        mg[i], ml[i] = _solve_well(slpm_to_kgps(u[i], rho_std), dist.v_o[i],
                                   dist.P_pump, theta.theta_res[i],
                                   theta.theta_top[i], consts, geom,
                                   g, tol, max_iter)
    return NetworkState(m_g=mg, m_l=ml)


def steady_outputs(inputs, dist, theta, consts, geom, guess=None):
    """Steady state plus its noise-free outputs."""
    st = steady_state_solve(inputs, dist, theta, consts, geom, guess)
    out = measurement_map(st, inputs, dist, theta, consts, geom)
    return st, out
