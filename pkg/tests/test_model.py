"""Process model oracle tests.

The heavy checks here are finite-difference validation of the analytic
Jacobians, an independent re-evaluation of the algebraic chain, and
mass-conservation bookkeeping against trapezoid quadrature of the logged
flows. Random draws are confined to the feasible operating envelope and
redrawn when a sample lands in an infeasible regime.
"""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from gaslift_rto import defaults as dflt
from gaslift_rto import _kernels as K
from gaslift_rto.model import (
    ControlInputs,
    DisturbanceState,
    InfeasibleRegime,
    NetworkState,
    NoConvergence,
    NonPositiveHoldup,
    PipeFlooded,
    ThetaVector,
    algebraics,
    chain_params,
    jacobians,
    measurement_map,
    measurement_vector,
    rhs,
    steady_outputs,
    steady_state_solve,
    well_steady_residual_fwd,
)
from gaslift_rto.units import kgps_to_lpm, slpm_to_kgps

C = dflt.CONSTANTS
G = dflt.GEOMETRY
TH = dflt.THETA_NOMINAL
D1 = dflt.DIST_NOMINAL
K_GAS = C.rho_g_std / 60000.0


def draw_point(rng, perturb=True):
    """Random feasible operating point, optionally nudged off steady.

    Returns (state, inputs, dist, theta). The steady manifold runs close
    to both check valves (margins of a few hundred Pa), so the nudges are
    small and points whose margins fall below 20 Pa are redrawn: finite
    differences move P_bi by ~0.15 Pa and must never straddle a valve
    switch.
    """
    for _ in range(80):
        u = ControlInputs(tuple(rng.uniform(1.0, 5.0, 3)))
        dist = DisturbanceState(tuple(rng.uniform(0.45, 1.0, 3)),
                                dflt.P_PUMP_DEFAULT)
        th = ThetaVector(TH.theta_res * rng.uniform(0.8, 1.2, 3),
                         TH.theta_top * rng.uniform(0.8, 1.2, 3))
        try:
            state = steady_state_solve(u, dist, th, C, G)
        except (InfeasibleRegime, NoConvergence):
            continue
        if perturb:
            state.m_g *= 1.0 + rng.uniform(-0.001, 0.001, 3)
            state.m_l *= 1.0 + rng.uniform(-0.004, 0.004, 3)
        try:
            alg = algebraics(state, u.as_array() * K_GAS, dist, th, C, G)
        except Exception:
            continue
        margins_ok = all(
            dist.P_pump - a.P_bi > 60.0 and a.P_rh - C.P_atm > 60.0
            for a in alg)
        if margins_ok:
            return state, u, dist, th
    raise RuntimeError("could not draw a feasible point")


def rel_err(A, B):
    scale = max(np.abs(A).max(), np.abs(B).max(), 1e-30)
    denom = np.maximum(np.maximum(np.abs(A), np.abs(B)), 1e-9 * scale)
    return (np.abs(A - B) / denom).max()


# ------------------------------------------------------------ algebraics


def chain_residuals(state, wg, dist, th, alg):
    """Re-evaluate the seven algebraic relations independently.

    Returns the max relative residual between the returned WellAlgebraics
    and a from-scratch evaluation of the chain equations.
    """
    worst = 0.0
    V = G.V_total
    RT_Mg = C.R_gas * C.T_amb / C.M_g
    for i, a in enumerate(alg):
        mg, ml = state.m_g[i], state.m_l[i]
        rho_g = mg / (V - ml / C.rho_l)
        P_bi = rho_g * RT_Mg
        dp_res = dist.P_pump - P_bi
        w_l = th.theta_res[i] * dist.v_o[i] * math.sqrt(C.rho_l * dp_res) \
            if dp_res > 0.0 else 0.0
        rho_mix = (mg + ml) / V
        fric = 128.0 * C.mu_mix * G.L * (wg[i] + w_l) / (
            math.pi * rho_mix * G.D ** 4)
        P_rh = P_bi - rho_mix * C.g_acc * G.dH - fric
        dp_top = P_rh - C.P_atm
        w_total = th.theta_top[i] * math.sqrt(rho_mix * dp_top) \
            if dp_top > 0.0 else 0.0
        split = ml / (mg + ml)
        alpha = (ml / C.rho_l) / V
        ref = (rho_g, rho_mix, P_bi, P_rh, w_l, w_total,
               split * w_total, (1.0 - split) * w_total, alpha)
        got = (a.rho_g, a.rho_mix, a.P_bi, a.P_rh, a.w_l, a.w_total,
               a.w_l_out, a.w_g_out, a.alpha_l)
        for r, g in zip(ref, got):
            worst = max(worst, abs(r - g) / max(abs(r), abs(g), 1e-30))
    return worst


def test_algebraic_chain_self_consistent():
    rng = np.random.default_rng(11)
    for _ in range(10):
        state, u, dist, th = draw_point(rng)
        wg = u.as_array() * K_GAS
        alg = algebraics(state, wg, dist, th, C, G)
        assert chain_residuals(state, wg, dist, th, alg) < 1e-12


def test_balance_bookkeeping_identity():
    """rhs rows are exactly injection minus outflow / inflow minus outflow."""
    rng = np.random.default_rng(12)
    state, u, dist, th = draw_point(rng)
    wg = u.as_array() * K_GAS
    alg = algebraics(state, wg, dist, th, C, G)
    dy = rhs(state, wg, dist, th, C, G)
    for i, a in enumerate(alg):
        assert dy[2 * i] == wg[i] - a.w_g_out
        assert dy[2 * i + 1] == a.w_l - a.w_l_out


def test_pure_liquid_limit():
    state, u, dist, th = draw_point(np.random.default_rng(13), perturb=False)
    ml = state.m_l[0]
    for mg in (1e-6, 1e-8, 1e-10):
        r = K.well_chain(mg, ml, 2.5 * K_GAS, 1.0, TH.theta_res[0],
                         TH.theta_top[0], float("nan"), dflt.P_PUMP_DEFAULT,
                         *chain_params(C, G))
        assert r[0] == K.OK
        rho_mix, alpha = r[2], r[9]
        assert alpha > 1.0 - 2 * mg / ml
        assert rho_mix == pytest.approx((mg + ml) / G.V_total, rel=1e-14)
    assert alpha > 1.0 - 1e-9


def test_alpha_half_at_equal_masses():
    m = 0.3
    r = K.well_chain(m, m, 2.5 * K_GAS, 1.0, TH.theta_res[1],
                     TH.theta_top[1], float("nan"), dflt.P_PUMP_DEFAULT,
                     *chain_params(C, G))
    assert r[0] == K.OK
    assert r[9] == 0.5


def test_reservoir_check_valve_closes():
    # inflate gas holdup until P_bi exceeds the pump pressure
    state = NetworkState(m_g=np.array([8e-4, 8e-4, 8e-4]),
                         m_l=np.array([1.3, 1.3, 1.3]))
    wg = np.full(3, 2.5 * K_GAS)
    alg = algebraics(state, wg, D1, TH, C, G)
    for a in alg:
        assert a.P_bi > D1.P_pump
        assert a.w_l == 0.0
        assert a.w_total > 0.0
    dy = rhs(state, wg, D1, TH, C, G)
    assert all(dy[1::2] < 0.0)   # liquid drains, none enters


def test_top_valve_closes_below_atmospheric_head():
    # heavy column with little gas: riser head falls below atmosphere
    state = NetworkState(m_g=np.array([1e-4, 1e-4, 1e-4]),
                         m_l=np.array([1.8, 1.8, 1.8]))
    wg = np.full(3, 2.5 * K_GAS)
    alg = algebraics(state, wg, D1, TH, C, G)
    for a in alg:
        assert a.P_rh < C.P_atm
        assert a.w_total == 0.0
        assert a.w_l_out == 0.0 and a.w_g_out == 0.0
        assert a.w_l > 0.0
    dy = rhs(state, wg, D1, TH, C, G)
    assert all(dy > 0.0)   # both phases accumulate


def test_holdup_domain_errors():
    wg = np.full(3, 2.5 * K_GAS)
    bad_gas = NetworkState(m_g=np.array([0.0, 5e-4, 5e-4]),
                           m_l=np.array([1.3, 1.3, 1.3]))
    with pytest.raises(NonPositiveHoldup):
        algebraics(bad_gas, wg, D1, TH, C, G)
    flooded = NetworkState(m_g=np.array([5e-4, 5e-4, 5e-4]),
                           m_l=np.array([1.3, 1.3, 2.1]))
    with pytest.raises(PipeFlooded):
        algebraics(flooded, wg, D1, TH, C, G)


@settings(max_examples=200, deadline=None)
@given(mg=st.floats(min_value=1e-5, max_value=5e-3),
       ml=st.floats(min_value=0.3, max_value=1.9),
       u=st.floats(min_value=0.5, max_value=6.0))
def test_chain_outputs_physical(mg, ml, u):
    r = K.well_chain(mg, ml, u * K_GAS, 0.8, TH.theta_res[0],
                     TH.theta_top[0], float("nan"), dflt.P_PUMP_DEFAULT,
                     *chain_params(C, G))
    assume(r[0] == K.OK)
    _, rho_g, rho_mix, P_bi, P_rh, w_l, w_total, w_l_out, w_g_out, alpha = r
    assert rho_g > 0.0 and rho_mix > 0.0 and P_bi > 0.0
    assert w_l >= 0.0 and w_total >= 0.0
    assert 0.0 <= alpha <= 1.0
    assert w_l_out + w_g_out == pytest.approx(w_total, rel=1e-14)


# ------------------------------------------------------------- jacobians


def fd_model_jacobians(state, u, dist, th):
    """Central finite differences of rhs and measurement_vector.

    Step sizes are direction specific: holdup steps must stay small
    because P_bi has a 1.3e5 Pa lever arm against check-valve margins of
    a few hundred Pa, while theta and injection steps must be larger or
    the response drowns in the float noise of the algebraic chain (the
    injection direction is scaled down by ~2e-5 going to kg/s).
    """
    x0 = state.as_flat()
    th0 = th.as_flat()
    u0 = u.as_array()

    def f_of(x, thf, uu):
        s = NetworkState.from_flat(x)
        t = ThetaVector.from_flat(thf)
        wg = np.asarray(uu) * K_GAS
        return rhs(s, wg, dist, t, C, G)

    def h_of(x, thf, uu):
        s = NetworkState.from_flat(x)
        t = ThetaVector.from_flat(thf)
        return measurement_vector(s, ControlInputs(tuple(uu)), dist, t, C, G)

    def diff(fun, vec, j, h_rel, rest):
        h = h_rel * max(abs(vec[j]), 1e-12)
        vp, vm = vec.copy(), vec.copy()
        vp[j] += h
        vm[j] -= h
        return (fun(*rest(vp)) - fun(*rest(vm))) / (2.0 * h)

    dfdx = np.column_stack([diff(f_of, x0, j, 1e-7, lambda v: (v, th0, u0))
                            for j in range(6)])
    dfdth = np.column_stack([diff(f_of, th0, j, 1e-4, lambda v: (x0, v, u0))
                             for j in range(6)])
    dfdu = np.column_stack([diff(f_of, u0, j, 3e-4, lambda v: (x0, th0, v))
                            for j in range(3)])
    dhdx = np.column_stack([diff(h_of, x0, j, 1e-7, lambda v: (v, th0, u0))
                            for j in range(6)])
    dhdth = np.column_stack([diff(h_of, th0, j, 1e-4, lambda v: (x0, v, u0))
                             for j in range(6)])
    dhdu = np.column_stack([diff(h_of, u0, j, 3e-4, lambda v: (x0, th0, v))
                            for j in range(3)])
    return dfdx, dfdth, dfdu, dhdx, dhdth, dhdu


def test_jacobians_match_finite_differences():
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(100):
        state, u, dist, th = draw_point(rng)
        J = jacobians(state, u, dist, th, C, G)
        fd = fd_model_jacobians(state, u, dist, th)
        for a, b in zip((J.dfdx, J.dfdth, J.dfdu, J.dhdx, J.dhdth, J.dhdu),
                        fd):
            worst = max(worst, rel_err(a, b))
    assert worst < 1e-6, f"max Jacobian FD mismatch {worst:.3e}"


def test_jacobians_block_diagonal():
    state, u, dist, th = draw_point(np.random.default_rng(22))
    J = jacobians(state, u, dist, th, C, G)
    for i in range(3):
        rows = slice(2 * i, 2 * i + 2)
        mask = np.ones(6, dtype=bool)
        mask[2 * i:2 * i + 2] = False
        assert np.all(J.dfdx[rows][:, mask] == 0.0)
        assert np.all(J.dfdth[rows][:, mask] == 0.0)
        cols = np.ones(3, dtype=bool)
        cols[i] = False
        assert np.all(J.dfdu[rows][:, cols] == 0.0)


def test_gas_flow_measurement_passthrough():
    state, u, dist, th = draw_point(np.random.default_rng(23))
    J = jacobians(state, u, dist, th, C, G)
    assert np.allclose(J.dhdu[7:10, :], np.eye(3))
    assert np.all(J.dhdx[7:10, :] == 0.0)
    out = measurement_map(state, u, dist, th, C, G)
    assert np.array_equal(out.Q_g, u.as_array())
    assert out.P_pump == dist.P_pump


def test_steady_residual_fwd_matches_fd():
    rng = np.random.default_rng(24)
    for is_alpha in (False, True):
        state, u, dist, th = draw_point(rng)
        mg, ml = state.m_g[0], state.m_l[0]
        uu, vo = u.Q_g_sp[0], dist.v_o[0]
        thr, tht = th.theta_res[0], th.theta_top[0]
        aov = 0.7 if is_alpha else float("nan")

        def resid(mg_, ml_, u_, thr_, p2_):
            a = p2_ if is_alpha else float("nan")
            t = tht if is_alpha else p2_
            r, *_ = well_steady_residual_fwd(
                mg_, ml_, u_, vo, dist.P_pump, thr_, t, C, G,
                alpha_ov=a, theta_is_alpha=is_alpha)
            return r

        p2 = aov if is_alpha else tht
        r, dr_dm, dr_du, dr_dth, aux = well_steady_residual_fwd(
            mg, ml, uu, vo, dist.P_pump, thr, tht, C, G,
            alpha_ov=aov, theta_is_alpha=is_alpha)
        args = [mg, ml, uu, thr, p2]
        h_rels = (1e-7, 1e-7, 3e-4, 1e-4, 1e-4)
        cols = []
        for j, scale in enumerate(args):
            h = h_rels[j] * max(abs(scale), 1e-12)
            ap, am = list(args), list(args)
            ap[j] += h
            am[j] -= h
            cols.append((resid(*ap) - resid(*am)) / (2.0 * h))
        fd = np.column_stack(cols)
        assert rel_err(np.column_stack([dr_dm, dr_du[:, None],
                                        dr_dth]), fd) < 1e-6


# ----------------------------------------------------------- steady state


def test_steady_solve_residual_tolerance():
    rng = np.random.default_rng(31)
    solved = 0
    for _ in range(25):
        try:
            state, u, dist, th = draw_point(rng, perturb=False)
        except RuntimeError:
            continue
        dy = rhs(state, u.as_array() * K_GAS, dist, th, C, G)
        assert np.abs(dy).max() < 1e-10
        solved += 1
    assert solved >= 20


def test_steady_solve_fixed_point():
    state, u, dist, th = draw_point(np.random.default_rng(32), perturb=False)
    again = steady_state_solve(u, dist, th, C, G, guess=state)
    assert np.allclose(again.as_flat(), state.as_flat(), rtol=1e-12, atol=0)


def test_wells_solve_independently():
    u = ControlInputs((2.0, 3.0, 4.0))
    ref = steady_state_solve(u, D1, TH, C, G)
    # distort the guess for wells 2 and 3 only; well 1 answer is unchanged
    guess = ref.copy()
    guess.m_g[1:] *= 3.0
    guess.m_l[1:] *= 0.5
    redo = steady_state_solve(u, D1, TH, C, G, guess=guess)
    assert redo.m_g[0] == pytest.approx(ref.m_g[0], rel=1e-12)
    assert redo.m_l[0] == pytest.approx(ref.m_l[0], rel=1e-12)


def test_permutation_symmetry():
    perm = [2, 0, 1]
    u = (1.8, 2.6, 4.2)
    vo = (0.7, 0.55, 0.95)
    th_r = TH.theta_res.copy()
    th_t = TH.theta_top.copy()
    a = steady_outputs(ControlInputs(u), DisturbanceState(vo, D1.P_pump),
                       ThetaVector(th_r, th_t), C, G)[1]
    b = steady_outputs(
        ControlInputs(tuple(u[p] for p in perm)),
        DisturbanceState(tuple(vo[p] for p in perm), D1.P_pump),
        ThetaVector(th_r[perm], th_t[perm]), C, G)[1]
    assert np.allclose(b.Q_l, a.Q_l[perm], rtol=1e-10)
    assert np.allclose(b.P_rh, a.P_rh[perm], rtol=1e-10)


def test_no_injection_is_infeasible():
    with pytest.raises(InfeasibleRegime):
        steady_state_solve(ControlInputs((0.0, 0.0, 0.0)), D1, TH, C, G)


def test_calibration_anchor():
    _, out = steady_outputs(dflt.U_BASELINE, D1, TH, C, G)
    assert out.Q_l == pytest.approx([5.5, 2.5, 6.5], abs=1e-6)
    assert (out.P_rh - C.P_atm) / 1e5 == pytest.approx(
        [0.005, 0.05, 0.005], abs=1e-6)


def test_liquid_rates_reach_envelope():
    """At full opening there are feasible injections putting every well
    inside the 2..15 L/min production range."""
    for u1 in (2.5, 5.0):
        out = steady_outputs(ControlInputs((u1, u1, u1)), D1, TH, C, G)[1]
        assert np.all(out.Q_l > 2.0) and np.all(out.Q_l < 15.0)


@pytest.mark.xfail(
    strict=True,
    reason="this calibration has larger input/output gain at high "
           "reservoir opening, not low; see notes on surrogate tuning")
def test_gain_larger_at_low_opening():
    def gain(vo):
        dist = DisturbanceState((vo, vo, vo), D1.P_pump)
        lo = steady_outputs(ControlInputs((1.0, 2.5, 2.5)), dist, TH, C, G)[1]
        hi = steady_outputs(ControlInputs((2.0, 2.5, 2.5)), dist, TH, C, G)[1]
        return hi.Q_l[0] - lo.Q_l[0]

    assert gain(0.4) > gain(0.8)


# -------------------------------------------------------------- dynamics


def rk4_path(state, wg, dist, th, dt, n_steps):
    """Plain RK4 on the mass balances, logging per-well flow samples."""
    y = state.as_flat()
    flows = []   # (w_g_in, w_g_out, w_l_in, w_l_out) per well

    def f(yy):
        return rhs(NetworkState.from_flat(yy), wg, dist, th, C, G)

    def log(yy):
        alg = algebraics(NetworkState.from_flat(yy), wg, dist, th, C, G)
        flows.append([(wg[i], a.w_g_out, a.w_l, a.w_l_out)
                      for i, a in enumerate(alg)])

    log(y)
    for _ in range(n_steps):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        log(y)
    return NetworkState.from_flat(y), np.array(flows)


def test_mass_conservation_against_trapezoid():
    # A valve-opening step keeps most of the mass change on the slow
    # liquid mode, and dt must still resolve the ~2 ms gas mode or both
    # the RK4 path and the quadrature smear it and the comparison
    # saturates around 1e-4.
    start = steady_state_solve(dflt.U_BASELINE, D1, TH, C, G)
    dist = DisturbanceState((0.85, 0.85, 0.85), D1.P_pump)
    wg = dflt.U_BASELINE.as_array() * K_GAS
    dt, n = 1e-4, 40000
    end, flows = rk4_path(start, wg, dist, TH, dt, n)
    for i in range(3):
        dmg = end.m_g[i] - start.m_g[i]
        dml = end.m_l[i] - start.m_l[i]
        int_g = np.trapezoid(flows[:, i, 0] - flows[:, i, 1], dx=dt)
        int_l = np.trapezoid(flows[:, i, 2] - flows[:, i, 3], dx=dt)
        assert dmg == pytest.approx(int_g, rel=1e-6)
        assert dml == pytest.approx(int_l, rel=1e-6)


def test_steady_state_holds_for_sixty_seconds():
    start = steady_state_solve(dflt.U_BASELINE, D1, TH, C, G)
    y0 = np.concatenate([start.as_flat(), dflt.U_BASELINE.as_array()])
    par = chain_params(C, G)
    y = tuple(y0)
    sp = tuple(dflt.U_BASELINE.Q_g_sp)
    vo = tuple(D1.v_o)
    for _ in range(6):   # 6 x 10 s
        err, _, y = K.twin_rk4(y, sp, vo, vo, D1.P_pump, D1.P_pump,
                               tuple(TH.as_flat()), dflt.TAU_CTRL,
                               C.rho_g_std, dflt.DT_INT, 2500, par)
        assert err == K.OK
        assert np.abs(np.asarray(y[:6]) - y0[:6]).max() < 1e-6
