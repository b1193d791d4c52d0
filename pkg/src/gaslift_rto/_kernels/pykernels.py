"""Pure-Python numerical kernels (fallback backend).

The compiled backend (_core.pyx) implements the same functions with the
same operation order on IEEE doubles, so both backends produce identical
bits. Keep any edit here in lockstep with _core.pyx: same formulas, same
association, same guards.

Conventions used throughout:
  flat state     y6 = (mg1, ml1, mg2, ml2, mg3, ml3)            [kg]
  twin state     y9 = y6 + (qg1, qg2, qg3)                      [sL/min]
  flat theta     th6 = (thr1, tht1, thr2, tht2, thr3, tht3)
  chain params   par = (rho_l, RT_Mg, gdH, Cf, Patm, Vtot)
with RT_Mg = R*T/M_g, gdH = g*dH, Cf = 128*mu*L/(pi*D^4).

Both transfer terms carry check valves: reservoir inflow stops when the
injection pressure reaches the pump pressure, riser outflow stops when
the head drops to atmosphere. Flow never reverses, so the chain stays
defined on transient states a supervisor step can reach.

Error codes: 0 ok, 1 pipe flooded, 4 non-positive holdup,
5 singular derivative (sqrt argument at zero in a fwd call).
Codes 2 and 3 are retired (those regimes now clamp to zero flow).
"""

from math import sqrt, isnan

OK = 0
ERR_FLOODED = 1
ERR_HOLDUP = 4
ERR_SINGULAR = 5

BACKEND_NAME = "python"


def well_chain(mg, ml, wg, vo, thr, tht, aov, Pp,
               rho_l, RT_Mg, gdH, Cf, Patm, Vtot):
    """Algebraic chain for one well.

    aov, when not NaN, overrides the outflow liquid volume fraction:
    it then sets both the mixture density and the phase split. The
    default (NaN) derives the fraction from the holdups, which gives
    exactly the homogeneous-mixture formulas.

    Returns (err, rho_g, rho_mix, P_bi, P_rh, w_l, w_total,
    w_l_out, w_g_out, alpha_l). On err != 0 the trailing values are 0.
    """
    if mg <= 0.0 or ml < 0.0:
        return (ERR_HOLDUP, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    Vg = Vtot - ml / rho_l
    if Vg <= 0.0:
        return (ERR_FLOODED, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    rho_g = mg / Vg
    P_bi = rho_g * RT_Mg
    if isnan(aov):
        rho_mix = (mg + ml) / Vtot
    else:
        rho_mix = aov * rho_l + (1.0 - aov) * rho_g
    dP_res = Pp - P_bi
    if dP_res > 0.0:
        w_l = vo * thr * sqrt(rho_l * dP_res)
    else:
        w_l = 0.0
    fric = Cf * (wg + w_l) / rho_mix
    P_rh = P_bi - rho_mix * gdH - fric
    dP_top = P_rh - Patm
    if dP_top > 0.0:
        w_total = tht * sqrt(rho_mix * dP_top)
    else:
        w_total = 0.0
    if isnan(aov):
        alpha = (ml / rho_l) / Vtot
        split = ml / (mg + ml)
    else:
        alpha = aov
        split = aov * rho_l / rho_mix
    w_l_out = split * w_total
    w_g_out = w_total - w_l_out
    return (OK, rho_g, rho_mix, P_bi, P_rh, w_l, w_total, w_l_out, w_g_out, alpha)


def well_chain_fwd(mg, ml, wg, vo, thr, tht, aov, Pp,
                   rho_l, RT_Mg, gdH, Cf, Patm, Vtot):
    """Chain plus forward-mode partials.

    Seed order: (mg, ml, wg, thr, tht, vo, Pp, aov).
    Returns (err, vals, J) where vals is the same 9-tuple of values as
    well_chain (without the error code) and J is a 6x8 nested tuple of
    partials of (P_bi, P_rh, w_l, w_total, w_l_out, w_g_out).
    """
    if mg <= 0.0 or ml < 0.0:
        return (ERR_HOLDUP, None, None)
    Vg = Vtot - ml / rho_l
    if Vg <= 0.0:
        return (ERR_FLOODED, None, None)
    rho_g = mg / Vg
    # d(quantity)/d(seed) carried as 8-lists; nonzero entries only.
    d_rho_g = [0.0] * 8
    d_rho_g[0] = 1.0 / Vg
    d_rho_g[1] = (rho_g / rho_l) / Vg      # via dVg = -dml/rho_l
    P_bi = rho_g * RT_Mg
    d_P_bi = [x * RT_Mg for x in d_rho_g]
    if isnan(aov):
        rho_mix = (mg + ml) / Vtot
        d_rho_mix = [0.0] * 8
        d_rho_mix[0] = 1.0 / Vtot
        d_rho_mix[1] = 1.0 / Vtot
    else:
        rho_mix = aov * rho_l + (1.0 - aov) * rho_g
        d_rho_mix = [(1.0 - aov) * x for x in d_rho_g]
        d_rho_mix[7] += rho_l - rho_g
    dP_res = Pp - P_bi
    if dP_res > 0.0:
        sq1 = sqrt(rho_l * dP_res)
        if sq1 == 0.0:
            return (ERR_SINGULAR, None, None)
        w_l = vo * thr * sq1
        c1 = vo * thr * rho_l / (2.0 * sq1)
        d_w_l = [-c1 * x for x in d_P_bi]
        d_w_l[3] += vo * sq1
        d_w_l[5] += thr * sq1
        d_w_l[6] += c1
    else:
        w_l = 0.0
        d_w_l = [0.0] * 8
    fric = Cf * (wg + w_l) / rho_mix
    c2 = Cf / rho_mix
    c3 = fric / rho_mix
    d_fric = [c2 * d_w_l[i] - c3 * d_rho_mix[i] for i in range(8)]
    d_fric[2] += c2
    P_rh = P_bi - rho_mix * gdH - fric
    d_P_rh = [d_P_bi[i] - gdH * d_rho_mix[i] - d_fric[i] for i in range(8)]
    dP_top = P_rh - Patm
    if dP_top > 0.0:
        sq2 = sqrt(rho_mix * dP_top)
        w_total = tht * sq2
        c4 = tht / (2.0 * sq2)
        d_w_total = [c4 * (d_rho_mix[i] * dP_top + rho_mix * d_P_rh[i])
                     for i in range(8)]
        d_w_total[4] += sq2
    else:
        w_total = 0.0
        d_w_total = [0.0] * 8
    mtot = mg + ml
    if isnan(aov):
        alpha = (ml / rho_l) / Vtot
        split = ml / mtot
        d_split = [0.0] * 8
        d_split[0] = -split / mtot
        d_split[1] = (1.0 - split) / mtot
    else:
        alpha = aov
        split = aov * rho_l / rho_mix
        d_split = [-(split / rho_mix) * d_rho_mix[i] for i in range(8)]
        d_split[7] += rho_l / rho_mix
    w_l_out = split * w_total
    d_w_l_out = [d_split[i] * w_total + split * d_w_total[i] for i in range(8)]
    w_g_out = w_total - w_l_out
    d_w_g_out = [d_w_total[i] - d_w_l_out[i] for i in range(8)]
    vals = (rho_g, rho_mix, P_bi, P_rh, w_l, w_total, w_l_out, w_g_out, alpha)
    J = (tuple(d_P_bi), tuple(d_P_rh), tuple(d_w_l),
         tuple(d_w_total), tuple(d_w_l_out), tuple(d_w_g_out))
    return (OK, vals, J)


def network_rhs(y6, wg3, vo3, Pp, th6, par):
    """Holdup balances for the three wells.

    wg3 in kg/s. Returns (err, well_index, dy6); on error dy6 is None.
    """
    rho_l, RT_Mg, gdH, Cf, Patm, Vtot = par
    dy = [0.0] * 6
    nan = float("nan")
    for i in range(3):
        r = well_chain(y6[2 * i], y6[2 * i + 1], wg3[i], vo3[i],
                       th6[2 * i], th6[2 * i + 1], nan, Pp,
                       rho_l, RT_Mg, gdH, Cf, Patm, Vtot)
        if r[0] != OK:
            return (r[0], i, None)
        # r = (err, rho_g, rho_mix, P_bi, P_rh, w_l, w_total, w_lo, w_go, a)
        dy[2 * i] = wg3[i] - r[8]
        dy[2 * i + 1] = r[5] - r[7]
    return (OK, -1, dy)


def _twin_rhs(y, sp3, vo3, Pp, th6, tau, k_gas, par, ideal):
    """Nine-state twin right-hand side; qg states in sL/min."""
    wg3 = (y[6] * k_gas, y[7] * k_gas, y[8] * k_gas)
    err, iw, dy6 = network_rhs(y, wg3, vo3, Pp, th6, par)
    if err != OK:
        return (err, iw, None)
    if ideal:
        dy = dy6 + [0.0, 0.0, 0.0]
    else:
        dy = dy6 + [(sp3[0] - y[6]) / tau,
                    (sp3[1] - y[7]) / tau,
                    (sp3[2] - y[8]) / tau]
    return (OK, -1, dy)


def twin_rk4(y9, sp3, vo3_a, vo3_b, Pp_a, Pp_b, th6, tau, rho_std,
             dt, n_sub, par):
    """Integrate the twin over n_sub RK4 steps of size dt.

    Disturbances move linearly from (vo3_a, Pp_a) at the window start to
    (vo3_b, Pp_b) at the window end. Returns (err, well_index, y9_out).
    """
    k_gas = rho_std / 60000.0
    ideal = tau <= 0.5 * dt
    y = list(y9)
    if ideal:
        y[6], y[7], y[8] = sp3[0], sp3[1], sp3[2]
    span = n_sub * dt
    dvo = ((vo3_b[0] - vo3_a[0]) / span, (vo3_b[1] - vo3_a[1]) / span,
           (vo3_b[2] - vo3_a[2]) / span)
    dPp = (Pp_b - Pp_a) / span

    def dist_at(t):
        return ((vo3_a[0] + dvo[0] * t, vo3_a[1] + dvo[1] * t,
                 vo3_a[2] + dvo[2] * t), Pp_a + dPp * t)

    for k in range(n_sub):
        t0 = k * dt
        vo_0, Pp_0 = dist_at(t0)
        vo_h, Pp_h = dist_at(t0 + 0.5 * dt)
        vo_1, Pp_1 = dist_at(t0 + dt)
        e, iw, k1 = _twin_rhs(y, sp3, vo_0, Pp_0, th6, tau, k_gas, par, ideal)
        if e != OK:
            return (e, iw, None)
        y2 = [y[i] + 0.5 * dt * k1[i] for i in range(9)]
        e, iw, k2 = _twin_rhs(y2, sp3, vo_h, Pp_h, th6, tau, k_gas, par, ideal)
        if e != OK:
            return (e, iw, None)
        y3 = [y[i] + 0.5 * dt * k2[i] for i in range(9)]
        e, iw, k3 = _twin_rhs(y3, sp3, vo_h, Pp_h, th6, tau, k_gas, par, ideal)
        if e != OK:
            return (e, iw, None)
        y4 = [y[i] + dt * k3[i] for i in range(9)]
        e, iw, k4 = _twin_rhs(y4, sp3, vo_1, Pp_1, th6, tau, k_gas, par, ideal)
        if e != OK:
            return (e, iw, None)
        y = [y[i] + dt * ((k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) / 6.0)
             for i in range(9)]
    return (OK, -1, y)
