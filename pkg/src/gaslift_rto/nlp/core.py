"""Dense SQP with a dual active-set QP subproblem.

The problems here are small (at most a few hundred variables), so
everything is dense: damped-BFGS Hessian approximation, l1-merit line
search, and a Goldfarb-Idnani style QP that starts from the
unconstrained minimizer and adds violated constraints one at a time.
Equality constraints are installed first and never dropped.

No randomness anywhere: identical problem and config give an identical
iterate sequence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..model import ModelDomainError

__all__ = ["NLProblem", "SolverConfig", "KKTResult", "solve", "solve_qp"]


@dataclass
class NLProblem:
    """min f(x) s.t. c_eq(x) = 0, c_in(x) <= 0, lb <= x <= ub.

    Callbacks may raise ModelDomainError at points outside the model's
    physical domain; the line search treats that as a rejected step.
    restore, when given, maps an infeasible point to a nearby feasible
    one (used as a last resort when the solver stops early).  hessian,
    when given, replaces the BFGS approximation with an exact (or
    Gauss-Newton) Lagrangian Hessian; it is floored to positive
    definite before each QP.
    """

    n_vars: int
    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    c_eq: Callable[[np.ndarray], np.ndarray]
    J_eq: Callable[[np.ndarray], np.ndarray]
    c_in: Callable[[np.ndarray], np.ndarray]
    J_in: Callable[[np.ndarray], np.ndarray]
    lb: np.ndarray
    ub: np.ndarray
    x0: np.ndarray
    restore: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    b0_diag: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.lb.shape != (self.n_vars,) or self.ub.shape != (self.n_vars,):
            raise ValueError("bound shapes do not match n_vars")
        if self.x0.shape != (self.n_vars,):
            raise ValueError("x0 shape does not match n_vars")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound above upper bound")


@dataclass(frozen=True)
class SolverConfig:
    kkt_tol: float = 1e-8
    max_iter: int = 80
    qp_tol: float = 1e-11
    qp_max_iter: int = 500
    ls_eta: float = 1e-4
    ls_min_alpha: float = 1e-10
    merit_safety: float = 1.2

    def __post_init__(self):
        for name in ("kkt_tol", "qp_tol", "ls_eta", "ls_min_alpha",
                     "merit_safety"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1 or self.qp_max_iter < 1:
            raise ValueError("iteration limits must be >= 1")


@dataclass
class KKTResult:
    x: np.ndarray
    lam_eq: np.ndarray
    lam_in: np.ndarray
    stationarity: float
    feasibility: float
    complementarity: float
    status: str                 # optimal | max_iterations |
    #                             line_search_failure | infeasible_qp
    iterations: int
    n_evals: int
    wall_time_s: float
    restored: bool = False
    trace: tuple = field(default_factory=tuple)

    @property
    def success(self):
        return self.status == "optimal"


def solve_qp(H, g, A_eq, b_eq, A_in, b_in, tol=1e-11, max_iter=500):
    """min 1/2 p'Hp + g'p  s.t.  A_eq p = b_eq, A_in p <= b_in.

    H must be symmetric positive definite.  Dual active-set method:
    start at the unconstrained minimizer, install equalities, then add
    the most violated inequality until none remain.  Returns
    (p, nu, lam, status) with lam >= 0; status is "optimal",
    "infeasible" or "max_iterations".
    """
    n = g.shape[0]
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, float)
    A_in = np.zeros((0, n)) if A_in is None else np.asarray(A_in, float)
    b_in = np.zeros(0) if b_in is None else np.asarray(b_in, float)
    m_e, m_i = A_eq.shape[0], A_in.shape[0]

    chol = cho_factor(H, lower=True)
    x = -cho_solve(chol, g)

    # active set: rows in >= orientation (inequalities enter as -a.x >= -b)
    rows: list[np.ndarray] = []
    kinds: list[int] = []       # index >= 0: inequality row; -1-i: equality i
    signs: list[float] = []     # orientation the row was added with
    mult: list[float] = []

    nu = np.zeros(m_e)
    lam = np.zeros(m_i)

    def drive_to(n_plus, gap):
        """Take steps until the new constraint n_plus.x >= current+gap holds."""
        nonlocal x
        u_new = 0.0
        for _ in range(max_iter):
            hn = cho_solve(chol, n_plus)
            if rows:
                N = np.array(rows)
                G = N @ cho_solve(chol, N.T)
                rhs = N @ hn
                try:
                    r = np.linalg.solve(G, rhs)
                except np.linalg.LinAlgError:
                    r = np.linalg.lstsq(G, rhs, rcond=None)[0]
                z = hn - cho_solve(chol, N.T @ r)
            else:
                r = np.zeros(0)
                z = hn
            curv = float(n_plus @ z)

            t1, blocker = np.inf, -1
            for k in range(len(rows)):
                if kinds[k] >= 0 and r[k] > tol:
                    cand = mult[k] / r[k]
                    if cand < t1 - 1e-15:
                        t1, blocker = cand, k
            if curv > tol:
                t2 = gap / curv
            else:
                t2 = np.inf
            if not np.isfinite(t1) and not np.isfinite(t2):
                return None, "infeasible"
            t = min(t1, t2)
            x = x + t * z
            for k in range(len(rows)):
                mult[k] -= t * r[k]
            u_new += t
            gap -= t * curv
            if t == t2 and np.isfinite(t2):
                return u_new, "added"
            # dual step hit a blocking inequality: drop it and continue
            del rows[blocker], kinds[blocker], signs[blocker], mult[blocker]
        return None, "max_iterations"

    # install all equality constraints at once via the Schur complement
    # of the KKT system (one shot instead of m_e dual walks)
    if m_e:
        HiA = cho_solve(chol, A_eq.T)
        S = A_eq @ HiA

        def schur_solve(r):
            try:
                return np.linalg.solve(S, r)
            except np.linalg.LinAlgError:
                return np.linalg.lstsq(S, r, rcond=None)[0]

        nu_eq = schur_solve(A_eq @ x - b_eq)
        x = x - HiA @ nu_eq
        # two refinement passes soak up the Schur conditioning
        for _ in range(2):
            resid = A_eq @ x - b_eq
            d_nu = schur_solve(resid)
            nu_eq += d_nu
            x = x - HiA @ d_nu
        resid = A_eq @ x - b_eq
        scale = 1.0 + float(np.abs(b_eq).max(initial=0.0))
        if float(np.abs(resid).max()) > 1e-7 * scale:
            return x, nu, lam, "infeasible"
        for i in range(m_e):
            rows.append(A_eq[i].copy())
            kinds.append(-1 - i)
            signs.append(1.0)
            # internal convention H x + g = sum u_k (signs_k a_k)
            mult.append(-float(nu_eq[i]))

    # inequality loop
    for _ in range(max_iter):
        viol = A_in @ x - b_in if m_i else np.zeros(0)
        worst = int(np.argmax(viol)) if m_i else -1
        if m_i == 0 or viol[worst] <= tol:
            for k in range(len(rows)):
                if kinds[k] >= 0:
                    lam[kinds[k]] = mult[k]
                else:
                    # stationarity convention H p + g + A_eq' nu = 0
                    nu[-1 - kinds[k]] = -signs[k] * mult[k]
            return x, nu, lam, "optimal"
        u_new, what = drive_to(-A_in[worst], viol[worst])
        if what != "added":
            return x, nu, lam, ("infeasible" if what == "infeasible"
                                else "max_iterations")
        rows.append(-A_in[worst])
        kinds.append(worst)
        signs.append(1.0)
        mult.append(u_new)
    return x, nu, lam, "max_iterations"


class _Evaluator:
    """Caches the full (f, g, cE, JE, cI, JI) bundle per point."""

    def __init__(self, problem):
        self.p = problem
        self.n_evals = 0
        self._key = None
        self._bundle = None

    def full(self, x):
        key = x.tobytes()
        if key != self._key:
            p = self.p
            f = float(p.objective(x))
            g = np.asarray(p.gradient(x), float)
            cE = np.atleast_1d(np.asarray(p.c_eq(x), float))
            JE = np.asarray(p.J_eq(x), float).reshape(cE.size, p.n_vars)
            cI = np.atleast_1d(np.asarray(p.c_in(x), float))
            JI = np.asarray(p.J_in(x), float).reshape(cI.size, p.n_vars)
            self._bundle = (f, g, cE, JE, cI, JI)
            self._key = key
            self.n_evals += 1
        return self._bundle

    def merit(self, x, mu):
        f, _, cE, _, cI, _ = self.full(x)
        return f + mu * (np.abs(cE).sum() + np.clip(cI, 0.0, None).sum())


def _floor_pd(H):
    """Symmetrize and damp H until it admits a Cholesky factorization."""
    H = 0.5 * (H + H.T)
    n = H.shape[0]
    lam = 1e-10 * max(1.0, float(np.trace(H)) / n)
    for _ in range(60):
        try:
            cho_factor(H + lam * np.eye(n), lower=True)
            return H + lam * np.eye(n)
        except np.linalg.LinAlgError:
            lam *= 10.0
    raise np.linalg.LinAlgError("could not regularize Hessian")


def _feasibility(cE, cI, x, lb, ub):
    parts = [0.0]
    if cE.size:
        parts.append(float(np.abs(cE).max()))
    if cI.size:
        parts.append(float(cI.max()))
    parts.append(float(np.max(lb - x, initial=0.0)))
    parts.append(float(np.max(x - ub, initial=0.0)))
    return max(parts)


def solve(problem: NLProblem, cfg: SolverConfig | None = None) -> KKTResult:
    """SQP driver; always returns the best iterate found."""
    if cfg is None:
        cfg = SolverConfig()
    t_start = time.perf_counter()
    n = problem.n_vars
    ev = _Evaluator(problem)

    x = np.clip(problem.x0.astype(float), problem.lb, problem.ub)
    if problem.b0_diag is not None:
        B = np.diag(np.asarray(problem.b0_diag, float))
        first_update = False
    else:
        B = np.eye(n)
        first_update = True
    mu = 1.0
    stall = 0
    status = "max_iterations"
    trace = []
    lam_eq = np.zeros(0)
    lam_in = np.zeros(0)
    kkt = (np.inf, np.inf, np.inf)
    iterations = 0

    for it in range(cfg.max_iter):
        iterations = it + 1
        f, g, cE, JE, cI, JI = ev.full(x)
        if problem.hessian is not None:
            B = _floor_pd(np.asarray(problem.hessian(x), float))

        # fold finite bounds into QP inequality rows
        fin_lb = np.isfinite(problem.lb)
        fin_ub = np.isfinite(problem.ub)
        A_qp = [JI] if cI.size else []
        b_qp = [-cI] if cI.size else []
        if fin_ub.any():
            A_qp.append(np.eye(n)[fin_ub])
            b_qp.append(problem.ub[fin_ub] - x[fin_ub])
        if fin_lb.any():
            A_qp.append(-np.eye(n)[fin_lb])
            b_qp.append(x[fin_lb] - problem.lb[fin_lb])
        A_in = np.vstack(A_qp) if A_qp else None
        b_in = np.concatenate(b_qp) if b_qp else None

        p, nu, lam_all, qp_status = solve_qp(
            B, g, JE if cE.size else None, -cE if cE.size else None,
            A_in, b_in, tol=cfg.qp_tol, max_iter=cfg.qp_max_iter)
        if qp_status == "infeasible":
            status = "infeasible_qp"
            break

        lam = lam_all[:cI.size] if cI.size else np.zeros(0)
        lam_bnd = lam_all[cI.size:] if A_in is not None else np.zeros(0)

        # KKT residuals at the current point with QP multipliers
        grad_L = g.copy()
        if cE.size:
            grad_L += JE.T @ nu
        if cI.size:
            grad_L += JI.T @ lam
        if lam_bnd.size:
            k = 0
            if fin_ub.any():
                nb = int(fin_ub.sum())
                grad_L[fin_ub] += lam_bnd[k:k + nb]
                k += nb
            if fin_lb.any():
                nb = int(fin_lb.sum())
                grad_L[fin_lb] -= lam_bnd[k:k + nb]
        stat = float(np.abs(grad_L).max()) if n else 0.0
        feas = _feasibility(cE, cI, x, problem.lb, problem.ub)
        compl = float(np.abs(lam * cI).max()) if cI.size else 0.0
        if lam_bnd.size:
            slacks = []
            if fin_ub.any():
                slacks.append(problem.ub[fin_ub] - x[fin_ub])
            if fin_lb.any():
                slacks.append(x[fin_lb] - problem.lb[fin_lb])
            compl = max(compl,
                        float(np.abs(lam_bnd * np.concatenate(slacks)).max()))
        kkt = (stat, feas, compl)
        lam_eq, lam_in = nu, lam
        if stat <= cfg.kkt_tol and feas <= cfg.kkt_tol and compl <= cfg.kkt_tol:
            status = "optimal"
            break

        step_inf = float(np.abs(p).max())
        if step_inf <= 1e-14 * (1.0 + float(np.abs(x).max())):
            status = "optimal" if feas <= cfg.kkt_tol else "line_search_failure"
            break

        lam_scale = max(
            float(np.abs(nu).max()) if nu.size else 0.0,
            float(np.abs(lam_all).max()) if lam_all.size else 0.0)
        mu_req = max(cfg.merit_safety * lam_scale, 1e-2)
        if mu_req > mu:
            mu = mu_req
        elif mu_req < 0.5 * mu:
            # let the penalty relax again after a transient multiplier spike,
            # otherwise one bad QP poisons every later line search
            mu = max(0.1 * mu, mu_req)

        viol0 = np.abs(cE).sum() + np.clip(cI, 0.0, None).sum()
        d_merit = float(g @ p) - mu * viol0
        phi0 = f + mu * viol0

        alpha, ok = 1.0, False
        step = p
        while alpha >= cfg.ls_min_alpha:
            try:
                phi = ev.merit(x + alpha * step, mu)
            except (ModelDomainError, FloatingPointError, OverflowError):
                phi = np.inf
            if phi <= phi0 + cfg.ls_eta * alpha * d_merit:
                ok = True
                break
            if alpha == 1.0 and cE.size:
                # second-order correction: the full step often fails the
                # merit test only because constraint curvature bends the
                # manifold away from the linearization, so bend the step
                # back toward it once before shrinking alpha
                try:
                    cE_t = ev.full(x + p)[2]
                    if np.abs(cE_t).sum() > np.abs(cE).sum():
                        M = JE @ JE.T
                        try:
                            w = np.linalg.solve(M, cE_t)
                        except np.linalg.LinAlgError:
                            w = np.linalg.lstsq(M, cE_t, rcond=None)[0]
                        x_soc = np.clip(x + p - JE.T @ w,
                                        problem.lb, problem.ub)
                        phi_soc = ev.merit(x_soc, mu)
                        if phi_soc <= phi0 + cfg.ls_eta * d_merit:
                            step = x_soc - x
                            ok = True
                            break
                except (ModelDomainError, FloatingPointError, OverflowError):
                    pass
            alpha *= 0.5
        trace.append((f, float(viol0), alpha if ok else 0.0))
        if not ok:
            # an exhausted line search at a near-KKT point is the merit
            # function hitting its numerical floor, not a failure
            if feas <= cfg.kkt_tol and stat <= 100.0 * cfg.kkt_tol:
                status = "optimal"
            else:
                status = "line_search_failure"
            break

        x_new = x + alpha * step
        if problem.hessian is not None:
            x = x_new
            continue
        _, g_new, cE_n, JE_n, cI_n, JI_n = ev.full(x_new)
        gL_old = g.copy()
        gL_new = g_new.copy()
        if cE.size:
            gL_old += JE.T @ nu
            gL_new += JE_n.T @ nu
        if cI.size:
            gL_old += JI.T @ lam
            gL_new += JI_n.T @ lam
        stall = stall + 1 if alpha < 1e-2 else 0
        if stall >= 2:
            # two consecutive crawling line searches: the curvature model
            # has gone bad, start it over
            if problem.b0_diag is not None:
                B = np.diag(np.asarray(problem.b0_diag, float))
            else:
                B = np.eye(n)
                first_update = True
            stall = 0

        s = x_new - x
        y = gL_new - gL_old
        sBs = float(s @ B @ s)
        sy = float(s @ y)
        if sBs > 0 and float(s @ s) > 1e-30:
            if first_update and sy > 1e-12:
                B *= float(y @ y) / sy
                sBs = float(s @ B @ s)
                first_update = False
            # Powell damping keeps B positive definite
            if sy < 0.2 * sBs:
                tau = 0.8 * sBs / (sBs - sy)
                y = tau * y + (1.0 - tau) * (B @ s)
                sy = float(s @ y)
            if sy > 1e-12:
                Bs = B @ s
                B = B - np.outer(Bs, Bs) / sBs + np.outer(y, y) / sy
                B = 0.5 * (B + B.T)
        x = x_new

    restored = False
    if kkt[1] > cfg.kkt_tol and problem.restore is not None:
        # best effort: a failing restoration leaves the iterate as is
        try:
            x_r = np.asarray(problem.restore(x), float)
            _, _, cE_r, _, cI_r, _ = ev.full(x_r)
            feas_r = _feasibility(cE_r, cI_r, x_r, problem.lb, problem.ub)
            if feas_r <= cfg.kkt_tol:
                x = x_r
                restored = True
                kkt = (kkt[0], feas_r, kkt[2])
        except Exception:  # noqa: BLE001
            pass

    return KKTResult(
        x=x, lam_eq=lam_eq, lam_in=lam_in,
        stationarity=kkt[0], feasibility=kkt[1], complementarity=kkt[2],
        status=status, iterations=iterations, n_evals=ev.n_evals,
        wall_time_s=time.perf_counter() - t_start,
        restored=restored, trace=tuple(trace))
