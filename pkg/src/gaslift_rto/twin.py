"""Closed-loop plant emulator for the three-well network.

Wraps the process model with the pieces a supervisor sees in practice:
first-order gas-flow control loops, a sensor that samples every second
with Gaussian noise, and a disturbance replay for reservoir depletion.
The integrator state carries nine entries per twin: the six holdups plus
the three actual (lagged) gas flows.
"""

import numpy as np
from dataclasses import dataclass, field

from . import _kernels as K
from . import defaults as dflt
from .model import (
    ControlInputs,
    DisturbanceState,
    NetworkState,
    ThetaVector,
    chain_params,
    measurement_vector,
    steady_state_solve,
)


class SimulationDiverged(Exception):
    """Integration left the model domain. Carries the sensor-period end
    time and the offending well (or None when unknown)."""

    def __init__(self, t, well, reason):
        self.t = t
        self.well = well
        super().__init__(f"simulation diverged near t={t:.3f} s "
                         f"(well {well}): {reason}")


ACTUATOR_MAX = 6.0   # sL/min, physical range of the gas flow loops


def default_noise_std():
    """Per-channel measurement noise, interface units (barg, L/min,
    sL/min), channel order matching model.MEAS_NAMES."""
    p = dflt.NOISE_STD_P / 1e5
    return (p, p, p, p,
            dflt.NOISE_STD_QL, dflt.NOISE_STD_QL, dflt.NOISE_STD_QL,
            dflt.NOISE_STD_QG, dflt.NOISE_STD_QG, dflt.NOISE_STD_QG)


@dataclass
class SimConfig:
    dt_int: float = dflt.DT_INT
    sensor_period: float = dflt.SENSOR_PERIOD
    tau_ctrl: float = dflt.TAU_CTRL
    noise_std: tuple = field(default_factory=default_noise_std)
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.dt_int <= self.sensor_period:
            raise ValueError("dt_int must be positive and at most the "
                             "sensor period")
        if self.tau_ctrl <= 0.0:
            raise ValueError("tau_ctrl must be positive")
        n = self.sensor_period / self.dt_int
        if abs(n - round(n)) > 1e-9:
            raise ValueError("dt_int must divide the sensor period")
        self.noise_std = tuple(float(s) for s in self.noise_std)
        if len(self.noise_std) != 10 or any(s < 0 for s in self.noise_std):
            raise ValueError("noise_std needs 10 nonnegative entries")

    @property
    def n_sub(self):
        return int(round(self.sensor_period / self.dt_int))


@dataclass(frozen=True)
class DisturbanceProfile:
    """Piecewise-linear disturbance replay.

    knots: ordered (time s, v_o triple, P_pump Pa absolute). Between
    knots each component interpolates linearly; outside the knot range
    the boundary value holds. Because the twin hands the integrator one
    segment per sensor period, knots are effectively sampled at
    sensor-period resolution; the default profile puts all of its knots
    on whole seconds so nothing is lost.
    """

    knots: tuple

    def __post_init__(self):
        times = [k[0] for k in self.knots]
        if len(times) == 0:
            raise ValueError("profile needs at least one knot")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("knot times must be strictly increasing")
        for _, v_o, P_pump in self.knots:
            DisturbanceState(tuple(v_o), P_pump)   # reuse its validation
        object.__setattr__(self, "_t", np.array(times))
        object.__setattr__(self, "_vo", np.array([k[1] for k in self.knots]))
        object.__setattr__(self, "_pp", np.array([k[2] for k in self.knots]))

    def at(self, t):
        vo = tuple(np.interp(t, self._t, self._vo[:, i]) for i in range(3))
        return DisturbanceState(v_o=vo, P_pump=float(
            np.interp(t, self._t, self._pp)))

    @property
    def t_end(self):
        return float(self._t[-1])


def constant_profile(v_o=dflt.VO_DEFAULT, P_pump=dflt.P_PUMP_DEFAULT):
    return DisturbanceProfile(knots=((0.0, tuple(v_o), P_pump),))


def default_depletion_profile():
    """Depletion scenario: wells 1 and 3 step from 0.8 down to 0.4
    opening (eight 0.05 steps with 1-s ramps, well 1 over minutes 4-12,
    well 3 over minutes 12-18), well 2 constant at 0.6, pump constant
    at 0.3 barg."""
    pp = dflt.P_PUMP_DEFAULT
    events = []   # (time, well, new value)
    for k in range(8):
        events.append((240.0 + 60.0 * k, 0, 0.8 - 0.05 * (k + 1)))
        events.append((720.0 + 45.0 * k, 2, 0.8 - 0.05 * (k + 1)))
    events.sort()
    vo = [0.8, 0.6, 0.8]
    knots = [(0.0, tuple(vo), pp)]
    for t, well, value in events:
        knots.append((t, tuple(vo), pp))          # hold until the ramp
        vo[well] = value
        knots.append((t + 1.0, tuple(vo), pp))    # 1-s ramp to the step
    knots.append((dflt.HORIZON_S, tuple(vo), pp))
    return DisturbanceProfile(knots=tuple(knots))


@dataclass
class TwinSnapshot:
    t: float
    true_state: NetworkState
    true_theta: ThetaVector
    measured: np.ndarray      # 10 channels, interface units
    applied_Qg: np.ndarray    # 3 setpoints in force during the period
    actual_Qg: np.ndarray     # 3 realized (lagged) gas flows


class GasLiftTwin:
    """One twin instance: sequential time stepping, per-channel RNG.

    Instances are single-use for determinism: a fresh instance with the
    same seed and inputs reproduces the identical snapshot sequence.
    """

    def __init__(self, cfg: SimConfig, profile: DisturbanceProfile = None,
                 theta_true: ThetaVector = None, consts=dflt.CONSTANTS,
                 geom=dflt.GEOMETRY, u0: ControlInputs = dflt.U_BASELINE,
                 init_state: NetworkState = None):
        self.cfg = cfg
        self.profile = profile if profile is not None else constant_profile()
        self.theta = (theta_true if theta_true is not None
                      else dflt.THETA_NOMINAL).copy()
        self.consts = consts
        self.geom = geom
        self._par = chain_params(consts, geom)
        self._streams = [np.random.default_rng(s) for s in
                         np.random.SeedSequence(cfg.rng_seed).spawn(10)]
        dist0 = self.profile.at(0.0)
        if init_state is None:
            init_state = steady_state_solve(u0, dist0, self.theta,
                                            consts, geom)
        self._y = np.concatenate([init_state.as_flat(), u0.as_array()])
        self._u0 = u0.as_array()

    def measure(self, state: NetworkState, actual_qg, t):
        """Noisy sensor vector at time t (advances the noise streams)."""
        clean = measurement_vector(state, ControlInputs(tuple(actual_qg)),
                                   self.profile.at(t), self.theta,
                                   self.consts, self.geom)
        noise = np.array([s.normal(0.0, sd) if sd > 0.0 else 0.0
                          for s, sd in zip(self._streams, self.cfg.noise_std)])
        return clean + noise

    def initial_snapshot(self):
        state = NetworkState.from_flat(self._y[:6])
        qg = self._y[6:9].copy()
        return TwinSnapshot(t=0.0, true_state=state,
                            true_theta=self.theta.copy(),
                            measured=self.measure(state, qg, 0.0),
                            applied_Qg=self._u0.copy(), actual_Qg=qg)

    def step(self, snapshot: TwinSnapshot, setpoints: ControlInputs):
        """Advance one sensor period under the given setpoints."""
        sp = np.clip(setpoints.as_array(), 0.0, ACTUATOR_MAX)
        t0 = snapshot.t
        t1 = t0 + self.cfg.sensor_period
        d0, d1 = self.profile.at(t0), self.profile.at(t1)
        err, well, y = K.twin_rk4(
            tuple(self._y), tuple(sp), tuple(d0.v_o), tuple(d1.v_o),
            d0.P_pump, d1.P_pump, tuple(self.theta.as_flat()),
            self.cfg.tau_ctrl, self.consts.rho_g_std, self.cfg.dt_int,
            self.cfg.n_sub, self._par)
        if err != K.OK:
            raise SimulationDiverged(t1, well, K.err_name(err))
        self._y = np.asarray(y)
        state = NetworkState.from_flat(self._y[:6])
        qg = self._y[6:9].copy()
        return TwinSnapshot(t=t1, true_state=state,
                            true_theta=self.theta.copy(),
                            measured=self.measure(state, qg, t1),
                            applied_Qg=sp, actual_Qg=qg)

    def run_scenario(self, horizon_s, schedule=None, controller=None,
                     controller_period=dflt.SUPERVISOR_PERIOD):
        """Run the loop and return the snapshot list.

        Exactly one input source: ``schedule`` is an ordered list of
        (time, setpoint triple) changes held piecewise-constant, while
        ``controller`` is called as controller(t, snapshot) every
        controller_period seconds (first call one period in) and
        returns new setpoints or None to hold. On divergence the
        partial log is attached to the raised exception.
        """
        if schedule is not None and controller is not None:
            raise ValueError("pass a schedule or a controller, not both")
        n = round(horizon_s / self.cfg.sensor_period)
        pending = sorted(schedule) if schedule else []
        snap = self.initial_snapshot()
        log = [snap]
        u = ControlInputs(tuple(self._u0))
        for k in range(n):
            t = snap.t
            while pending and pending[0][0] <= t + 1e-9:
                u = ControlInputs(tuple(pending.pop(0)[1]))
            if controller is not None and t > 0.0:
                periods = t / controller_period
                if abs(periods - round(periods)) < 1e-9:
                    new_u = controller(t, snap)
                    if new_u is not None:
                        u = ControlInputs(tuple(np.asarray(new_u)))
            try:
                snap = self.step(snap, u)
            except SimulationDiverged as exc:
                exc.partial_log = log
                raise
            log.append(snap)
        return log
