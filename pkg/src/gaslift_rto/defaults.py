"""Default constants, geometry, calibration, and tuning knobs.

Everything the harness config file can override lives here as a plain
module constant, grouped by the module that consumes it.  The theta
values were calibrated once (scripts/calibrate.py) so that at v_o = 1,
Q_g = 2.5 sL/min per well and P_pump = 0.3 barg the steady liquid rates
are 5.5 / 2.5 / 6.5 L/min with riser-head pressures of 0.005 / 0.05 /
0.005 barg, which keeps every well inside the 2-15 L/min envelope over
the whole input box.
"""

import numpy as np

from .model import (
    ControlInputs,
    DisturbanceState,
    PhysicalConstants,
    RigGeometry,
    ThetaVector,
)

# ----------------------------------------------------------------- physics

CONSTANTS = PhysicalConstants(
    rho_l=1700.0,          # kg/m3, glycerol/salt surrogate liquid
    mu_mix=0.005,          # Pa s
    M_g=0.02897,           # kg/mol, air
    R_gas=8.314462618,     # J/(mol K)
    T_amb=293.15,          # K
    g_acc=9.81,            # m/s2
    P_atm=101325.0,        # Pa
)

GEOMETRY = RigGeometry(D=0.02, L=3.7, dH=2.2)

THETA_NOMINAL = ThetaVector(
    theta_res=np.array([8.804409850423526e-05,
                        2.6453455470279645e-05,
                        1.8800042258944558e-04]),
    theta_top=np.array([1.9683512241646035e-04,
                        3.258182451189294e-05,
                        2.2761655912957834e-04]),
)

P_PUMP_DEFAULT = 131325.0        # Pa absolute (0.3 barg)
VO_DEFAULT = (1.0, 1.0, 1.0)

DIST_NOMINAL = DisturbanceState(v_o=VO_DEFAULT, P_pump=P_PUMP_DEFAULT)

# Bounds used by the fitting and estimation layers; wide multiplicative
# box around the nominal valve coefficients.
THETA_LO = THETA_NOMINAL.as_flat() * 0.2
THETA_HI = THETA_NOMINAL.as_flat() * 5.0

# ---------------------------------------------------------------- economics

PRICES = (20.0, 10.0, 30.0)      # $ per (L/min) of produced liquid, per well
U_MIN = 1.0                      # sL/min per well
U_MAX = 5.0
U_TOTAL_MAX = 7.5                # shared compressor limit, sum of setpoints
U_BASELINE = ControlInputs(Q_g_sp=(2.5, 2.5, 2.5))

# ----------------------------------------------------------------- twin

DT_INT = 0.004                   # s, RK4 substep (stability limit ~0.0054)
SENSOR_PERIOD = 1.0              # s, logging and measurement period
TAU_CTRL = 4.0 / 3.0             # s, gas-lift flow controller lag
NOISE_STD_P = 50.0               # Pa, pressure channels
NOISE_STD_QL = 0.1               # L/min, liquid flow channels
NOISE_STD_QG = 0.05              # sL/min, gas flow channels

# ------------------------------------------------------------- supervisors

SUPERVISOR_PERIOD = 10.0         # s between supervisor iterations
K_U = 0.4                        # input filter gain (ROPA and SSRTO)
SSD_WINDOW_S = 40.0              # steady-state detection window
SSD_ALPHA = 0.9                  # SSD significance level (two-sided)
DRTO_NP = 6                      # prediction horizon, elements of T_P
DRTO_TP = 10.0                   # s per element
DRTO_R = 0.01                    # input move penalty weight
DU_MAX = 2.0                     # sL/min max move per element (DRTO)

# --------------------------------------------------------------- scenarios

HORIZON_S = 1200.0
N_SEEDS_DEFAULT = 4
STEPTEST_WELL = 0
STEPTEST_MAGNITUDE = -1.5        # sL/min
