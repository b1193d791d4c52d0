"""Unit conversions at the package boundary.

Everything inside the model is strict SI (kg, m, s, Pa, K). Field units
(L/min for liquid, sL/min for gas, barg for pressures) exist only in
measurement vectors, configs and logs, and every conversion goes through
this module.

Standard conditions for "standard liters": 1 atm and 293.15 K. Gas mass
flow and standard volumetric flow are related through the gas density at
those conditions, which depends on the molar mass of the gas in use.
"""

P_STD = 101325.0  # Pa
T_STD = 293.15    # K


def rho_gas_std(M_g: float, R_gas: float) -> float:
    """Gas density at standard conditions (ideal gas), kg/m3."""
    return P_STD * M_g / (R_gas * T_STD)


def slpm_to_kgps(q_slpm: float, rho_std: float) -> float:
    """Standard liters per minute -> kg/s."""
    return q_slpm * rho_std / 60000.0


def kgps_to_slpm(w: float, rho_std: float) -> float:
    """kg/s -> standard liters per minute."""
    return w * 60000.0 / rho_std


def lpm_to_kgps(q_lpm: float, rho_l: float) -> float:
    """Liquid liters per minute -> kg/s."""
    return q_lpm * rho_l / 60000.0


def kgps_to_lpm(w: float, rho_l: float) -> float:
    """kg/s -> liquid liters per minute."""
    return w * 60000.0 / rho_l


def pa_to_barg(p_abs: float, P_atm: float) -> float:
    """Absolute Pa -> gauge bar (relative to the configured atmosphere)."""
    return (p_abs - P_atm) / 1e5


def barg_to_pa(p_barg: float, P_atm: float) -> float:
    """Gauge bar -> absolute Pa."""
    return p_barg * 1e5 + P_atm
