"""Unit conversion helpers: round trips and hand-checked values."""

import pytest
from hypothesis import given, strategies as st

from gaslift_rto.units import (
    P_STD,
    T_STD,
    barg_to_pa,
    kgps_to_lpm,
    kgps_to_slpm,
    lpm_to_kgps,
    pa_to_barg,
    rho_gas_std,
    slpm_to_kgps,
)

AIR_M = 0.02897
R_GAS = 8.314462618


def test_standard_gas_density_air():
    # ideal gas at 1 atm, 20 C: 101325*0.02897/(8.314462618*293.15)
    rho = rho_gas_std(AIR_M, R_GAS)
    assert rho == pytest.approx(1.2043, abs=2e-4)


def test_standard_conditions():
    assert P_STD == 101325.0
    assert T_STD == 293.15


def test_one_lpm_identity():
    rho_l = 1700.0
    w = rho_l / 60000.0   # 1 L/min of liquid expressed in kg/s
    assert kgps_to_lpm(w, rho_l) == pytest.approx(1.0, rel=1e-14)


@given(st.floats(min_value=0.01, max_value=100.0))
def test_gas_flow_round_trip(q_slpm):
    rho_std = rho_gas_std(AIR_M, R_GAS)
    back = kgps_to_slpm(slpm_to_kgps(q_slpm, rho_std), rho_std)
    assert back == pytest.approx(q_slpm, rel=1e-12)


@given(st.floats(min_value=0.01, max_value=100.0))
def test_liquid_flow_round_trip(q_lpm):
    back = kgps_to_lpm(lpm_to_kgps(q_lpm, 1700.0), 1700.0)
    assert back == pytest.approx(q_lpm, rel=1e-12)


def test_gauge_pressure_conversions():
    assert pa_to_barg(101325.0, 101325.0) == 0.0
    assert pa_to_barg(131325.0, 101325.0) == pytest.approx(0.3, rel=1e-12)
    assert barg_to_pa(0.3, 101325.0) == pytest.approx(131325.0, rel=1e-12)


@given(st.floats(min_value=-0.5, max_value=10.0))
def test_gauge_round_trip(p_barg):
    assert pa_to_barg(barg_to_pa(p_barg, 101325.0), 101325.0) == pytest.approx(
        p_barg, abs=1e-12)
