"""Carrier-gas flow physics: pump, MFC, pressure balance, bubbler vapor pressure.

The pump displaces ``S_nom`` above a threshold pressure and ramps
linearly down to zero at its base pressure.  The MFC displacement at
reactor conditions scales the standard-condition volume flow by
``T * 101325 / (p * 273.15)``.  Their balance point sets the inlet
pressure; the Hagen-Poiseuille gradient rides on top and is tiny under
operating conditions.  All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import SCCM_TO_M3S, STANDARD_PRESSURE, STANDARD_TEMPERATURE
from .errors import ConfigPhysicsError

#: relative residual required of the pump/MFC balance
BALANCE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class FlowState:
    """Carrier-gas operating point for one (flow, temperature) setting."""

    mfc_sccm: float
    reactor_temperature: float
    inlet_pressure: float  # [Pa]
    axial_velocity: float  # [m/s], constant along the tube
    pressure_profile: np.ndarray  # [Pa] per section


def pump_speed(p: float, pump) -> float:
    """Pump displacement [m^3/s] at inlet pressure ``p`` [Pa], clamped at 0."""
    if p > pump.threshold_pressure:
        return pump.nominal_speed
    if p < pump.base_pressure:
        return 0.0
    span = pump.threshold_pressure - pump.base_pressure
    return pump.nominal_speed * (p - pump.base_pressure) / span


def mfc_displacement(f_sccm: float, temperature: float, pressure: float) -> float:
    """Volume displaced per second [m^3/s] at reactor conditions.

    Converts ``f_sccm`` from standard cm^3/min, then rescales the
    standard-condition flow to the local temperature and pressure.
    """
    if pressure <= 0.0:
        raise ConfigPhysicsError(f"pressure must be positive, got {pressure:g} Pa")
    if f_sccm < 0.0:
        raise ConfigPhysicsError(f"MFC flow must be >= 0, got {f_sccm:g} sccm")
    f_std = f_sccm * SCCM_TO_M3S
    return f_std * (temperature * STANDARD_PRESSURE) / (pressure * STANDARD_TEMPERATURE)


def _mfc_load(f_sccm: float, temperature: float) -> float:
    """K such that S_MFC(p) = K / p."""
    return f_sccm * SCCM_TO_M3S * temperature * STANDARD_PRESSURE / STANDARD_TEMPERATURE


def equilibrium_inlet_pressure(f_sccm: float, temperature: float, pump) -> float:
    """Pressure [Pa] at which pump and MFC displacement balance.

    Zero flow settles at the pump base pressure.  If the balance lies
    above the pump threshold the closed form ``K / S_nom`` applies;
    otherwise the ramp branch reduces to the positive root of
    ``p^2 - p_min p - K (p_thresh - p_min)/S_nom = 0``.
    """
    if f_sccm < 0.0:
        raise ConfigPhysicsError(f"MFC flow must be >= 0, got {f_sccm:g} sccm")
    if f_sccm == 0.0:
        return pump.base_pressure

    load = _mfc_load(f_sccm, temperature)
    p_closed = load / pump.nominal_speed
    if p_closed >= pump.threshold_pressure:
        return p_closed

    p_min = pump.base_pressure
    span = pump.threshold_pressure - p_min
    root = 0.5 * (p_min + math.sqrt(p_min * p_min + 4.0 * load * span / pump.nominal_speed))
    residual = abs(pump_speed(root, pump) - mfc_displacement(f_sccm, temperature, root))
    if not math.isfinite(root) or residual / pump.nominal_speed > BALANCE_TOLERANCE:
        raise ConfigPhysicsError(
            f"no consistent pump/MFC operating point for f={f_sccm:g} sccm, T={temperature:g} K"
        )
    return root


def pressure_drop_profile(
    f_sccm: float, temperature: float, p_inlet: float, geometry, viscosity: float
) -> np.ndarray:
    """Carrier pressure [Pa] at each section center under a constant gradient.

    ``dp/dx = -8 pi mu f_vol / A^2`` with the volumetric flow evaluated
    at reactor conditions; the gradient is treated as constant along x.
    """
    n = geometry.sections
    x = (np.arange(n) + 0.5) * (geometry.length / n)
    if f_sccm <= 0.0 or viscosity <= 0.0:
        return np.full(n, p_inlet)
    area = geometry.cross_section
    f_vol = mfc_displacement(f_sccm, temperature, p_inlet)
    slope = -8.0 * math.pi * viscosity * f_vol / (area * area)
    return p_inlet + slope * x


def carrier_velocity(f_sccm: float, temperature: float, pressure: float, geometry) -> float:
    """Axial carrier velocity [m/s]: displaced volume over cross-section."""
    if f_sccm == 0.0:
        return 0.0
    return mfc_displacement(f_sccm, temperature, pressure) / geometry.cross_section


def vapor_pressure(antoine: tuple[float, float, float], temperature: float) -> float:
    """Antoine vapor pressure [Pa]: ``10**(A - B/(C + T))``, T in kelvin."""
    a, b, c = antoine
    denom = c + temperature
    if denom <= 0.0:
        raise ConfigPhysicsError(
            f"Antoine denominator C+T must be positive, got {denom:g}"
        )
    return 10.0 ** (a - b / denom)


def compute_flow_state(f_sccm: float, temperature: float, config) -> FlowState:
    """Resolve the full operating point from an MFC setting and temperature."""
    p_inlet = equilibrium_inlet_pressure(f_sccm, temperature, config.pump)
    profile = pressure_drop_profile(
        f_sccm, temperature, p_inlet, config.geometry, config.carrier_gas.viscosity
    )
    velocity = carrier_velocity(f_sccm, temperature, p_inlet, config.geometry)
    return FlowState(
        mfc_sccm=f_sccm,
        reactor_temperature=temperature,
        inlet_pressure=p_inlet,
        axial_velocity=velocity,
        pressure_profile=profile,
    )
