"""Typed reactor description, document loading, and built-in reference setups.

The configuration document is JSON with the sections of
:class:`ReactorConfig`; unknown keys are rejected so that typos fail
fast.  Field shape and typing errors raise :class:`ConfigSchemaError`,
dangling ids raise :class:`ConfigReferenceError`, and value-level
inconsistencies (negative site density, pump base pressure at or above
its threshold, ...) raise :class:`ConfigPhysicsError`.

Two reference configurations ship with the package.  They differ only
in chemical D: ``run1`` hides D behind a cold bubbler and slow kinetics
(about 30 s exposure to saturate once the bubbler is heated), ``run2``
makes D readily volatile and reactive so a single 1 s pulse passivates
the surface.  All numeric rate/vapor constants in those files are
implementer-chosen tuning values, not literature data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Literal, Union

import pydantic
from pydantic import BaseModel, ConfigDict, Field

from .errors import ConfigPhysicsError, ConfigReferenceError, ConfigSchemaError
from .recipe import ControlState, Recipe, expand

WILDCARD_SURFACE = "any"


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ReactorGeometry(_Model):
    length: float  # [m]
    diameter: float  # [m]
    sections: int
    wall_temperature_limit: float  # [K]

    @property
    def cross_section(self) -> float:
        return math.pi * (self.diameter / 2.0) ** 2

    @property
    def section_width(self) -> float:
        return self.length / self.sections


class PumpSpec(_Model):
    nominal_speed: float  # [m^3/s]
    base_pressure: float  # [Pa], displacement reaches zero here
    threshold_pressure: float  # [Pa], nominal speed above this


class CarrierGasSpec(_Model):
    viscosity: float  # [Pa s]


class MfcSpec(_Model):
    max_sccm: float = 100.0


class ChemicalSpec(_Model):
    name: str
    molar_mass: float  # [kg/mol]
    diffusion_coefficient: float  # [m^2/s], fixed laminar-regime value
    antoine: tuple[float, float, float] | None = None  # None for pure products
    decomposition_temperature: float | None = None  # [K]


class BubblerSpec(_Model):
    chemical: str
    temperature: float  # [K], initial setting
    valve_id: int
    temperature_limit: float  # [K]


class SurfaceSpec(_Model):
    name: str
    site_density: float  # [mol/m^2]
    group_molar_mass: float  # [kg/mol] per adsorbed group


class SolidSpec(_Model):
    name: str
    molar_mass: float  # [kg/mol]


class ConstantRate(_Model):
    form: Literal["constant"]
    k0: float


class ArrheniusRate(_Model):
    form: Literal["arrhenius"]
    prefactor: float
    activation_energy: float  # [J]


class LinearAboveThresholdRate(_Model):
    form: Literal["linear_above_threshold"]
    threshold: float  # [K]
    slope: float  # rate coefficient per kelvin above threshold


RateLawSpec = Union[ConstantRate, ArrheniusRate, LinearAboveThresholdRate]


class GasProduct(_Model):
    chemical: str
    coefficient: float = 1.0


class ReactionSpec(_Model):
    gas_reactant: str
    surface_reactant: str  # surface id, or "any" for decomposition channels
    surface_product: str
    gas_products: tuple[GasProduct, ...] = ()
    solid_delta: float = 0.0  # + deposits, - etches
    solid: str | None = None  # defaults to the single configured solid
    rate_law: RateLawSpec = Field(discriminator="form")


class SensorSpec(_Model):
    kind: Literal["pressure", "qcm"]
    position: float  # [m] from inlet


class ReactorConfig(_Model):
    geometry: ReactorGeometry
    pump: PumpSpec
    carrier_gas: CarrierGasSpec
    mfc: MfcSpec = MfcSpec()
    chemicals: tuple[ChemicalSpec, ...]
    bubblers: tuple[BubblerSpec, ...]
    surfaces: tuple[SurfaceSpec, ...]
    solids: tuple[SolidSpec, ...]
    reactions: tuple[ReactionSpec, ...]
    sensors: tuple[SensorSpec, ...]
    initial_surface: str
    initial_temperature: float = 500.0  # [K]
    soft_pressure_limit: float = 500.0  # [Pa]
    hard_temperature_limit: float = 700.0  # [K]

    # -- lookup helpers ------------------------------------------------
    def chemical_names(self) -> list[str]:
        return [c.name for c in self.chemicals]

    def surface_names(self) -> list[str]:
        return [s.name for s in self.surfaces]

    def chemical(self, name: str) -> ChemicalSpec:
        for c in self.chemicals:
            if c.name == name:
                return c
        raise ConfigReferenceError(f"unknown chemical {name!r}")

    def surface(self, name: str) -> SurfaceSpec:
        for s in self.surfaces:
            if s.name == name:
                return s
        raise ConfigReferenceError(f"unknown surface {name!r}")

    def bubbler_for_valve(self, valve_id: int) -> BubblerSpec | None:
        for b in self.bubblers:
            if b.valve_id == valve_id:
                return b
        return None

    def valve_ids(self) -> list[int]:
        return sorted(b.valve_id for b in self.bubblers)

    def pressure_sensors(self) -> list[SensorSpec]:
        return [s for s in self.sensors if s.kind == "pressure"]

    def qcm_sensors(self) -> list[SensorSpec]:
        return [s for s in self.sensors if s.kind == "qcm"]

    def to_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"


def _rate_law_nonnegative(law: RateLawSpec) -> bool:
    if isinstance(law, ConstantRate):
        return law.k0 >= 0.0
    if isinstance(law, ArrheniusRate):
        return law.prefactor >= 0.0
    return law.slope >= 0.0


def _cross_validate(cfg: ReactorConfig) -> ReactorConfig:
    """Reference and physics checks beyond document shape."""
    geo = cfg.geometry
    if geo.length <= 0 or geo.diameter <= 0:
        raise ConfigPhysicsError("tube length and diameter must be positive")
    if geo.sections < 3:
        raise ConfigPhysicsError(f"need at least 3 sections, got {geo.sections}")
    if geo.wall_temperature_limit <= 0:
        raise ConfigPhysicsError("wall temperature limit must be positive")

    if cfg.pump.nominal_speed <= 0:
        raise ConfigPhysicsError("pump nominal speed must be positive")
    if cfg.pump.base_pressure >= cfg.pump.threshold_pressure:
        raise ConfigPhysicsError(
            "pump base pressure must lie below its threshold pressure "
            f"({cfg.pump.base_pressure:g} >= {cfg.pump.threshold_pressure:g})"
        )
    if cfg.pump.base_pressure < 0:
        raise ConfigPhysicsError("pump base pressure must be >= 0")
    if cfg.carrier_gas.viscosity <= 0:
        raise ConfigPhysicsError("carrier viscosity must be positive")
    if cfg.mfc.max_sccm <= 0:
        raise ConfigPhysicsError("MFC range must be positive")
    if cfg.initial_temperature <= 0:
        raise ConfigPhysicsError("initial temperature must be positive")

    chem_names = set()
    for c in cfg.chemicals:
        if c.name in chem_names:
            raise ConfigReferenceError(f"duplicate chemical {c.name!r}")
        chem_names.add(c.name)
        if c.molar_mass <= 0:
            raise ConfigPhysicsError(f"chemical {c.name!r}: molar mass must be positive")
        if c.diffusion_coefficient <= 0:
            raise ConfigPhysicsError(
                f"chemical {c.name!r}: diffusion coefficient must be positive"
            )

    surf_names = set()
    for s in cfg.surfaces:
        if s.name in surf_names:
            raise ConfigReferenceError(f"duplicate surface {s.name!r}")
        surf_names.add(s.name)
        if s.site_density <= 0:
            raise ConfigPhysicsError(f"surface {s.name!r}: site density must be positive")
        if s.group_molar_mass < 0:
            raise ConfigPhysicsError(f"surface {s.name!r}: group molar mass must be >= 0")

    solid_names = set()
    for s in cfg.solids:
        if s.name in solid_names:
            raise ConfigReferenceError(f"duplicate solid {s.name!r}")
        solid_names.add(s.name)
        if s.molar_mass <= 0:
            raise ConfigPhysicsError(f"solid {s.name!r}: molar mass must be positive")

    seen_valves = set()
    for b in cfg.bubblers:
        if b.chemical not in chem_names:
            raise ConfigReferenceError(f"bubbler references unknown chemical {b.chemical!r}")
        if b.valve_id in seen_valves:
            raise ConfigReferenceError(f"duplicate bubbler valve id {b.valve_id}")
        seen_valves.add(b.valve_id)
        if cfg.chemical(b.chemical).antoine is None:
            raise ConfigPhysicsError(
                f"bubbler chemical {b.chemical!r} needs Antoine coefficients"
            )
        if b.temperature <= 0 or b.temperature_limit <= 0:
            raise ConfigPhysicsError(f"bubbler {b.chemical!r}: temperatures must be positive")

    for r in cfg.reactions:
        if r.gas_reactant not in chem_names:
            raise ConfigReferenceError(
                f"reaction references unknown chemical {r.gas_reactant!r}"
            )
        if r.surface_reactant != WILDCARD_SURFACE and r.surface_reactant not in surf_names:
            raise ConfigReferenceError(
                f"reaction references unknown surface {r.surface_reactant!r}"
            )
        if r.surface_product not in surf_names:
            raise ConfigReferenceError(
                f"reaction references unknown surface {r.surface_product!r}"
            )
        for gp in r.gas_products:
            if gp.chemical not in chem_names:
                raise ConfigReferenceError(
                    f"reaction product references unknown chemical {gp.chemical!r}"
                )
            if not math.isfinite(gp.coefficient):
                raise ConfigPhysicsError("gas product coefficients must be finite")
        if not math.isfinite(r.solid_delta):
            raise ConfigPhysicsError("solid stoichiometry must be finite")
        if r.solid_delta != 0.0:
            if not cfg.solids:
                raise ConfigReferenceError(
                    "reaction changes solid mass but no solid is configured"
                )
            if r.solid is not None and r.solid not in solid_names:
                raise ConfigReferenceError(f"reaction references unknown solid {r.solid!r}")
        if not _rate_law_nonnegative(r.rate_law):
            raise ConfigPhysicsError(
                "rate law must evaluate to a nonnegative coefficient at all "
                f"temperatures up to {geo.wall_temperature_limit:g} K"
            )

    if cfg.initial_surface not in surf_names:
        raise ConfigReferenceError(f"initial surface {cfg.initial_surface!r} is not defined")

    for s in cfg.sensors:
        if not (0.0 <= s.position <= geo.length):
            raise ConfigPhysicsError(
                f"sensor position {s.position:g} m outside tube of length {geo.length:g} m"
            )
    return cfg


def load_config(text: str) -> ReactorConfig:
    """Parse and fully validate a configuration document."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigSchemaError(f"configuration is not valid JSON: {e}") from None
    if not isinstance(raw, dict) or not raw:
        raise ConfigSchemaError("configuration document is empty")
    try:
        cfg = ReactorConfig.model_validate(raw)
    except pydantic.ValidationError as e:
        raise ConfigSchemaError(str(e)) from None
    return _cross_validate(cfg)


def reference_config(run: str) -> ReactorConfig:
    """Built-in configuration ``run1`` or ``run2``.

    The two differ only in chemical D's Antoine coefficients and the
    rate coefficients of the D surface reactions.
    """
    if run not in ("run1", "run2"):
        raise ConfigReferenceError(f"unknown reference configuration {run!r}")
    text = resources.files("alpsim.data").joinpath(f"{run}.json").read_text()
    return load_config(text)


def reference_config_text(run: str) -> str:
    """Raw JSON document of a built-in configuration (for CLI export)."""
    if run not in ("run1", "run2"):
        raise ConfigReferenceError(f"unknown reference configuration {run!r}")
    return resources.files("alpsim.data").joinpath(f"{run}.json").read_text()


# ----------------------------------------------------------------------
# Recipe validation against a configuration


@dataclass
class ValidationReport:
    """Outcome of checking a recipe against a configuration.

    Hard violations block execution; soft warnings are advisory and are
    surfaced in experiment narratives.
    """

    hard: list[str] = field(default_factory=list)
    soft: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.hard


def validate_recipe_against_config(
    recipe: Recipe,
    config: ReactorConfig,
    initial_controls: ControlState | None = None,
) -> ValidationReport:
    """Check every expanded step for hard violations and soft warnings.

    Hard: unknown valve/MFC/temperature-controller ids, MFC settings
    outside the configured range, temperature settings above the hard
    reactor limit or a bubbler's own limit.  Soft: simultaneously open
    valves (co-dosing) and reactor temperatures above any chemical's
    decomposition temperature.
    """
    report = ValidationReport()
    valve_ids = set(config.valve_ids())
    controls = initial_controls.copy() if initial_controls else ControlState()
    if controls.reactor_temperature is None:
        controls.reactor_temperature = config.initial_temperature

    codose_reported: set[tuple[int, ...]] = set()
    decomp_reported: set[str] = set()

    for seg in expand(recipe, controls):
        line = seg.line
        if line.action == "M":
            if line.component_id != 1:
                report.hard.append(f"line {line.line_no}: unknown MFC id {line.component_id}")
            elif not (0.0 <= line.setting <= config.mfc.max_sccm):
                report.hard.append(
                    f"line {line.line_no}: MFC setting {line.setting:g} sccm outside "
                    f"0-{config.mfc.max_sccm:g} sccm"
                )
        elif line.action == "V":
            if line.component_id not in valve_ids:
                report.hard.append(f"line {line.line_no}: unknown valve id {line.component_id}")
        else:  # temperature controller
            if line.component_id == 0:
                if line.setting > config.hard_temperature_limit:
                    report.hard.append(
                        f"line {line.line_no}: reactor temperature {line.setting:g} K above "
                        f"hard limit {config.hard_temperature_limit:g} K"
                    )
            elif line.component_id in valve_ids:
                bub = config.bubbler_for_valve(line.component_id)
                if line.setting > bub.temperature_limit:
                    report.hard.append(
                        f"line {line.line_no}: bubbler {line.component_id} temperature "
                        f"{line.setting:g} K above limit {bub.temperature_limit:g} K"
                    )
            else:
                report.hard.append(
                    f"line {line.line_no}: unknown temperature controller id {line.component_id}"
                )

        open_valves = tuple(v for v in seg.controls.open_valves() if v in valve_ids)
        if len(open_valves) >= 2 and open_valves not in codose_reported:
            codose_reported.add(open_valves)
            names = ", ".join(str(v) for v in open_valves)
            report.soft.append(f"valves {names} open simultaneously (co-dosing)")

        temp = seg.controls.reactor_temperature
        if temp is not None:
            for chem in config.chemicals:
                t_dec = chem.decomposition_temperature
                if t_dec is not None and temp > t_dec and chem.name not in decomp_reported:
                    decomp_reported.add(chem.name)
                    report.soft.append(
                        f"reactor temperature {temp:g} K above decomposition "
                        f"temperature of chemical {chem.name} ({t_dec:g} K)"
                    )
    return report
