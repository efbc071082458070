"""Time integration of the coupled gas-transport / surface-coverage system.

Method of lines on a uniform 1D grid of cell centers: central
differences for diffusion, first-order upwind for advection, explicit
Euler in time with an adaptive step held safely inside the combined
diffusion/advection/kinetics stability limit.  Fluxes are assembled in
finite-volume form, so the discrete molar balance telescopes exactly.

Boundary conditions: Dirichlet at the inlet plane (vapor-pressure
concentration for every open valve, zero otherwise) and zero-curvature
outflow at the pump end, where the advective flux removes everything
that arrives.

Each recipe line runs as one sub-simulation started from the previous
line's end state; control changes apply instantaneously at the segment
start.  Surface coverages, deposited mass, and the QCM reference
persist across recipes, while gas concentrations reset at recipe start
because the reactor would pump down between processes anyway.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import flow
from .config import ReactorConfig, validate_recipe_against_config
from .constants import GAS_CONSTANT, SAMPLE_INTERVAL
from .errors import RecipeValidationError, SolverInstabilityError
from .kinetics import assemble_sources, compile_network, evaluate_k
from .recipe import ControlState, Recipe, SegmentSpec, expand
from .telemetry import TraceBuilder, TraceBundle, SegmentMark, absolute_qcm, sensor_section

_TIME_EPS = 1e-9


@dataclass
class SolverOptions:
    safety: float = 0.8  # fraction of the explicit stability limit
    min_dt: float = 1e-9  # [s]; collapsing below this aborts the run
    snapshot_interval: float = 0.0  # [s]; 0 disables full-field snapshots
    negative_tolerance: float = -1e-12  # concentrations below this abort


@dataclass
class ReactorState:
    """Complete mutable simulator state."""

    time: float
    reactor_temperature: float
    bubbler_temperatures: dict[int, float]  # by valve id
    valve_states: dict[int, int]  # by valve id, 0 closed / 1 open
    mfc_sccm: float
    concentrations: np.ndarray  # (chemicals, sections) [mol/m^3]
    coverages: np.ndarray  # (surfaces, sections), dimensionless
    solid_mass: np.ndarray  # (sections,) [kg/m^2]
    qcm_reference: np.ndarray  # (qcm sensors,) [ng/cm^2]
    bubbler_consumed: dict[int, float] = field(default_factory=dict)  # mol by valve id

    @classmethod
    def initial(cls, config: ReactorConfig) -> "ReactorState":
        geo = config.geometry
        n_g = len(config.chemicals)
        n_s = len(config.surfaces)
        coverages = np.zeros((n_s, geo.sections))
        start = config.surface_names().index(config.initial_surface)
        coverages[start, :] = 1.0
        state = cls(
            time=0.0,
            reactor_temperature=config.initial_temperature,
            bubbler_temperatures={b.valve_id: b.temperature for b in config.bubblers},
            valve_states={b.valve_id: 0 for b in config.bubblers},
            mfc_sccm=0.0,
            concentrations=np.zeros((n_g, geo.sections)),
            coverages=coverages,
            solid_mass=np.zeros(geo.sections),
            qcm_reference=np.zeros(len(config.qcm_sensors())),
            bubbler_consumed={b.valve_id: 0.0 for b in config.bubblers},
        )
        state.qcm_reference = np.array([
            absolute_qcm(state, config, sensor_section(s.position, config))
            for s in config.qcm_sensors()
        ])
        return state

    def copy(self) -> "ReactorState":
        return ReactorState(
            time=self.time,
            reactor_temperature=self.reactor_temperature,
            bubbler_temperatures=dict(self.bubbler_temperatures),
            valve_states=dict(self.valve_states),
            mfc_sccm=self.mfc_sccm,
            concentrations=self.concentrations.copy(),
            coverages=self.coverages.copy(),
            solid_mass=self.solid_mass.copy(),
            qcm_reference=self.qcm_reference.copy(),
            bubbler_consumed=dict(self.bubbler_consumed),
        )

    def controls(self) -> ControlState:
        return ControlState(
            valves=dict(self.valve_states),
            mfc_sccm=self.mfc_sccm,
            reactor_temperature=self.reactor_temperature,
            bubbler_temperatures=dict(self.bubbler_temperatures),
        )

    def to_dict(self) -> dict:
        return {
            "time": self.time,
            "reactor_temperature": self.reactor_temperature,
            "bubbler_temperatures": {str(k): v for k, v in self.bubbler_temperatures.items()},
            "valve_states": {str(k): v for k, v in self.valve_states.items()},
            "mfc_sccm": self.mfc_sccm,
            "concentrations": self.concentrations.tolist(),
            "coverages": self.coverages.tolist(),
            "solid_mass": self.solid_mass.tolist(),
            "qcm_reference": self.qcm_reference.tolist(),
            "bubbler_consumed": {str(k): v for k, v in self.bubbler_consumed.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReactorState":
        return cls(
            time=data["time"],
            reactor_temperature=data["reactor_temperature"],
            bubbler_temperatures={int(k): v for k, v in data["bubbler_temperatures"].items()},
            valve_states={int(k): v for k, v in data["valve_states"].items()},
            mfc_sccm=data["mfc_sccm"],
            concentrations=np.asarray(data["concentrations"], dtype=float),
            coverages=np.asarray(data["coverages"], dtype=float),
            solid_mass=np.asarray(data["solid_mass"], dtype=float),
            qcm_reference=np.asarray(data["qcm_reference"], dtype=float),
            bubbler_consumed={int(k): v for k, v in data["bubbler_consumed"].items()},
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "ReactorState":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def apply_boundary(state: ReactorState, config: ReactorConfig) -> np.ndarray:
    """Inlet-plane concentration [mol/m^3] per chemical (Dirichlet values).

    An open valve feeds its bubbler chemical at the bubbler vapor
    pressure over R times the reactor temperature; closed valves feed
    nothing.  Co-dosing sums contributions.
    """
    names = config.chemical_names()
    c_in = np.zeros(len(names))
    rt = GAS_CONSTANT * state.reactor_temperature
    for bub in config.bubblers:
        if state.valve_states.get(bub.valve_id, 0):
            chem = config.chemical(bub.chemical)
            p_vap = flow.vapor_pressure(chem.antoine, state.bubbler_temperatures[bub.valve_id])
            c_in[names.index(bub.chemical)] += p_vap / rt
    return c_in


@dataclass
class _SegmentContext:
    """Per-segment constants: controls do not change within a segment."""

    velocity: float
    p_inlet: float
    carrier_pressure: np.ndarray
    c_in: np.ndarray
    diffusion: np.ndarray  # (chemicals, 1)
    dx: float
    sink_rate_bound: float  # worst-case first-order gas loss [1/s]
    theta_rate_coeff: float  # worst-case coverage decay per unit concentration


def _segment_context(state: ReactorState, config: ReactorConfig) -> _SegmentContext:
    geo = config.geometry
    fs = flow.compute_flow_state(state.mfc_sccm, state.reactor_temperature, config)
    carrier = fs.pressure_profile
    velocity = fs.axial_velocity
    p_inlet = fs.inlet_pressure
    c_in = apply_boundary(state, config)
    diff = np.array([c.diffusion_coefficient for c in config.chemicals])[:, None]

    net = compile_network(config)
    wall = 4.0 / geo.diameter
    sigma_max = float(net.site_density.max()) if len(net.site_density) else 0.0
    sink_by_gas: dict[int, float] = {}
    decay_by_surface: dict[int, float] = {}
    for rx in net.reactions:
        k = evaluate_k(rx.rate_law, state.reactor_temperature)
        if k == 0.0:
            continue
        sigma = sigma_max if rx.surface < 0 else float(net.site_density[rx.surface])
        sink_by_gas[rx.gas] = sink_by_gas.get(rx.gas, 0.0) + k * sigma
        targets = range(len(net.site_density)) if rx.surface < 0 else (rx.surface,)
        for s in targets:
            decay_by_surface[s] = decay_by_surface.get(s, 0.0) + k
    sink_bound = wall * max(sink_by_gas.values(), default=0.0)
    theta_coeff = max(decay_by_surface.values(), default=0.0)
    return _SegmentContext(
        velocity=velocity,
        p_inlet=p_inlet,
        carrier_pressure=carrier,
        c_in=c_in,
        diffusion=diff,
        dx=geo.section_width,
        sink_rate_bound=sink_bound,
        theta_rate_coeff=theta_coeff,
    )


def _stable_dt(ctx: _SegmentContext, state: ReactorState, options: SolverOptions) -> float:
    # The inlet half-cell doubles the first cell's diffusive coupling,
    # hence 3 D / dx^2 rather than the interior 2 D / dx^2.
    diff_rate = 3.0 * float(ctx.diffusion.max()) / (ctx.dx * ctx.dx)
    adv_rate = ctx.velocity / ctx.dx
    c_bound = max(float(state.concentrations.max(initial=0.0)), float(ctx.c_in.max(initial=0.0)))
    denom = diff_rate + adv_rate
    if c_bound > 1e-30:  # kinetic limits only bind once gas is present
        denom += ctx.sink_rate_bound + ctx.theta_rate_coeff * c_bound
    if denom <= 0.0:
        return SAMPLE_INTERVAL
    return options.safety / denom


def step(
    state: ReactorState,
    dt: float,
    config: ReactorConfig,
    ctx: _SegmentContext | None = None,
    options: SolverOptions | None = None,
) -> ReactorState:
    """Advance the state in place by one explicit step of length ``dt``."""
    if ctx is None:
        ctx = _segment_context(state, config)
    if options is None:
        options = SolverOptions()

    c = state.concentrations
    d = ctx.diffusion
    dx = ctx.dx
    v = ctx.velocity

    # Face fluxes, upwind advection (v >= 0) plus central diffusion.
    f_interior = v * c[:, :-1] - d * (c[:, 1:] - c[:, :-1]) / dx
    f_in = v * ctx.c_in - d[:, 0] * (c[:, 0] - ctx.c_in) / (dx / 2.0)
    f_out = v * c[:, -1] - d[:, 0] * (c[:, -1] - c[:, -2]) / dx

    transport = np.empty_like(c)
    transport[:, 0] = (f_in - f_interior[:, 0]) / dx
    transport[:, 1:-1] = (f_interior[:, :-1] - f_interior[:, 1:]) / dx
    transport[:, -1] = (f_interior[:, -1] - f_out) / dx

    sources = assemble_sources(state, config)

    c += dt * (transport + sources.gas)
    low = float(c.min())
    if low < options.negative_tolerance:
        raise SolverInstabilityError(
            f"concentration fell to {low:.3e} mol/m^3", state.time
        )
    np.maximum(c, 0.0, out=c)

    state.coverages += dt * sources.coverage
    np.maximum(state.coverages, 0.0, out=state.coverages)
    state.solid_mass += dt * sources.solid
    np.maximum(state.solid_mass, 0.0, out=state.solid_mass)

    # Bubbler draw: moles crossing the inlet plane, split over the open
    # valves that feed each chemical.  Tracking hook only; reference
    # bubblers are effectively infinite.
    area = config.geometry.cross_section
    names = config.chemical_names()
    for bub in config.bubblers:
        if state.valve_states.get(bub.valve_id, 0):
            g = names.index(bub.chemical)
            if ctx.c_in[g] > 0.0:
                state.bubbler_consumed[bub.valve_id] = state.bubbler_consumed.get(
                    bub.valve_id, 0.0
                ) + max(float(f_in[g]), 0.0) * area * dt

    state.time += dt
    return state


def _check_finite(state: ReactorState) -> None:
    if not (
        np.isfinite(state.concentrations).all()
        and np.isfinite(state.coverages).all()
        and np.isfinite(state.solid_mass).all()
    ):
        raise SolverInstabilityError("non-finite values in state", state.time)


def _apply_action(state: ReactorState, segment: SegmentSpec) -> None:
    line = segment.line
    if line.action == "M":
        state.mfc_sccm = line.setting
    elif line.action == "V":
        state.valve_states[line.component_id] = int(line.setting)
    elif line.component_id == 0:
        state.reactor_temperature = line.setting
    else:
        state.bubbler_temperatures[line.component_id] = line.setting


def _integrate_segment(
    state: ReactorState,
    duration: float,
    config: ReactorConfig,
    options: SolverOptions,
    trace: TraceBuilder,
    t0: float,
    next_sample: float,
) -> float:
    """Integrate ``(t0, t0 + duration]`` emitting samples on the 0.1 s grid.

    ``t0`` and the returned value are recipe-local times; ``state.time``
    advances by the same amounts.  Returns the next unserved sample time.
    """
    ctx = _segment_context(state, config)
    t_end = t0 + duration
    t = t0
    base = state.time - t0  # offset between absolute and recipe-local time
    while t < t_end - _TIME_EPS:
        target = min(next_sample, t_end)
        dt_stab = _stable_dt(ctx, state, options)
        if dt_stab < options.min_dt:
            raise SolverInstabilityError(
                f"stable step collapsed to {dt_stab:.3e} s", state.time
            )
        dt = min(dt_stab, target - t)
        step(state, dt, config, ctx, options)
        t += dt
        if t >= target - _TIME_EPS:
            t = target  # pin to the grid to avoid drift
            state.time = base + t
        if t >= next_sample - _TIME_EPS and next_sample <= t_end + _TIME_EPS:
            _check_finite(state)
            trace.add_sample(state, ctx.carrier_pressure)
            next_sample = round((next_sample + SAMPLE_INTERVAL) * 10.0) / 10.0
    return next_sample


def _mark_segment(trace: TraceBuilder, segment: SegmentSpec, state: ReactorState,
                  t_start: float, i_start: int) -> None:
    trace.segments.append(
        SegmentMark(
            index=segment.index,
            description=segment.describe(),
            duration=segment.duration,
            t_start=t_start,
            t_end=state.time,
            i_start=i_start,
            i_end=max(trace.n_samples - 1, 0),
            open_valves=tuple(segment.controls.open_valves()),
            reactor_temperature=state.reactor_temperature,
            block=segment.block,
            cycle=segment.cycle,
            action=segment.line.action,
            component_id=segment.line.component_id,
            setting=segment.line.setting,
        )
    )


def run_segment(
    state: ReactorState,
    segment: SegmentSpec,
    config: ReactorConfig,
    options: SolverOptions | None = None,
) -> tuple[ReactorState, TraceBundle]:
    """Execute one segment standalone: apply its control action, integrate.

    Samples the post-action state at the segment start and then every
    0.1 s; a zero-duration segment yields exactly one sample.
    """
    options = options or SolverOptions()
    trace = TraceBuilder(config, options.snapshot_interval)
    t_start = state.time
    _apply_action(state, segment)
    ctx = _segment_context(state, config)
    trace.add_sample(state, ctx.carrier_pressure)
    if segment.duration > 0.0:
        _integrate_segment(
            state, segment.duration, config, options, trace,
            t0=0.0, next_sample=SAMPLE_INTERVAL,
        )
    _mark_segment(trace, segment, state, t_start, i_start=0)
    return state, trace.finalize([])


def run_recipe(
    state: ReactorState,
    recipe: Recipe,
    config: ReactorConfig,
    options: SolverOptions | None = None,
) -> tuple[ReactorState, TraceBundle]:
    """Execute a parsed recipe on the live state.

    Hard safety violations abort before any integration.  Gas
    concentrations reset to zero at recipe start; coverages, deposited
    mass, control settings, and the QCM reference carry over.  The
    returned trace samples the recipe-local 0.1 s grid, including t=0.

    On instability the partial trace is attached to the raised
    :class:`SolverInstabilityError` as ``partial_trace`` together with
    ``elapsed`` seconds of simulated time.
    """
    options = options or SolverOptions()
    report = validate_recipe_against_config(recipe, config, state.controls())
    if report.hard:
        raise RecipeValidationError(report.hard)

    state.concentrations[:] = 0.0
    segments = expand(recipe, state.controls())
    trace = TraceBuilder(config, options.snapshot_interval)
    trace.add_sample(state)  # pre-action sample at t = 0

    t0_abs = state.time
    t_local = 0.0
    next_sample = SAMPLE_INTERVAL
    try:
        for segment in segments:
            seg_t_start = state.time
            i_start = trace.n_samples - 1
            _apply_action(state, segment)
            if segment.duration > 0.0:
                next_sample = _integrate_segment(
                    state, segment.duration, config, options, trace,
                    t0=t_local, next_sample=next_sample,
                )
                t_local += segment.duration
            _mark_segment(trace, segment, state, seg_t_start, i_start)
    except SolverInstabilityError as err:
        err.partial_trace = trace.finalize(report.soft)
        err.elapsed = state.time - t0_abs
        raise
    return state, trace.finalize(report.soft)
