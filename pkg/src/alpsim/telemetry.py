"""Sensor sampling, trace assembly, deterministic narratives, and trace I/O.

Sensors read the state at the section nearest their mounting position:
the pressure gauge reports carrier pressure plus the partial pressure of
every gaseous species indiscriminately, the QCM reports areal mass
(deposited solid plus adsorbed surface groups) in ng/cm^2 relative to a
reference frozen when the reactor state was created.  Narrative
rendering is a pure function of the traces, so identical experiments
produce byte-identical text.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import flow
from .config import ReactorConfig
from .constants import GAS_CONSTANT, KG_M2_TO_NG_CM2

#: QCM changes smaller than this [ng/cm^2] are reported as insignificant
MASS_SIGNIFICANCE = 0.1


def qcm_convert(mass_g_m2: float) -> float:
    """Convert areal mass from g/m^2 to ng/cm^2."""
    return mass_g_m2 * 1.0e5


def sensor_section(position: float, config: ReactorConfig) -> int:
    """Nearest section index for a sensor mounted ``position`` m from the inlet."""
    geo = config.geometry
    return min(geo.sections - 1, int(position / geo.section_width))


def absolute_qcm(state, config: ReactorConfig, section: int) -> float:
    """Total areal mass [ng/cm^2] at a section: solid plus adsorbed groups."""
    groups = 0.0
    for i, surf in enumerate(config.surfaces):
        groups += state.coverages[i, section] * surf.site_density * surf.group_molar_mass
    return (state.solid_mass[section] + groups) * KG_M2_TO_NG_CM2


@dataclass(frozen=True)
class SensorSample:
    time: float
    pressure: tuple[float, ...]  # [Pa] per pressure sensor
    qcm: tuple[float, ...]  # [ng/cm^2] per QCM sensor


def sample(state, config: ReactorConfig, carrier_pressure: np.ndarray | None = None) -> SensorSample:
    """Read every configured sensor from the current state."""
    if carrier_pressure is None:
        p_inlet = flow.equilibrium_inlet_pressure(
            state.mfc_sccm, state.reactor_temperature, config.pump
        )
        carrier_pressure = flow.pressure_drop_profile(
            state.mfc_sccm, state.reactor_temperature, p_inlet,
            config.geometry, config.carrier_gas.viscosity,
        )
    rt = GAS_CONSTANT * state.reactor_temperature
    pressures = []
    for sensor in config.pressure_sensors():
        idx = sensor_section(sensor.position, config)
        partial = float(state.concentrations[:, idx].sum()) * rt
        pressures.append(float(carrier_pressure[idx]) + partial)
    qcms = []
    for i, sensor in enumerate(config.qcm_sensors()):
        idx = sensor_section(sensor.position, config)
        qcms.append(absolute_qcm(state, config, idx) - state.qcm_reference[i])
    return SensorSample(state.time, tuple(pressures), tuple(qcms))


@dataclass
class SegmentMark:
    """Alignment of one executed segment with the sampled trace."""

    index: int
    description: str
    duration: float
    t_start: float
    t_end: float
    i_start: int  # sample index at (or before) the segment start
    i_end: int  # sample index at the segment end
    open_valves: tuple[int, ...]
    reactor_temperature: float
    block: int
    cycle: int
    action: str  # M / V / T
    component_id: int
    setting: float


@dataclass
class Snapshots:
    """Full-field state snapshots (not exposed through the experiment API)."""

    times: np.ndarray  # (m,)
    concentrations: np.ndarray  # (m, chemicals, sections)
    coverages: np.ndarray  # (m, surfaces, sections)
    solid_mass: np.ndarray  # (m, sections)


@dataclass
class TraceBundle:
    """Telemetry of one experiment at the 0.1 s cadence."""

    time: np.ndarray
    pressure: np.ndarray  # (n_pressure_sensors, n)
    qcm: np.ndarray  # (n_qcm_sensors, n)
    valves: np.ndarray  # (n_valves, n), 0/1
    reactor_temperature: np.ndarray
    bubbler_temperatures: np.ndarray  # (n_bubblers, n)
    mfc: np.ndarray
    segments: list[SegmentMark]
    warnings: list[str]
    chemical_names: list[str]
    surface_names: list[str]
    valve_ids: list[int]
    snapshots: Snapshots | None = None

    @property
    def n_samples(self) -> int:
        return len(self.time)

    def to_dict(self) -> dict:
        """JSON-serializable form without the full-field snapshots."""
        return {
            "time": self.time.tolist(),
            "pressure": self.pressure.tolist(),
            "qcm": self.qcm.tolist(),
            "valves": self.valves.tolist(),
            "reactor_temperature": self.reactor_temperature.tolist(),
            "bubbler_temperatures": self.bubbler_temperatures.tolist(),
            "mfc": self.mfc.tolist(),
            "segments": [vars(s) | {"open_valves": list(s.open_valves)} for s in self.segments],
            "warnings": list(self.warnings),
            "chemical_names": list(self.chemical_names),
            "surface_names": list(self.surface_names),
            "valve_ids": list(self.valve_ids),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TraceBundle":
        segments = [
            SegmentMark(**{**s, "open_valves": tuple(s["open_valves"])})
            for s in data["segments"]
        ]
        return cls(
            time=np.asarray(data["time"], dtype=float),
            pressure=np.asarray(data["pressure"], dtype=float),
            qcm=np.asarray(data["qcm"], dtype=float),
            valves=np.asarray(data["valves"], dtype=np.int8),
            reactor_temperature=np.asarray(data["reactor_temperature"], dtype=float),
            bubbler_temperatures=np.asarray(data["bubbler_temperatures"], dtype=float),
            mfc=np.asarray(data["mfc"], dtype=float),
            segments=segments,
            warnings=list(data["warnings"]),
            chemical_names=list(data["chemical_names"]),
            surface_names=list(data["surface_names"]),
            valve_ids=list(data["valve_ids"]),
        )


class TraceBuilder:
    """Accumulates samples, segment marks, and optional snapshots."""

    def __init__(self, config: ReactorConfig, snapshot_interval: float = 0.0):
        self.config = config
        self.valve_ids = config.valve_ids()
        self.rows: list[tuple] = []
        self.segments: list[SegmentMark] = []
        self.snapshot_interval = snapshot_interval
        self.snap_times: list[float] = []
        self.snap_c: list[np.ndarray] = []
        self.snap_theta: list[np.ndarray] = []
        self.snap_solid: list[np.ndarray] = []
        self._next_snapshot = 0.0

    @property
    def n_samples(self) -> int:
        return len(self.rows)

    def add_sample(self, state, carrier_pressure: np.ndarray | None = None) -> None:
        s = sample(state, self.config, carrier_pressure)
        controls = (
            tuple(state.valve_states.get(v, 0) for v in self.valve_ids),
            state.reactor_temperature,
            tuple(state.bubbler_temperatures.get(v, 0.0) for v in self.valve_ids),
            state.mfc_sccm,
        )
        self.rows.append((s.time, s.pressure, s.qcm) + controls)
        if self.snapshot_interval > 0.0 and s.time >= self._next_snapshot - 1e-9:
            self.snap_times.append(s.time)
            self.snap_c.append(state.concentrations.copy())
            self.snap_theta.append(state.coverages.copy())
            self.snap_solid.append(state.solid_mass.copy())
            self._next_snapshot = s.time + self.snapshot_interval

    def finalize(self, warnings: list[str]) -> TraceBundle:
        n = len(self.rows)
        times = np.array([r[0] for r in self.rows])
        pressure = np.array([r[1] for r in self.rows]).reshape(n, -1).T
        qcm = np.array([r[2] for r in self.rows]).reshape(n, -1).T
        valves = np.array([r[3] for r in self.rows], dtype=np.int8).reshape(n, -1).T
        t_reactor = np.array([r[4] for r in self.rows])
        t_bub = np.array([r[5] for r in self.rows]).reshape(n, -1).T
        mfc = np.array([r[6] for r in self.rows])
        snapshots = None
        if self.snap_times:
            snapshots = Snapshots(
                times=np.array(self.snap_times),
                concentrations=np.array(self.snap_c),
                coverages=np.array(self.snap_theta),
                solid_mass=np.array(self.snap_solid),
            )
        return TraceBundle(
            time=times, pressure=pressure, qcm=qcm, valves=valves,
            reactor_temperature=t_reactor, bubbler_temperatures=t_bub, mfc=mfc,
            segments=self.segments, warnings=list(warnings),
            chemical_names=self.config.chemical_names(),
            surface_names=self.config.surface_names(),
            valve_ids=self.valve_ids, snapshots=snapshots,
        )


# ----------------------------------------------------------------------
# Narrative generation


def _fmt_mass(value: float) -> str:
    return f"{value:.2g}"


def _fmt_pressure(value: float) -> str:
    return f"{value:.3g}"


@dataclass
class NarrativeEntry:
    step: int
    action: str
    duration: float
    pressure_max: float
    pressure_mean: float
    mass_change: float
    significant: bool


@dataclass
class Narrative:
    """Step-aligned prose summary of an experiment."""

    entries: list[NarrativeEntry]
    total_duration: float
    total_mass_change: float
    max_pressure: float
    warnings: list[str]
    text: str = field(default="", repr=False)


def build_narrative(trace: TraceBundle, soft_limit_pa: float | None = None) -> Narrative:
    """Compress a trace into one line per executed segment plus a header.

    Pressure statistics use the first pressure gauge and the mass budget
    uses the first QCM.  A step's QCM net change below
    ``MASS_SIGNIFICANCE`` is reported as "no significant mass change".
    """
    has_p = trace.pressure.shape[0] > 0
    has_q = trace.qcm.shape[0] > 0
    entries = []
    for seg in trace.segments:
        lo, hi = seg.i_start, seg.i_end
        window = slice(lo, hi + 1)
        p_max = float(trace.pressure[0, window].max()) if has_p else 0.0
        p_mean = float(trace.pressure[0, window].mean()) if has_p else 0.0
        dm = float(trace.qcm[0, hi] - trace.qcm[0, lo]) if has_q else 0.0
        entries.append(
            NarrativeEntry(
                step=seg.index + 1,
                action=seg.description,
                duration=seg.duration,
                pressure_max=p_max,
                pressure_mean=p_mean,
                mass_change=dm,
                significant=abs(dm) >= MASS_SIGNIFICANCE,
            )
        )

    total_duration = float(trace.time[-1] - trace.time[0]) if trace.n_samples else 0.0
    total_mass = float(trace.qcm[0, -1] - trace.qcm[0, 0]) if has_q and trace.n_samples else 0.0
    max_pressure = float(trace.pressure[0].max()) if has_p and trace.n_samples else 0.0

    warnings = list(trace.warnings)
    if soft_limit_pa is not None and max_pressure > soft_limit_pa:
        warnings.append(f"pressure exceeded {soft_limit_pa:g} Pa")

    lines = [
        "Experiment narrative",
        f"total duration: {total_duration:.1f} s",
        f"net mass change: {_fmt_mass(total_mass)} ng/cm^2",
        f"peak pressure: {_fmt_pressure(max_pressure)} Pa",
    ]
    if warnings:
        for w in warnings:
            lines.append(f"warning: {w}")
    else:
        lines.append("warnings: none")
    lines.append("steps:")
    for e in entries:
        mass_part = (
            f"mass change {_fmt_mass(e.mass_change)} ng/cm^2"
            if e.significant
            else "no significant mass change"
        )
        lines.append(
            f"  {e.step}. {e.action}; wait {e.duration:g} s; "
            f"pressure max {_fmt_pressure(e.pressure_max)} Pa, "
            f"mean {_fmt_pressure(e.pressure_mean)} Pa; {mass_part}"
        )
    text = "\n".join(lines) + "\n"
    return Narrative(
        entries=entries,
        total_duration=total_duration,
        total_mass_change=total_mass,
        max_pressure=max_pressure,
        warnings=warnings,
        text=text,
    )


# ----------------------------------------------------------------------
# Columnar trace / snapshot export


def write_trace_tsv(trace: TraceBundle, path) -> None:
    """Write the 0.1 s telemetry as tab-separated columns."""
    cols = ["time"]
    cols += [f"pressure_{i + 1}" for i in range(trace.pressure.shape[0])]
    cols += [f"qcm_{i + 1}" for i in range(trace.qcm.shape[0])]
    cols += [f"valve_{v}" for v in trace.valve_ids]
    cols += ["reactor_temperature"]
    cols += [f"bubbler_temperature_{v}" for v in trace.valve_ids]
    cols += ["mfc_sccm"]
    with open(path, "w") as fh:
        fh.write("\t".join(cols) + "\n")
        for i in range(trace.n_samples):
            row = [f"{trace.time[i]:.1f}"]
            row += [f"{trace.pressure[j, i]:.10g}" for j in range(trace.pressure.shape[0])]
            row += [f"{trace.qcm[j, i]:.10g}" for j in range(trace.qcm.shape[0])]
            row += [f"{trace.valves[j, i]:d}" for j in range(trace.valves.shape[0])]
            row += [f"{trace.reactor_temperature[i]:.10g}"]
            row += [
                f"{trace.bubbler_temperatures[j, i]:.10g}"
                for j in range(trace.bubbler_temperatures.shape[0])
            ]
            row += [f"{trace.mfc[i]:.10g}"]
            fh.write("\t".join(row) + "\n")


def write_snapshots_tsv(trace: TraceBundle, path_or_buf) -> None:
    """Write full-field snapshots in long format: one row per (time, section)."""
    snaps = trace.snapshots
    if snaps is None:
        raise ValueError("trace carries no snapshots")
    n_sections = snaps.solid_mass.shape[1]
    cols = ["time", "section"]
    cols += [f"c_{name}" for name in trace.chemical_names]
    cols += [f"theta_{name}" for name in trace.surface_names]
    cols += ["solid_mass"]

    def _write(fh):
        fh.write("\t".join(cols) + "\n")
        for m, t in enumerate(snaps.times):
            for j in range(n_sections):
                row = [f"{t:.1f}", f"{j}"]
                row += [f"{snaps.concentrations[m, g, j]:.10g}"
                        for g in range(len(trace.chemical_names))]
                row += [f"{snaps.coverages[m, s, j]:.10g}"
                        for s in range(len(trace.surface_names))]
                row += [f"{snaps.solid_mass[m, j]:.10g}"]
                fh.write("\t".join(row) + "\n")

    if hasattr(path_or_buf, "write"):
        _write(path_or_buf)
    else:
        with open(path_or_buf, "w") as fh:
            _write(fh)


def read_tsv(path) -> tuple[list[str], np.ndarray]:
    """Read a delimited export back as (column names, data matrix)."""
    with open(path) as fh:
        header = fh.readline().strip().split("\t")
        data = np.loadtxt(fh, delimiter="\t", ndmin=2)
    return header, data
