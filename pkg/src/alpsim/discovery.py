"""Deterministic session analysis: timelines and behavior tagging.

The taggers mechanize a manual inspection rubric with published
thresholds; they look only at stored records (recipes, traces, segment
marks) and never at internal solver state.  All detectors are pure
functions of the store, so re-running them on a replayed session gives
identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .recipe import masked_signature, parse_recipe
from .store import ExperimentStore
from .telemetry import MASS_SIGNIFICANCE, TraceBundle

#: relative spread of per-cycle gains tolerated by the ALD/ALE detectors
CYCLE_STABILITY = 0.20


@dataclass
class BehaviorTags:
    ALD: bool = False
    ALE: bool = False
    ASD: bool = False
    T_dep: bool = False
    decomposition: bool = False
    co_dosing: bool = False
    multistep: bool = False
    repeats: bool = False
    multistep_sequences: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "ALD": self.ALD, "ALE": self.ALE, "ASD": self.ASD, "T-dep": self.T_dep,
            "decomposition": self.decomposition, "co-dosing": self.co_dosing,
            "multistep": self.multistep, "repeats": self.repeats,
            "multistep_sequences": list(self.multistep_sequences),
        }


@dataclass
class TimelineEntry:
    experiment_id: int
    duration: float
    header: str
    tags: list[str]


@dataclass
class SessionTimeline:
    session_id: int
    entries: list[TimelineEntry]
    experiment_count: int
    time_used: float

    def as_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "entries": [vars(e) for e in self.entries],
            "experiment_count": self.experiment_count,
            "time_used": self.time_used,
        }


@dataclass
class _Pulse:
    experiment_id: int
    order: int  # global chronological position across the session
    chemical: str
    mass_change: float


def _narrative_header(narrative: str) -> str:
    lines = []
    for line in narrative.splitlines():
        if line.startswith("steps:"):
            break
        lines.append(line)
    return " | ".join(lines[1:])  # drop the fixed title line


def _pulse_events(trace: TraceBundle, valve_chemicals: dict[int, str]) -> list[tuple[int, str, float]]:
    """(segment index, chemical, net QCM change) for every valve-open segment.

    The mass effect of a pulse is measured from the pulse start to the
    next pulse start (or the end of the trace), so the purge that
    follows a pulse is attributed to it.
    """
    if trace.qcm.shape[0] == 0:
        return []
    qcm = trace.qcm[0]
    opens = []
    for seg in trace.segments:
        if seg.action == "V" and seg.setting == 1.0:
            chem = valve_chemicals.get(seg.component_id)
            if chem is not None:
                opens.append((seg.index, chem, seg.i_start))
    events = []
    for n, (idx, chem, i_start) in enumerate(opens):
        i_end = opens[n + 1][2] if n + 1 < len(opens) else len(qcm) - 1
        events.append((idx, chem, float(qcm[i_end] - qcm[i_start])))
    return events


def _cycle_gains(trace: TraceBundle, valve_chemicals: dict[int, str]):
    """Per-block cycle analysis: (chemicals pulsed, per-cycle QCM gains)."""
    if trace.qcm.shape[0] == 0:
        return []
    qcm = trace.qcm[0]
    blocks: dict[int, dict[int, list]] = {}
    for seg in trace.segments:
        blocks.setdefault(seg.block, {}).setdefault(seg.cycle, []).append(seg)
    results = []
    for block_idx in sorted(blocks):
        cycles = blocks[block_idx]
        n_cycles = len(cycles)
        chems_per_cycle = []
        for cycle_idx in sorted(cycles):
            chems = []
            for seg in cycles[cycle_idx]:
                if seg.action == "V" and seg.setting == 1.0 and seg.component_id in valve_chemicals:
                    chems.append(valve_chemicals[seg.component_id])
            chems_per_cycle.append(chems)
        distinct = {c for chems in chems_per_cycle for c in chems}
        gains = []
        if n_cycles >= 2:
            starts = [cycles[k][0].i_start for k in sorted(cycles)]
            ends = starts[1:] + [cycles[sorted(cycles)[-1]][-1].i_end]
            gains = [float(qcm[e] - qcm[s]) for s, e in zip(starts, ends)]
        results.append({
            "block": block_idx,
            "cycles": n_cycles,
            "distinct_chemicals": distinct,
            "chemical_sequence": chems_per_cycle[0] if chems_per_cycle else [],
            "gains": gains,
        })
    return results


def _stable(gains: list[float]) -> bool:
    mean = float(np.mean(gains))
    if mean == 0.0:
        return False
    return max(abs(g - mean) for g in gains) / abs(mean) <= CYCLE_STABILITY


def _experiment_tags(record, trace: TraceBundle | None, valve_chemicals, decomp_temps) -> set[str]:
    tags: set[str] = set()
    if trace is None:
        return tags

    for info in _cycle_gains(trace, valve_chemicals):
        if info["cycles"] >= 2 and len(info["distinct_chemicals"]) == 2 and info["gains"]:
            if all(g > 0 for g in info["gains"]) and _stable(info["gains"]):
                tags.add("ALD")
            if all(g < 0 for g in info["gains"]) and _stable(info["gains"]):
                tags.add("ALE")
        if len(info["distinct_chemicals"]) >= 3:
            tags.add("multistep")

    for seg in trace.segments:
        if len(seg.open_valves) >= 2:
            tags.add("co-dosing")
        for valve in seg.open_valves:
            chem = valve_chemicals.get(valve)
            t_dec = decomp_temps.get(chem)
            if t_dec is not None and seg.reactor_temperature > t_dec:
                tags.add("decomposition")
    return tags


def analyze_session(store: ExperimentStore, session_id: int) -> tuple[SessionTimeline, BehaviorTags]:
    """Build the timeline and session-level behavior tags in one pass."""
    manifest = store.load_manifest(session_id)
    records = store.load_session_records(session_id)
    valve_chemicals = {int(k): v for k, v in manifest.valve_chemicals.items()}
    decomp_temps = dict(manifest.decomposition_temperatures)

    entries: list[TimelineEntry] = []
    session = BehaviorTags()
    pulses: list[_Pulse] = []
    seen_recipes: dict[str, int] = {}
    signatures: dict[tuple, set[float]] = {}
    order = 0

    for record in records:
        trace = TraceBundle.from_dict(record.trace) if record.trace else None
        tags = _experiment_tags(record, trace, valve_chemicals, decomp_temps)

        if record.recipe_text in seen_recipes:
            tags.add("repeats")
        seen_recipes[record.recipe_text] = record.id

        if trace is not None:
            try:
                sig = masked_signature(parse_recipe(record.recipe_text))
            except Exception:
                sig = None
            temps = {round(seg.reactor_temperature, 6) for seg in trace.segments}
            if sig is not None and temps:
                earlier = signatures.setdefault(sig, set())
                if earlier and temps - earlier:
                    tags.add("T-dep")
                earlier |= temps

            for seg_idx, chem, dm in _pulse_events(trace, valve_chemicals):
                pulses.append(_Pulse(record.id, order, chem, dm))
                order += 1

        entries.append(
            TimelineEntry(
                experiment_id=record.id,
                duration=record.duration,
                header=_narrative_header(record.narrative),
                tags=sorted(tags),
            )
        )

    # Passivation: a chemical that grew mass earlier yields no significant
    # change after some other chemical was pulsed in between.
    by_exp_asd: set[int] = set()
    for k, dead in enumerate(pulses):
        if abs(dead.mass_change) >= MASS_SIGNIFICANCE:
            continue
        for i in range(k):
            grow = pulses[i]
            if grow.chemical != dead.chemical or grow.mass_change < MASS_SIGNIFICANCE:
                continue
            blocked = any(
                pulses[j].chemical != dead.chemical for j in range(i + 1, k)
            )
            if blocked:
                by_exp_asd.add(dead.experiment_id)
                break
    for entry in entries:
        if entry.experiment_id in by_exp_asd and "ASD" not in entry.tags:
            entry.tags.append("ASD")
            entry.tags.sort()

    for entry in entries:
        for tag in entry.tags:
            if tag == "ALD":
                session.ALD = True
            elif tag == "ALE":
                session.ALE = True
            elif tag == "ASD":
                session.ASD = True
            elif tag == "T-dep":
                session.T_dep = True
            elif tag == "decomposition":
                session.decomposition = True
            elif tag == "co-dosing":
                session.co_dosing = True
            elif tag == "multistep":
                session.multistep = True
            elif tag == "repeats":
                session.repeats = True

    for record in records:
        trace = TraceBundle.from_dict(record.trace) if record.trace else None
        if trace is None:
            continue
        for info in _cycle_gains(trace, valve_chemicals):
            if len(info["distinct_chemicals"]) >= 3 and info["chemical_sequence"]:
                seq = "-".join(dict.fromkeys(info["chemical_sequence"]))
                if seq not in session.multistep_sequences:
                    session.multistep_sequences.append(seq)

    timeline = SessionTimeline(
        session_id=session_id,
        entries=entries,
        experiment_count=len(records),
        time_used=manifest.time_used,
    )
    return timeline, session


def extract_timeline(store: ExperimentStore, session_id: int) -> SessionTimeline:
    return analyze_session(store, session_id)[0]


def tag_behaviors(store: ExperimentStore, session_id: int) -> BehaviorTags:
    return analyze_session(store, session_id)[1]


def render_timeline_table(timeline: SessionTimeline, tags: BehaviorTags) -> str:
    """Text table with one summary row plus per-experiment lines."""
    yn = lambda b: "Yes" if b else "No"
    header = ("#", "s", "ALE", "ALD", "ASD", "T-dep", "decomp.", "co-dosing",
              "Multistep", "Repeats")
    multistep = "/".join(tags.multistep_sequences) if tags.multistep_sequences else yn(tags.multistep)
    row = (
        str(timeline.experiment_count), f"{timeline.time_used:g}",
        yn(tags.ALE), yn(tags.ALD), yn(tags.ASD), yn(tags.T_dep),
        yn(tags.decomposition), yn(tags.co_dosing), multistep, yn(tags.repeats),
    )
    widths = [max(len(h), len(v)) for h, v in zip(header, row)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(header, widths)),
        "  ".join(v.ljust(w) for v, w in zip(row, widths)),
        "",
    ]
    for e in timeline.entries:
        tag_text = ", ".join(e.tags) if e.tags else "-"
        lines.append(f"experiment {e.experiment_id}: {e.duration:g} s; {tag_text}")
        lines.append(f"  {e.header}")
    return "\n".join(lines) + "\n"
