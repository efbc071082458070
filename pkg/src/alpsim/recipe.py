"""Tab-separated recipe table: parsing, validation-free expansion, formatting.

A recipe is a sequence of cycle blocks.  Each line holds
``[cycles] action component_id setting wait_time``; a populated first
column starts a new block, an empty one continues the current block.
Tabs or runs of spaces both separate fields, and anything after ``#`` is
a comment.  This text format is the wire format of the experiment API.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import RecipeParseError

ACTIONS = ("M", "V", "T")


@dataclass(frozen=True)
class RecipeLine:
    cycles: int | None  # None: continuation of the current block
    action: str  # one of ACTIONS
    component_id: int
    setting: float
    wait_time: float  # [s]
    line_no: int = 0  # 1-based position in the source text


@dataclass(frozen=True)
class Recipe:
    """Ordered cycle blocks of (count, lines)."""

    blocks: tuple[tuple[int, tuple[RecipeLine, ...]], ...]

    @property
    def lines(self) -> list[RecipeLine]:
        return [line for _, block in self.blocks for line in block]


@dataclass
class ControlState:
    """Control settings in force; threaded through expansion.

    Unset temperatures stay ``None`` (inherited from the live reactor).
    Valves missing from the mapping are closed.
    """

    valves: dict[int, int] = field(default_factory=dict)
    mfc_sccm: float = 0.0
    reactor_temperature: float | None = None
    bubbler_temperatures: dict[int, float] = field(default_factory=dict)

    def copy(self) -> "ControlState":
        return ControlState(
            valves=dict(self.valves),
            mfc_sccm=self.mfc_sccm,
            reactor_temperature=self.reactor_temperature,
            bubbler_temperatures=dict(self.bubbler_temperatures),
        )

    def open_valves(self) -> list[int]:
        return sorted(v for v, s in self.valves.items() if s)


@dataclass(frozen=True)
class SegmentSpec:
    """One executed recipe line: a control action, then a wait."""

    index: int  # position in the expanded schedule
    block: int  # cycle-block index
    cycle: int  # 0-based cycle number within the block
    line: RecipeLine
    duration: float  # [s]
    controls: ControlState  # settings in force after the action

    def describe(self) -> str:
        return describe_action(self.line)


def describe_action(line: RecipeLine) -> str:
    if line.action == "M":
        return f"set MFC {line.component_id} to {line.setting:g} sccm"
    if line.action == "V":
        state = "open" if line.setting else "close"
        return f"{state} valve {line.component_id}"
    if line.component_id == 0:
        return f"set reactor temperature to {line.setting:g} K"
    return f"set bubbler {line.component_id} temperature to {line.setting:g} K"


def _number(token: str, what: str, line_no: int, column: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise RecipeParseError(f"non-numeric {what} {token!r}", line_no, column) from None


def _integer(token: str, what: str, line_no: int, column: int) -> int:
    value = _number(token, what, line_no, column)
    if value != int(value):
        raise RecipeParseError(f"{what} must be an integer, got {token!r}", line_no, column)
    return int(value)


def parse_recipe(text: str) -> Recipe:
    """Parse recipe text into cycle blocks.

    Raises :class:`RecipeParseError` naming line and column for unknown
    actions, non-numeric fields, non-positive cycle counts, and wrong
    field counts.
    """
    blocks: list[tuple[int, list[RecipeLine]]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        tokens = body.split()
        if not tokens:
            continue
        if len(tokens) == 5:
            cycles = _integer(tokens[0], "cycle count", line_no, 1)
            if cycles <= 0:
                raise RecipeParseError(f"cycle count must be positive, got {cycles}", line_no, 1)
            fields, offset = tokens[1:], 2
        elif len(tokens) == 4:
            cycles = None
            fields, offset = tokens, 1
        else:
            raise RecipeParseError(
                f"expected 4 or 5 fields, got {len(tokens)}", line_no, 1
            )

        action = fields[0]
        if action not in ACTIONS:
            raise RecipeParseError(f"unknown action {action!r}", line_no, offset)
        component = _integer(fields[1], "component id", line_no, offset + 1)
        if component < 0:
            raise RecipeParseError(f"component id must be >= 0, got {component}", line_no, offset + 1)
        setting = _number(fields[2], "setting", line_no, offset + 2)
        wait = _number(fields[3], "wait time", line_no, offset + 3)
        if wait < 0:
            raise RecipeParseError(f"wait time must be >= 0, got {wait:g}", line_no, offset + 3)
        if action == "V" and setting not in (0.0, 1.0):
            raise RecipeParseError(
                f"valve setting must be 0 or 1, got {setting:g}", line_no, offset + 2
            )

        parsed = RecipeLine(cycles, action, component, setting, wait, line_no)
        if cycles is not None:
            blocks.append((cycles, [parsed]))
        else:
            if not blocks:
                raise RecipeParseError(
                    "first line must start a cycle block (cycle count missing)", line_no, 1
                )
            blocks[-1][1].append(parsed)

    return Recipe(tuple((count, tuple(lines)) for count, lines in blocks))


def expand(recipe: Recipe, initial: ControlState | None = None) -> list[SegmentSpec]:
    """Unroll cycle blocks into a flat schedule of segments.

    Expansion is purely syntactic: the threaded control state starts
    from ``initial`` (all-closed defaults when omitted) and never
    depends on simulation state.
    """
    controls = initial.copy() if initial is not None else ControlState()
    segments: list[SegmentSpec] = []
    for block_idx, (count, lines) in enumerate(recipe.blocks):
        for cycle in range(count):
            for line in lines:
                if line.action == "M":
                    controls.mfc_sccm = line.setting
                elif line.action == "V":
                    controls.valves[line.component_id] = int(line.setting)
                elif line.component_id == 0:
                    controls.reactor_temperature = line.setting
                else:
                    controls.bubbler_temperatures[line.component_id] = line.setting
                segments.append(
                    SegmentSpec(
                        index=len(segments),
                        block=block_idx,
                        cycle=cycle,
                        line=line,
                        duration=line.wait_time,
                        controls=controls.copy(),
                    )
                )
    return segments


def total_duration(recipe: Recipe) -> float:
    """Scheduled duration [s]: the sum of expanded segment waits.

    Summed in expansion order so it equals the value accumulated by the
    solver exactly, not merely within round-off.
    """
    return sum(seg.duration for seg in expand(recipe))


def format_recipe(recipe: Recipe) -> str:
    """Canonical tab-separated rendering; a fixed point of the parser."""
    out = []
    for count, lines in recipe.blocks:
        for i, line in enumerate(lines):
            head = f"{count}" if i == 0 else ""
            out.append(
                "\t".join(
                    (head, line.action, f"{line.component_id}",
                     f"{line.setting:g}", f"{line.wait_time:g}")
                )
            )
    return "\n".join(out) + ("\n" if out else "")


def masked_signature(recipe: Recipe) -> tuple:
    """Structure of the expanded schedule with reactor-temperature values masked.

    Two experiments with equal signatures but different reactor
    temperatures constitute a temperature-dependence probe.
    """
    sig = []
    for seg in expand(recipe):
        line = seg.line
        masked = "T0" if (line.action == "T" and line.component_id == 0) else line.setting
        sig.append((line.action, line.component_id, masked, line.wait_time))
    return tuple(sig)
