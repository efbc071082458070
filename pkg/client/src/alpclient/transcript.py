"""Transcript files: one JSON object per executed experiment.

The format is shared with the server-side timeline tooling; replaying a
transcript's recipes through a fresh session reproduces its narratives.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path


@dataclass(frozen=True)
class TranscriptEntry:
    experiment_id: int
    recipe: str
    narrative: str
    duration: float
    time_used: float
    time_remaining: float


def write_transcript(entries: list[TranscriptEntry], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for entry in entries:
            fh.write(json.dumps(asdict(entry)) + "\n")
    return path


def read_transcript(path: str | Path) -> list[TranscriptEntry]:
    entries = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            entries.append(TranscriptEntry(**json.loads(line)))
    return entries
