"""Append-only on-disk store of experiments and sessions.

Layout under the data directory:

    store.json                          global id counters
    sessions/0001/manifest.json         one manifest per session
    sessions/0001/experiments/000001.json          full record
    sessions/0001/experiments/000001.snapshots.tsv full-field reference data

Records are written once and never mutated; manifests are rewritten on
append.  Experiment ids increase densely across all sessions.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import UnknownIdError


@dataclass
class ExperimentRecord:
    """Everything retained about one executed (or refused-at-solve) run."""

    id: int
    session_id: int
    recipe_text: str
    narrative: str
    duration: float
    cumulative_time_used: float
    created_at: str
    failed: bool = False
    failure_reason: str | None = None
    soft_warnings: list[str] = field(default_factory=list)
    trace: dict | None = None  # TraceBundle.to_dict()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "session_id": self.session_id,
            "recipe_text": self.recipe_text,
            "narrative": self.narrative,
            "duration": self.duration,
            "cumulative_time_used": self.cumulative_time_used,
            "created_at": self.created_at,
            "failed": self.failed,
            "failure_reason": self.failure_reason,
            "soft_warnings": self.soft_warnings,
            "trace": self.trace,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentRecord":
        return cls(**data)


@dataclass
class SessionManifest:
    session_id: int
    config_id: str
    budget_total: float
    time_used: float
    experiment_ids: list[int]
    created_at: str
    # config-derived lookup data the session analyzers need
    valve_chemicals: dict = field(default_factory=dict)  # {"1": "A", ...}
    decomposition_temperatures: dict = field(default_factory=dict)  # {"C": 600.0}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class ExperimentStore:
    """Filesystem-backed store; safe for concurrent reads."""

    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._counters_path = self.root / "store.json"
        if not self._counters_path.exists():
            self._write_counters({"next_experiment_id": 1, "next_session_id": 1})

    # -- internals ------------------------------------------------------
    def _read_counters(self) -> dict:
        return json.loads(self._counters_path.read_text())

    def _write_counters(self, counters: dict) -> None:
        self._counters_path.write_text(json.dumps(counters))

    def _session_dir(self, session_id: int) -> Path:
        return self.root / "sessions" / f"{session_id:04d}"

    def _manifest_path(self, session_id: int) -> Path:
        return self._session_dir(session_id) / "manifest.json"

    def _record_path(self, session_id: int, experiment_id: int) -> Path:
        return self._session_dir(session_id) / "experiments" / f"{experiment_id:06d}.json"

    # -- sessions -------------------------------------------------------
    def create_session(
        self,
        config_id: str,
        budget: float,
        valve_chemicals: dict | None = None,
        decomposition_temperatures: dict | None = None,
    ) -> SessionManifest:
        with self._lock:
            counters = self._read_counters()
            sid = counters["next_session_id"]
            counters["next_session_id"] = sid + 1
            self._write_counters(counters)
            manifest = SessionManifest(
                session_id=sid,
                config_id=config_id,
                budget_total=budget,
                time_used=0.0,
                experiment_ids=[],
                created_at=_now(),
                valve_chemicals=valve_chemicals or {},
                decomposition_temperatures=decomposition_temperatures or {},
            )
            self._save_manifest(manifest)
            return manifest

    def _save_manifest(self, manifest: SessionManifest) -> None:
        path = self._manifest_path(manifest.session_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(vars(manifest), indent=2))

    def load_manifest(self, session_id: int) -> SessionManifest:
        path = self._manifest_path(session_id)
        if not path.exists():
            raise UnknownIdError(f"unknown session {session_id}")
        return SessionManifest(**json.loads(path.read_text()))

    def session_ids(self) -> list[int]:
        base = self.root / "sessions"
        if not base.exists():
            return []
        return sorted(int(p.name) for p in base.iterdir() if p.is_dir())

    # -- experiments ------------------------------------------------------
    def next_experiment_id(self) -> int:
        with self._lock:
            counters = self._read_counters()
            eid = counters["next_experiment_id"]
            counters["next_experiment_id"] = eid + 1
            self._write_counters(counters)
            return eid

    def append_record(self, record: ExperimentRecord, snapshots_tsv: str | None = None) -> None:
        path = self._record_path(record.session_id, record.id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(record.to_dict()))
        if snapshots_tsv is not None:
            path.with_suffix(".snapshots.tsv").write_text(snapshots_tsv)
        manifest = self.load_manifest(record.session_id)
        manifest.experiment_ids.append(record.id)
        manifest.time_used = record.cumulative_time_used
        self._save_manifest(manifest)

    def load_record(self, session_id: int, experiment_id: int) -> ExperimentRecord:
        path = self._record_path(session_id, experiment_id)
        if not path.exists():
            raise UnknownIdError(
                f"unknown experiment {experiment_id} in session {session_id}"
            )
        return ExperimentRecord.from_dict(json.loads(path.read_text()))

    def load_session_records(self, session_id: int) -> list[ExperimentRecord]:
        manifest = self.load_manifest(session_id)
        return [self.load_record(session_id, eid) for eid in manifest.experiment_ids]
