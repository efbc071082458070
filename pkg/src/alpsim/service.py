"""Agent-facing experiment service over a persistent virtual reactor.

Each session owns one reactor whose surface state persists from
experiment to experiment, a reactor-time budget, and an exclusive
execution lock (experiments run strictly one at a time).  Responses to
``perform`` are deliberately compact: narrative plus accounting, never
raw traces.  The full record, including 0.1 s telemetry, is available
through ``retrieve``; full-field snapshots are written to disk only and
are not served by the API at all.
"""

from __future__ import annotations

import io
import threading
from dataclasses import dataclass
from datetime import datetime, timezone

from fastapi import FastAPI, HTTPException, Request
from pydantic import BaseModel

from . import discovery, market
from .config import ReactorConfig, validate_recipe_against_config
from .errors import (
    BudgetExceededError,
    RecipeParseError,
    RecipeValidationError,
    SolverInstabilityError,
    UnknownIdError,
)
from .recipe import parse_recipe, total_duration
from .solver import ReactorState, SolverOptions, run_recipe
from .store import ExperimentRecord, ExperimentStore
from .telemetry import build_narrative, write_snapshots_tsv


@dataclass
class _LiveSession:
    session_id: int
    config_id: str
    config: ReactorConfig
    state: ReactorState
    budget_total: float
    time_used: float
    lock: threading.Lock


class ExperimentService:
    """Session and experiment orchestration over an append-only store."""

    def __init__(
        self,
        configs: dict[str, ReactorConfig],
        store: ExperimentStore,
        solver_options: SolverOptions | None = None,
    ):
        self.configs = dict(configs)
        self.store = store
        self.options = solver_options or SolverOptions(snapshot_interval=0.5)
        self.sessions: dict[int, _LiveSession] = {}
        self._registry_lock = threading.Lock()

    # -- sessions -------------------------------------------------------
    def reset_session(self, config_id: str, budget: float = 7200.0) -> dict:
        """Fresh reactor and budget; prior sessions stay in the store."""
        if config_id not in self.configs:
            raise UnknownIdError(f"unknown config id {config_id!r}")
        config = self.configs[config_id]
        manifest = self.store.create_session(
            config_id,
            budget,
            valve_chemicals={str(b.valve_id): b.chemical for b in config.bubblers},
            decomposition_temperatures={
                c.name: c.decomposition_temperature
                for c in config.chemicals
                if c.decomposition_temperature is not None
            },
        )
        session = _LiveSession(
            session_id=manifest.session_id,
            config_id=config_id,
            config=config,
            state=ReactorState.initial(config),
            budget_total=budget,
            time_used=0.0,
            lock=threading.Lock(),
        )
        with self._registry_lock:
            self.sessions[session.session_id] = session
        return {"session_id": session.session_id, "config_id": config_id,
                "budget": self.budget(session.session_id)}

    def _session(self, session_id: int) -> _LiveSession:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise UnknownIdError(f"unknown session {session_id}") from None

    def budget(self, session_id: int) -> dict:
        s = self._session(session_id)
        return {
            "total": s.budget_total,
            "used": s.time_used,
            "remaining": s.budget_total - s.time_used,
        }

    # -- experiments ------------------------------------------------------
    def perform_experiment(self, session_id: int, recipe_text: str) -> dict:
        """Parse, validate, budget-check, run, store, and answer compactly.

        Parse or validation failures consume no budget.  A solver abort
        consumes the simulated time reached, and the partial record is
        stored with a failure flag before the error propagates.
        """
        session = self._session(session_id)
        with session.lock:
            recipe = parse_recipe(recipe_text)  # RecipeParseError propagates
            report = validate_recipe_against_config(
                recipe, session.config, session.state.controls()
            )
            if report.hard:
                raise RecipeValidationError(report.hard)
            duration = total_duration(recipe)
            remaining = session.budget_total - session.time_used
            if duration > remaining:
                raise BudgetExceededError(duration, remaining)

            try:
                _, trace = run_recipe(session.state, recipe, session.config, self.options)
            except SolverInstabilityError as err:
                elapsed = getattr(err, "elapsed", 0.0)
                session.time_used += elapsed
                trace = getattr(err, "partial_trace", None)
                narrative = (
                    build_narrative(trace, session.config.soft_pressure_limit).text
                    if trace is not None
                    else ""
                )
                record = self._store_record(
                    session, recipe_text, narrative, elapsed, trace,
                    failed=True, failure_reason=str(err),
                )
                err.experiment_id = record.id
                err.time_used = session.time_used
                raise

            session.time_used += duration
            narrative = build_narrative(trace, session.config.soft_pressure_limit)
            record = self._store_record(
                session, recipe_text, narrative.text, duration, trace,
                failed=False, failure_reason=None,
            )
            return {
                "id": record.id,
                "narrative": narrative.text,
                "duration": duration,
                "time_used": session.time_used,
                "time_remaining": session.budget_total - session.time_used,
            }

    def _store_record(self, session, recipe_text, narrative, duration, trace,
                      failed, failure_reason) -> ExperimentRecord:
        record = ExperimentRecord(
            id=self.store.next_experiment_id(),
            session_id=session.session_id,
            recipe_text=recipe_text,
            narrative=narrative,
            duration=duration,
            cumulative_time_used=session.time_used,
            created_at=datetime.now(timezone.utc).isoformat(),
            failed=failed,
            failure_reason=failure_reason,
            soft_warnings=list(trace.warnings) if trace is not None else [],
            trace=trace.to_dict() if trace is not None else None,
        )
        snapshots_tsv = None
        if trace is not None and trace.snapshots is not None:
            buf = io.StringIO()
            write_snapshots_tsv(trace, buf)
            snapshots_tsv = buf.getvalue()
        self.store.append_record(record, snapshots_tsv)
        return record

    def retrieve_experiment(self, session_id: int, experiment_id: int) -> dict:
        """Full stored record; never the full-field snapshots."""
        self._ensure_session_exists(session_id)
        return self.store.load_record(session_id, experiment_id).to_dict()

    def timeline(self, session_id: int) -> dict:
        self._ensure_session_exists(session_id)
        timeline, tags = discovery.analyze_session(self.store, session_id)
        return {"timeline": timeline.as_dict(), "tags": tags.as_dict()}

    def _ensure_session_exists(self, session_id: int) -> None:
        if session_id not in self.sessions:
            self.store.load_manifest(session_id)  # raises UnknownIdError


# ----------------------------------------------------------------------
# HTTP layer


class SessionRequest(BaseModel):
    config_id: str
    budget: float = 7200.0


class MarketQuery(BaseModel):
    item: str
    letters: str = "mp"


def create_app(
    configs: dict[str, ReactorConfig],
    data_dir,
    solver_options: SolverOptions | None = None,
) -> FastAPI:
    """Build the HTTP application around an :class:`ExperimentService`."""
    service = ExperimentService(configs, ExperimentStore(data_dir), solver_options)
    app = FastAPI(title="alpsim experiment service")
    app.state.service = service

    def _http_error(status: int, error: str, message: str, **extra):
        return HTTPException(status_code=status, detail={"error": error, "message": message, **extra})

    @app.post("/sessions")
    def create_session(req: SessionRequest):
        try:
            return service.reset_session(req.config_id, req.budget)
        except UnknownIdError as e:
            raise _http_error(404, "not_found", str(e))

    @app.get("/sessions/{session_id}/budget")
    def get_budget(session_id: int):
        try:
            return service.budget(session_id)
        except UnknownIdError as e:
            raise _http_error(404, "not_found", str(e))

    @app.post("/sessions/{session_id}/experiments")
    async def perform(session_id: int, request: Request):
        recipe_text = (await request.body()).decode("utf-8")
        try:
            return service.perform_experiment(session_id, recipe_text)
        except UnknownIdError as e:
            raise _http_error(404, "not_found", str(e))
        except RecipeParseError as e:
            raise _http_error(422, "parse", str(e), line=e.line)
        except BudgetExceededError as e:
            raise _http_error(
                409, "budget", str(e), requested=e.requested, remaining=e.remaining
            )
        except RecipeValidationError as e:
            raise _http_error(422, "validation", str(e), violations=e.violations)
        except SolverInstabilityError as e:
            raise _http_error(
                500, "solver", str(e),
                experiment_id=getattr(e, "experiment_id", None),
                time_used=getattr(e, "time_used", None),
            )

    @app.get("/sessions/{session_id}/experiments/{experiment_id}")
    def retrieve(session_id: int, experiment_id: int):
        try:
            return service.retrieve_experiment(session_id, experiment_id)
        except UnknownIdError as e:
            raise _http_error(404, "not_found", str(e))

    @app.get("/sessions/{session_id}/timeline")
    def timeline(session_id: int):
        try:
            return service.timeline(session_id)
        except UnknownIdError as e:
            raise _http_error(404, "not_found", str(e))

    @app.post("/market/query")
    def market_query(req: MarketQuery):
        rule = market.MarketRule(frozenset(req.letters))
        return {"can_buy": market.market_query(req.item, rule)}

    return app
