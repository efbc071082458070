"""Session-scoped HTTP client for the experiment service.

One :class:`ClientSession` owns one server-side session.  The client
keeps a local mirror of the reactor-time budget and reconciles it
against the server on every call; any drift raises
:class:`BudgetMismatch` because it would mean the two sides disagree
about accounting, which must never happen.
"""

from __future__ import annotations

from dataclasses import dataclass

import httpx

from .duration import estimate_duration
from .errors import (
    BudgetExceeded,
    BudgetMismatch,
    ClientError,
    NotFound,
    ParseRejected,
    SolverAborted,
    TransportError,
    ValidationRejected,
)


@dataclass(frozen=True)
class PerformResult:
    """Compact server response to one experiment."""

    id: int
    narrative: str
    duration: float
    time_used: float
    time_remaining: float


class ClientSession:
    def __init__(self, base_url: str, http: httpx.Client | None = None, timeout: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self._http = http or httpx.Client(base_url=self.base_url, timeout=timeout)
        self.session_id: int | None = None
        self.budget_total: float = 0.0
        self.used: float = 0.0

    # -- plumbing -------------------------------------------------------
    def _request(self, method: str, path: str, **kwargs):
        try:
            resp = self._http.request(method, path, **kwargs)
        except httpx.HTTPError as e:
            raise TransportError(str(e)) from e
        if resp.status_code < 400:
            return resp.json()
        detail = {}
        try:
            detail = resp.json().get("detail", {})
        except Exception:
            pass
        error = detail.get("error")
        message = detail.get("message", resp.text)
        if error == "parse":
            raise ParseRejected(message, detail.get("line"))
        if error == "validation":
            raise ValidationRejected(message, detail.get("violations", []))
        if error == "budget":
            raise BudgetExceeded(message, detail.get("requested"), detail.get("remaining"))
        if error == "solver":
            raise SolverAborted(message, detail.get("experiment_id"), detail.get("time_used"))
        if error == "not_found" or resp.status_code == 404:
            raise NotFound(message)
        raise ClientError(f"{resp.status_code}: {message}")

    def _reconcile(self, server_used: float, server_remaining: float) -> None:
        if server_used != self.used or server_remaining != self.budget_total - self.used:
            raise BudgetMismatch(
                f"server used={server_used!r} remaining={server_remaining!r}, "
                f"mirror used={self.used!r} total={self.budget_total!r}"
            )

    # -- API ------------------------------------------------------------
    def open(self, config_id: str, budget: float = 7200.0) -> int:
        body = self._request("POST", "/sessions", json={"config_id": config_id, "budget": budget})
        self.session_id = body["session_id"]
        self.budget_total = budget
        self.used = 0.0
        return self.session_id

    def estimate_duration(self, recipe_text: str) -> float:
        return estimate_duration(recipe_text)

    @property
    def remaining(self) -> float:
        return self.budget_total - self.used

    def perform(self, recipe_text: str) -> PerformResult:
        """Submit a recipe; mirrors the server's accounting on success.

        Rejections (parse, validation, budget) leave the mirror
        untouched, matching the server.  A solver abort re-syncs the
        mirror from the error payload before propagating.
        """
        assert self.session_id is not None, "open() a session first"
        try:
            body = self._request(
                "POST", f"/sessions/{self.session_id}/experiments",
                content=recipe_text.encode("utf-8"),
            )
        except SolverAborted as err:
            if err.time_used is not None:
                self.used = err.time_used
            raise
        result = PerformResult(
            id=body["id"],
            narrative=body["narrative"],
            duration=body["duration"],
            time_used=body["time_used"],
            time_remaining=body["time_remaining"],
        )
        self.used += result.duration
        self._reconcile(result.time_used, result.time_remaining)
        return result

    def retrieve(self, experiment_id: int) -> dict:
        assert self.session_id is not None
        return self._request(
            "GET", f"/sessions/{self.session_id}/experiments/{experiment_id}"
        )

    def budget(self) -> dict:
        assert self.session_id is not None
        body = self._request("GET", f"/sessions/{self.session_id}/budget")
        self._reconcile(body["used"], body["remaining"])
        return body

    def timeline(self) -> dict:
        assert self.session_id is not None
        return self._request("GET", f"/sessions/{self.session_id}/timeline")

    def market_query(self, item: str, letters: str = "mp") -> bool:
        body = self._request("POST", "/market/query", json={"item": item, "letters": letters})
        return body["can_buy"]

    def close(self) -> None:
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
