"""Scripted discovery policies and the pluggable language-model hook.

A policy maps the history of compact responses to the next recipe text
(or None to stop).  The loop enforces the budget floor: a recipe whose
scheduled duration exceeds the remaining budget ends the run instead of
being submitted.
"""

from __future__ import annotations

import re
from typing import Callable, Protocol

from .client import ClientSession, PerformResult
from .duration import estimate_duration, looks_like_recipe
from .transcript import TranscriptEntry, write_transcript


class Policy(Protocol):
    def step(self, history: list[PerformResult]) -> str | None: ...


class ReplayPolicy:
    """Plays a fixed recipe list in order."""

    def __init__(self, recipes: list[str]):
        self.recipes = list(recipes)

    def step(self, history: list[PerformResult]) -> str | None:
        if len(history) >= len(self.recipes):
            return None
        return self.recipes[len(history)]


class SaturationSearchPolicy:
    """Accumulates exposure of one chemical until mass uptake plateaus.

    Pulses ``step_exposure`` seconds at a time and stops once the last
    pulse added less than ``plateau_rtol`` of the cumulative uptake.
    ``saturation_exposure`` then holds the total exposure delivered.
    """

    def __init__(self, valve: int, step_exposure: float = 5.0, purge: float = 8.0,
                 plateau_rtol: float = 0.05, max_steps: int = 20,
                 setup_recipe: str | None = None):
        self.valve = valve
        self.step_exposure = step_exposure
        self.purge = purge
        self.plateau_rtol = plateau_rtol
        self.max_steps = max_steps
        self.setup_recipe = setup_recipe
        self.saturation_exposure: float | None = None
        self._pulses = 0
        self._cumulative_mass = 0.0

    def _pulse_recipe(self) -> str:
        return (
            f"1\tV\t{self.valve}\t1\t{self.step_exposure:g}\n"
            f"\tV\t{self.valve}\t0\t{self.purge:g}\n"
        )

    def step(self, history: list[PerformResult]) -> str | None:
        if self.setup_recipe is not None and not history:
            return self.setup_recipe
        pulses_seen = len(history) - (1 if self.setup_recipe is not None else 0)
        if pulses_seen > 0:
            gained = abs(net_mass_change(history[-1].narrative))
            self._cumulative_mass += gained
            if self._cumulative_mass > 0 and gained < self.plateau_rtol * self._cumulative_mass:
                self.saturation_exposure = pulses_seen * self.step_exposure
                return None
        if pulses_seen >= self.max_steps:
            self.saturation_exposure = None  # never plateaued
            return None
        return self._pulse_recipe()


_MASS_LINE = re.compile(r"^net mass change:\s*([-+0-9.e]+)\s*ng/cm\^2", re.M)


def net_mass_change(narrative: str) -> float:
    """Net QCM change reported in a narrative header."""
    match = _MASS_LINE.search(narrative)
    if not match:
        raise ValueError("narrative carries no mass line")
    return float(match.group(1))


def llm_hook(callable_: Callable[[str], str], max_retries: int = 1) -> Policy:
    """Wrap a text-to-text callable as a policy.

    The callable receives the narrative history and must answer with a
    recipe table (optionally fenced in a code block).  An answer with no
    parseable recipe is retried once, then the policy stops.
    """

    class _LlmPolicy:
        def step(self, history: list[PerformResult]) -> str | None:
            prompt = "\n\n".join(r.narrative for r in history) or "fresh reactor; propose a recipe"
            for _ in range(1 + max_retries):
                reply = callable_(prompt)
                recipe = extract_recipe(reply)
                if recipe is not None:
                    return recipe
            return None

    return _LlmPolicy()


def extract_recipe(reply: str) -> str | None:
    """Pull the longest contiguous recipe table out of a free-form reply.

    Fenced code blocks are tried first, then the raw text.
    """
    fenced = re.findall(r"```(?:\w*\n)?(.*?)```", reply, re.S)
    for block in fenced + [reply]:
        lines = block.splitlines()
        n = len(lines)
        best = None
        for start in range(n):
            if not lines[start].strip():
                continue
            for end in range(n, start, -1):
                if looks_like_recipe("\n".join(lines[start:end])):
                    if best is None or (end - start) > (best[1] - best[0]):
                        best = (start, end)
                    break
        if best is not None:
            return "\n".join(lines[best[0]:best[1]]) + "\n"
    return None


def run_policy(
    session: ClientSession,
    policy: Policy,
    budget: float = 7200.0,
    config_id: str = "run2",
    transcript_path=None,
) -> list[TranscriptEntry]:
    """Drive a fresh session with a policy until it stops or the budget floors.

    A policy exception still writes the partial transcript before
    propagating.
    """
    session.open(config_id, budget)
    history: list[PerformResult] = []
    entries: list[TranscriptEntry] = []
    try:
        while True:
            recipe = policy.step(history)
            if recipe is None:
                break
            if estimate_duration(recipe) > session.remaining:
                break
            result = session.perform(recipe)
            history.append(result)
            entries.append(
                TranscriptEntry(
                    experiment_id=result.id,
                    recipe=recipe,
                    narrative=result.narrative,
                    duration=result.duration,
                    time_used=result.time_used,
                    time_remaining=result.time_remaining,
                )
            )
    finally:
        if transcript_path is not None:
            write_transcript(entries, transcript_path)
    return entries
