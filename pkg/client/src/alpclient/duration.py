"""Client-side recipe duration arithmetic.

A deliberately tiny re-implementation of the recipe table grammar,
sufficient to predict scheduled duration and to recognize recipe text.
It computes no physics: all experimental truth comes from the server.
"""

from __future__ import annotations


class RecipeSyntaxError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _waits_per_block(text: str) -> list[tuple[int, list[float]]]:
    blocks: list[tuple[int, list[float]]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        tokens = body.split()
        if not tokens:
            continue
        if len(tokens) == 5:
            try:
                count = float(tokens[0])
            except ValueError:
                raise RecipeSyntaxError(f"bad cycle count {tokens[0]!r}", line_no) from None
            if count <= 0 or count != int(count):
                raise RecipeSyntaxError(f"bad cycle count {tokens[0]!r}", line_no)
            fields = tokens[1:]
            blocks.append((int(count), []))
        elif len(tokens) == 4:
            fields = tokens
            if not blocks:
                raise RecipeSyntaxError("first line must start a cycle block", line_no)
        else:
            raise RecipeSyntaxError(f"expected 4 or 5 fields, got {len(tokens)}", line_no)
        if fields[0] not in ("M", "V", "T"):
            raise RecipeSyntaxError(f"unknown action {fields[0]!r}", line_no)
        try:
            wait = float(fields[3])
        except ValueError:
            raise RecipeSyntaxError(f"bad wait time {fields[3]!r}", line_no) from None
        if wait < 0:
            raise RecipeSyntaxError("wait time must be >= 0", line_no)
        blocks[-1][1].append(wait)
    return blocks


def estimate_duration(recipe_text: str) -> float:
    """Scheduled seconds: waits summed in expansion order, matching the
    server's accounting bit for bit."""
    total = 0.0
    for cycles, waits in _waits_per_block(recipe_text):
        for _ in range(cycles):
            for wait in waits:
                total += wait
    return total


def looks_like_recipe(text: str) -> bool:
    """True when the text parses as a non-empty recipe table."""
    try:
        blocks = _waits_per_block(text)
    except RecipeSyntaxError:
        return False
    return bool(blocks)
