"""Word-market oracle: the query rule, corpus statistics, and scoring.

The market refuses any item whose name contains a forbidden letter,
case-insensitively (default rule: m and p).  Corpus statistics are
always computed from a word list on disk, never hard-coded; the
canonical public 10,000-word English list can be fetched with
:func:`fetch_wordlist`, and a widely mirrored frequency list ships with
the package for offline use (its letter statistics differ slightly from
the canonical list's).
"""

from __future__ import annotations

import string
import urllib.request
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import AlpsimError

#: canonical public word list (one word per line, 10,000 entries)
WORDLIST_URL = "https://www.mit.edu/~ecprice/wordlist.10000"

#: packaged fallback corpus for demos and offline runs
BUNDLED_WORDLIST = "wordlist_10k.txt"


@dataclass(frozen=True)
class MarketRule:
    forbidden_letters: frozenset[str] = frozenset({"m", "p"})
    # matching is always case-insensitive

    def __post_init__(self):
        if not self.forbidden_letters:
            raise AlpsimError("market rule needs at least one forbidden letter")
        object.__setattr__(
            self, "forbidden_letters", frozenset(l.lower() for l in self.forbidden_letters)
        )


@dataclass(frozen=True)
class LetterHypothesis:
    claimed_forbidden: frozenset[str]

    def __post_init__(self):
        letters = frozenset(l.lower() for l in self.claimed_forbidden)
        if not letters <= set(string.ascii_lowercase):
            raise AlpsimError("hypothesis letters must be ascii letters")
        object.__setattr__(self, "claimed_forbidden", letters)


def market_query(item: str, rule: MarketRule | None = None) -> bool:
    """True when the market will sell ``item``."""
    rule = rule or MarketRule()
    lowered = item.lower()
    return not any(letter in lowered for letter in rule.forbidden_letters)


@dataclass
class CorpusStats:
    word_count: int
    p_reject: float
    letter_probability: dict[str, float]  # P(word contains letter), forbidden letters
    all_letter_probability: dict[str, float] = field(repr=False, default_factory=dict)


def corpus_stats(words: list[str], rule: MarketRule | None = None) -> CorpusStats:
    """Exact occurrence frequencies over the corpus."""
    rule = rule or MarketRule()
    cleaned = [w.strip().lower() for w in words if w.strip()]
    if not cleaned:
        raise AlpsimError("corpus is empty")
    n = len(cleaned)
    rejected = sum(1 for w in cleaned if not market_query(w, rule))
    per_letter = {
        letter: sum(1 for w in cleaned if letter in w) / n
        for letter in sorted(rule.forbidden_letters)
    }
    all_letters = {
        letter: sum(1 for w in cleaned if letter in w) / n
        for letter in string.ascii_lowercase
    }
    return CorpusStats(
        word_count=n,
        p_reject=rejected / n,
        letter_probability=per_letter,
        all_letter_probability=all_letters,
    )


def score_hypothesis(hypothesis: LetterHypothesis, truth: MarketRule | None = None) -> float:
    """Letter-rubric score: +1 per correct letter, -0.5 per spurious one.

    A hypothesis with no correct letter scores 0 regardless of its
    spurious claims (the completely-wrong floor).
    """
    truth = truth or MarketRule()
    correct = len(hypothesis.claimed_forbidden & truth.forbidden_letters)
    spurious = len(hypothesis.claimed_forbidden - truth.forbidden_letters)
    if correct == 0:
        return 0.0
    return correct * 1.0 - spurious * 0.5


def load_wordlist(path: str | Path) -> list[str]:
    """Read a one-word-per-line corpus file."""
    text = Path(path).read_text()
    return [line.strip() for line in text.splitlines() if line.strip()]


def bundled_wordlist() -> list[str]:
    """The packaged fallback corpus."""
    text = resources.files("alpsim.data").joinpath(BUNDLED_WORDLIST).read_text()
    return [line.strip() for line in text.splitlines() if line.strip()]


def fetch_wordlist(dest: str | Path, url: str = WORDLIST_URL, timeout: float = 30.0) -> Path:
    """Download the canonical word list to ``dest`` and return the path."""
    dest = Path(dest)
    dest.parent.mkdir(parents=True, exist_ok=True)
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        dest.write_bytes(resp.read())
    return dest
