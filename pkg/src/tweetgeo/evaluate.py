"""Accuracy evaluation of text-derived geolocation against GPS truth.

On a seeded random sample of tweets that carry precise coordinates and
yield a non-empty derived location from both text sources, the derived
places are compared against the reverse-geocoded coordinates at four
granularity levels. Matching is strict normalized-string equality per
slot (country compares the two-letter code); a missing slot on either
side is a miss. Both sides pass through the same address mapping, so
they share one naming vocabulary.
"""

from __future__ import annotations

import csv
import logging
import random
from dataclasses import dataclass, field
from typing import IO, Iterable

from .geocode import ResolvedPlace
from .ingest import RawTweet
from .resolve import Resolver

__all__ = [
    "EvalError",
    "EvalReport",
    "LEVELS",
    "SOURCES",
    "evaluate",
    "match_at_level",
    "sample_eval_set",
]

logger = logging.getLogger(__name__)

LEVELS = ("country", "state", "county", "city")
SOURCES = ("user_location", "tweet_content")

CSV_HEADER = ("source", "level", "matches", "samples", "accuracy")


class EvalError(Exception):
    """Evaluation cannot run (no qualifying tweets)."""


def match_at_level(
    derived: ResolvedPlace | None, truth: ResolvedPlace | None, level: str
) -> bool:
    """Strict per-slot equality; country level compares country_code."""
    if level not in LEVELS:
        raise ValueError(f"unknown granularity level: {level!r}")
    if derived is None or truth is None:
        return False
    if level == "country":
        a, b = derived.country_code, truth.country_code
    else:
        a, b = getattr(derived, level), getattr(truth, level)
    return a is not None and b is not None and a == b


@dataclass
class EvalReport:
    """Matches and sample counts per (source, level) cell."""

    matches: dict[tuple[str, str], int] = field(default_factory=dict)
    samples: int = 0

    def accuracy(self, source: str, level: str) -> float:
        if self.samples == 0:
            raise EvalError("no samples")
        return self.matches.get((source, level), 0) / self.samples

    def rows(self) -> list[tuple[str, str, int, int, str]]:
        out = []
        for source in SOURCES:
            for level in LEVELS:
                n = self.matches.get((source, level), 0)
                out.append(
                    (source, level, n, self.samples, f"{n / self.samples:.4f}")
                )
        return out

    def write_csv(self, sink: IO[str]) -> None:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(self.rows())

    def format_table(self) -> str:
        """Human-readable 2x4 accuracy grid."""
        width = max(len(s) for s in SOURCES)
        lines = [
            f"{'field'.ljust(width)}  "
            + "  ".join(level.capitalize().rjust(7) for level in LEVELS)
        ]
        for source in SOURCES:
            cells = "  ".join(
                f"{self.accuracy(source, level):7.2f}" for level in LEVELS
            )
            lines.append(f"{source.ljust(width)}  {cells}")
        lines.append(f"samples: {self.samples}")
        return "\n".join(lines)


def _qualifies(tweet: RawTweet, resolver: Resolver) -> bool:
    if tweet.latitude is None or tweet.longitude is None:
        return False
    user_place, _ = resolver.resolve_text_source(tweet.user_location)
    if user_place is None:
        return False
    content_place, _ = resolver.resolve_text_source(tweet.text)
    return content_place is not None


def sample_eval_set(
    corpus: Iterable[RawTweet], n: int, seed: int, resolver: Resolver
) -> list[RawTweet]:
    """Seeded uniform sample of tweets qualifying for evaluation.

    Qualifying means: precise GPS present, and both the profile field
    and the tweet body yield a derived place. Returns everything (with
    a warning) when fewer than n tweets qualify.
    """
    if n <= 0:
        raise ValueError("sample size must be positive")
    qualifying = [t for t in corpus if _qualifies(t, resolver)]
    if len(qualifying) <= n:
        if len(qualifying) < n:
            logger.warning(
                "only %d qualifying tweets for requested sample of %d",
                len(qualifying),
                n,
            )
        return qualifying
    return random.Random(seed).sample(qualifying, n)


def evaluate(
    corpus: Iterable[RawTweet], n: int, seed: int, resolver: Resolver
) -> EvalReport:
    """Accuracy per source and granularity level over a seeded sample."""
    sample = sample_eval_set(corpus, n, seed, resolver)
    if not sample:
        raise EvalError("no tweets qualify for evaluation")
    report = EvalReport(samples=len(sample))
    for tweet in sample:
        truth = resolver.resolve_gps(tweet)
        derived = {
            "user_location": resolver.resolve_text_source(tweet.user_location)[0],
            "tweet_content": resolver.resolve_text_source(tweet.text)[0],
        }
        for source in SOURCES:
            for level in LEVELS:
                if match_at_level(derived[source], truth, level):
                    key = (source, level)
                    report.matches[key] = report.matches.get(key, 0) + 1
    return report
