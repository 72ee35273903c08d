"""Newline-delimited tweet JSON parsing and keyword filtering.

`parse_tweet` pulls the geolocation-relevant subset out of one platform
JSON record; `stream_corpus` runs it over a (possibly gzipped) file or
stdin, counting rather than crashing on malformed lines. Parsing is
pure per line, so it can run on any number of workers.
"""

from __future__ import annotations

import gzip
import io
import json
import string
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterator

__all__ = [
    "IngestStats",
    "RawTweet",
    "TweetParseError",
    "load_keywords",
    "matches_keywords",
    "parse_tweet",
    "stream_corpus",
]

# "Wed Oct 10 20:19:24 +0000 2018"
_CREATED_AT_FORMAT = "%a %b %d %H:%M:%S %z %Y"

_TOKEN_EDGE = string.punctuation.replace("#", "") + "‘’“”…"


class TweetParseError(ValueError):
    """A line that cannot become a RawTweet; callers count and skip."""


@dataclass(frozen=True, slots=True)
class RawTweet:
    """The geolocation-relevant subset of one tweet record.

    Coordinates come from the precise-GPS field only; place bounding
    boxes never populate them. `text` prefers the extended (untruncated)
    field when the record carries one.
    """

    tweet_id: int
    user_id: int
    created_at: datetime
    text: str
    user_location: str | None = None
    place_full_name: str | None = None
    place_country_code: str | None = None
    latitude: float | None = None
    longitude: float | None = None
    language: str | None = None
    user_verified: bool = False

    def to_dict(self) -> dict:
        """Debug/round-trip form; `from_dict` inverts it exactly."""
        return {
            "tweet_id": self.tweet_id,
            "user_id": self.user_id,
            "created_at": self.created_at.isoformat(),
            "text": self.text,
            "user_location": self.user_location,
            "place_full_name": self.place_full_name,
            "place_country_code": self.place_country_code,
            "latitude": self.latitude,
            "longitude": self.longitude,
            "language": self.language,
            "user_verified": self.user_verified,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RawTweet":
        kwargs = dict(data)
        kwargs["created_at"] = datetime.fromisoformat(kwargs["created_at"])
        return cls(**kwargs)


@dataclass
class IngestStats:
    """Counters for one corpus pass; lines_read = parsed_ok + skipped."""

    lines_read: int = 0
    parsed_ok: int = 0
    skipped_malformed: int = 0
    filtered_out: int = 0

    def as_dict(self) -> dict:
        return {
            "lines_read": self.lines_read,
            "parsed_ok": self.parsed_ok,
            "skipped_malformed": self.skipped_malformed,
            "filtered_out": self.filtered_out,
        }


def _parse_created_at(value: object) -> datetime:
    if not isinstance(value, str) or not value:
        raise TweetParseError("missing created_at")
    try:
        parsed = datetime.strptime(value, _CREATED_AT_FORMAT)
    except ValueError:
        try:
            parsed = datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError:
            raise TweetParseError(f"unparseable created_at: {value!r}") from None
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def _require_id(record: dict, key: str) -> int:
    value = record.get(key + "_str") or record.get(key)
    try:
        number = int(value)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise TweetParseError(f"missing or invalid {key}") from None
    if number <= 0:
        raise TweetParseError(f"non-positive {key}: {number}")
    return number


def _extract_text(record: dict) -> str:
    extended = record.get("extended_tweet")
    if isinstance(extended, dict) and extended.get("full_text"):
        text = extended["full_text"]
    else:
        text = record.get("full_text") or record.get("text")
    if not isinstance(text, str) or not text:
        raise TweetParseError("missing text")
    return text


def _extract_coordinates(record: dict) -> tuple[float | None, float | None]:
    # "coordinates" is GeoJSON (lon, lat); the legacy "geo" mirror is
    # (lat, lon). Place bounding boxes are deliberately ignored.
    coords = record.get("coordinates")
    if isinstance(coords, dict):
        pair = coords.get("coordinates")
        if isinstance(pair, (list, tuple)) and len(pair) == 2:
            return _check_latlon(pair[1], pair[0])
    geo = record.get("geo")
    if isinstance(geo, dict):
        pair = geo.get("coordinates")
        if isinstance(pair, (list, tuple)) and len(pair) == 2:
            return _check_latlon(pair[0], pair[1])
    return None, None


def _check_latlon(lat: object, lon: object) -> tuple[float, float]:
    try:
        lat_f, lon_f = float(lat), float(lon)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise TweetParseError("non-numeric coordinates") from None
    if not (-90.0 <= lat_f <= 90.0 and -180.0 <= lon_f <= 180.0):
        raise TweetParseError(f"coordinates out of range: {lat_f}, {lon_f}")
    return lat_f, lon_f


def _clean_optional(value: object) -> str | None:
    if isinstance(value, str):
        value = value.strip()
        if value:
            return value
    return None


def parse_tweet(line: str) -> RawTweet:
    """Parse one newline-delimited JSON record into a RawTweet.

    Raises TweetParseError on invalid JSON, on missing tweet id, user
    id, text or timestamp, and on out-of-range coordinates. The stream
    layer counts these and moves on; nothing here aborts a corpus run.
    """
    try:
        record = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise TweetParseError(f"invalid JSON: {exc}") from None
    if not isinstance(record, dict):
        raise TweetParseError("record is not a JSON object")

    tweet_id = _require_id(record, "id")
    user = record.get("user")
    if not isinstance(user, dict):
        raise TweetParseError("missing user object")
    user_id = _require_id(user, "id")
    created_at = _parse_created_at(record.get("created_at"))
    text = _extract_text(record)
    latitude, longitude = _extract_coordinates(record)

    place = record.get("place")
    place_full_name = place_country_code = None
    if isinstance(place, dict):
        place_full_name = _clean_optional(place.get("full_name"))
        cc = place.get("country_code")
        if isinstance(cc, str) and len(cc.strip()) == 2:
            place_country_code = cc.strip().lower()

    return RawTweet(
        tweet_id=tweet_id,
        user_id=user_id,
        created_at=created_at,
        text=text,
        user_location=_clean_optional(user.get("location")),
        place_full_name=place_full_name,
        place_country_code=place_country_code,
        latitude=latitude,
        longitude=longitude,
        language=_clean_optional(record.get("lang")),
        user_verified=bool(user.get("verified", False)),
    )


def _keyword_tokens(text: str) -> Iterator[str]:
    for raw in text.lower().split():
        token = raw.strip(_TOKEN_EDGE).lstrip("#")
        if token:
            yield token


def matches_keywords(tweet: RawTweet, keywords: frozenset[str] | set[str]) -> bool:
    """True iff any keyword occurs in the text as a token or hashtag.

    Matching is case-insensitive and token-based, so a keyword "us"
    does not fire on "virus". Keywords must already be lowercase and
    hashtags stored without the leading '#'.
    """
    return any(token in keywords for token in _keyword_tokens(tweet.text))


def load_keywords(path: str | Path) -> frozenset[str]:
    """Read a keyword list, one lowercase entry per line, '#' stripped."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip().lower().lstrip("#")
            if word:
                words.add(word)
    return frozenset(words)


class CorpusStream:
    """Iterator over parsed tweets with live `stats` counters."""

    def __init__(
        self,
        lines: IO[str],
        keywords: frozenset[str] | set[str] | None = None,
    ) -> None:
        self._lines = lines
        self._keywords = keywords
        self.stats = IngestStats()

    def __iter__(self) -> Iterator[RawTweet]:
        for line in self._lines:
            self.stats.lines_read += 1
            try:
                tweet = parse_tweet(line)
            except TweetParseError:
                self.stats.skipped_malformed += 1
                continue
            self.stats.parsed_ok += 1
            if self._keywords is not None and not matches_keywords(
                tweet, self._keywords
            ):
                self.stats.filtered_out += 1
                continue
            yield tweet


def stream_corpus(
    source: str | Path | IO[str],
    compression: str = "auto",
    keywords: frozenset[str] | set[str] | None = None,
) -> CorpusStream:
    """Open a corpus for streaming; '-' reads stdin.

    `compression` is "none", "gzip", or "auto" (by .gz suffix). An
    unreadable source raises OSError before any iteration happens.
    With `keywords`, non-matching tweets are dropped and counted as
    filtered_out.
    """
    if hasattr(source, "read"):
        return CorpusStream(source, keywords)  # type: ignore[arg-type]
    if source == "-":
        return CorpusStream(sys.stdin, keywords)
    path = Path(source)
    if compression == "auto":
        compression = "gzip" if path.suffix == ".gz" else "none"
    if compression == "gzip":
        fh: IO[str] = io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    elif compression == "none":
        fh = open(path, encoding="utf-8")
    else:
        raise ValueError(f"unknown compression: {compression!r}")
    return CorpusStream(fh, keywords)
