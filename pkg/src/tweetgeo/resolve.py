"""Four-source location fusion for a single tweet.

Each tweet contributes up to four independent location signals, fused
into one GeoRecord:

  geo             reverse-geocoded GPS coordinates
  place           forward-geocoded place full name
  user_location   toponym extraction + geocoding over the profile field
  tweet_locations toponym extraction + geocoding + majority vote over
                  the tweet body (all resolved mentions are kept in
                  mentioned_toponyms)

Consumers should trust the slots in that order: GPS is device-reported,
the place tag is user-selected, and the two text sources are inferred.
The slots are computed independently; removing one input field changes
only its own slot.

Output is newline-delimited JSON, one record per line, schema version 1
(see GeoRecord.to_dict for the exact field order). Absent slots are
omitted; files are byte-reproducible given the same inputs and cache.
"""

from __future__ import annotations

import json
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from typing import IO, Iterable, Iterator

from .gazetteer import GazetteerIndex
from .geocode import GeocodeUnavailable, NominatimClient, ResolvedPlace
from .ingest import RawTweet
from .toponyms import extract_toponyms

__all__ = [
    "GeoRecord",
    "ResolveCounters",
    "Resolver",
    "SOURCE_PRIORITY",
    "majority_vote",
    "read_records",
    "record_from_dict",
    "resolve_corpus",
    "write_records",
]

SCHEMA_VERSION = 1

# Trust order for consumers picking a single location per tweet.
SOURCE_PRIORITY = ("geo", "place", "user_location", "tweet_locations")


@dataclass(frozen=True, slots=True)
class GeoRecord:
    """Per-tweet fused output: ids plus up to four resolved places."""

    tweet_id: int
    user_id: int
    created_at: datetime
    geo: ResolvedPlace | None = None
    place: ResolvedPlace | None = None
    user_location: ResolvedPlace | None = None
    tweet_locations: ResolvedPlace | None = None
    mentioned_toponyms: tuple[tuple[str, str | None], ...] = ()

    def to_dict(self) -> dict:
        out: dict = {
            "tweet_id": self.tweet_id,
            "user_id": self.user_id,
            "created_at": self.created_at.isoformat(),
        }
        for slot in SOURCE_PRIORITY:
            value: ResolvedPlace | None = getattr(self, slot)
            if value is not None:
                out[slot] = value.to_dict()
        if self.mentioned_toponyms:
            out["mentioned_toponyms"] = [list(pair) for pair in self.mentioned_toponyms]
        return out

    def best_place(self) -> ResolvedPlace | None:
        """Highest-priority non-empty slot, per SOURCE_PRIORITY."""
        for slot in SOURCE_PRIORITY:
            value = getattr(self, slot)
            if value is not None:
                return value
        return None


def record_from_dict(data: dict) -> GeoRecord:
    slots = {
        name: ResolvedPlace.from_dict(data[name]) if name in data else None
        for name in SOURCE_PRIORITY
    }
    mentioned = tuple(
        (pair[0], pair[1]) for pair in data.get("mentioned_toponyms", ())
    )
    return GeoRecord(
        tweet_id=data["tweet_id"],
        user_id=data["user_id"],
        created_at=datetime.fromisoformat(data["created_at"]),
        mentioned_toponyms=mentioned,
        **slots,
    )


def majority_vote(
    resolved: list[tuple[str, list[ResolvedPlace]]],
) -> ResolvedPlace | None:
    """Fuse multiple resolved toponyms by most-frequent country.

    Each entry is (phrase, search results for that phrase); the top
    result's country casts the phrase's vote. Among candidates of the
    winning country the highest importance wins; remaining ties go to
    the earliest phrase. Entries with empty results are ignored;
    candidates without a country only win when no candidate has one.
    """
    candidates = [
        (position, results[0])
        for position, (_phrase, results) in enumerate(resolved)
        if results
    ]
    if not candidates:
        return None
    if len(candidates) == 1:
        return candidates[0][1]
    counts = Counter(
        place.country_code for _, place in candidates if place.country_code
    )
    if counts:
        top = max(counts.values())
        winners = {cc for cc, n in counts.items() if n == top}
        pool = [
            (position, place)
            for position, place in candidates
            if place.country_code in winners
        ]
    else:
        pool = candidates
    return min(
        pool,
        key=lambda entry: (
            -(entry[1].importance if entry[1].importance is not None else -1.0),
            entry[0],
        ),
    )[1]


@dataclass
class ResolveCounters:
    """Per-source failure and not-found tallies for one run."""

    tweets: int = 0
    gps_failures: int = 0
    gps_not_found: int = 0
    place_failures: int = 0
    text_query_failures: int = 0

    _lock: threading.Lock = field(
        default_factory=threading.Lock, repr=False, compare=False
    )

    def bump(self, name: str) -> None:
        with self._lock:
            setattr(self, name, getattr(self, name) + 1)

    def as_dict(self) -> dict:
        return {
            "tweets": self.tweets,
            "gps_failures": self.gps_failures,
            "gps_not_found": self.gps_not_found,
            "place_failures": self.place_failures,
            "text_query_failures": self.text_query_failures,
        }


class Resolver:
    """Per-tweet resolution against a gazetteer and a geocode client.

    Stateless apart from shared counters and the client's cache, so one
    instance serves any number of worker threads. `vote=False` disables
    the content-vote slot and leaves all resolved mentions in
    mentioned_toponyms only.
    """

    def __init__(
        self,
        index: GazetteerIndex,
        stopwords: frozenset[str] | set[str],
        client: NominatimClient,
        *,
        unwrap_hashtags: bool = True,
        vote: bool = True,
    ) -> None:
        self.index = index
        self.stopwords = stopwords
        self.client = client
        self.unwrap_hashtags = unwrap_hashtags
        self.vote = vote
        self.counters = ResolveCounters()

    # -- per-source operations ----------------------------------------------

    def resolve_gps(self, tweet: RawTweet) -> ResolvedPlace | None:
        """Reverse-geocode precise coordinates, keeping the originals."""
        if tweet.latitude is None or tweet.longitude is None:
            return None
        try:
            place = self.client.reverse(tweet.latitude, tweet.longitude)
        except GeocodeUnavailable:
            self.counters.bump("gps_failures")
            return None
        if place is None:
            self.counters.bump("gps_not_found")
            return None
        return ResolvedPlace(
            country_code=place.country_code,
            country=place.country,
            state=place.state,
            county=place.county,
            city=place.city,
            latitude=tweet.latitude,
            longitude=tweet.longitude,
            importance=place.importance,
        )

    def resolve_place_field(self, tweet: RawTweet) -> ResolvedPlace | None:
        """Geocode the place tag's full name; fall back to its country code."""
        if not tweet.place_full_name:
            return None
        results: list[ResolvedPlace] = []
        try:
            results = self.client.search(tweet.place_full_name)
        except GeocodeUnavailable:
            self.counters.bump("place_failures")
        if results:
            return results[0]
        if tweet.place_country_code:
            return ResolvedPlace(country_code=tweet.place_country_code)
        return None

    def resolve_text_source(
        self, text: str | None
    ) -> tuple[ResolvedPlace | None, list[tuple[str, str | None]]]:
        """Extract toponyms, geocode each distinct phrase, majority-vote.

        Returns the vote winner and every resolved (phrase, country)
        pair. Phrases are deduplicated before geocoding so a repeated
        word votes once; geocoder failures shrink the candidate set.
        """
        if not text:
            return None, []
        toponyms = extract_toponyms(
            text, self.index, self.stopwords, unwrap_hashtags=self.unwrap_hashtags
        )
        seen: set[str] = set()
        phrases = []
        for candidate in toponyms:
            if candidate.phrase not in seen:
                seen.add(candidate.phrase)
                phrases.append(candidate.phrase)
        resolved: list[tuple[str, list[ResolvedPlace]]] = []
        for phrase in phrases:
            try:
                resolved.append((phrase, self.client.search(phrase)))
            except GeocodeUnavailable:
                self.counters.bump("text_query_failures")
        mentioned = [
            (phrase, results[0].country_code)
            for phrase, results in resolved
            if results
        ]
        winner = majority_vote(resolved) if self.vote else None
        return winner, mentioned

    def resolve_tweet(self, tweet: RawTweet) -> GeoRecord:
        """Compute all four slots; never fails, empty record at worst."""
        self.counters.bump("tweets")
        user_place, _ = self.resolve_text_source(tweet.user_location)
        content_place, mentioned = self.resolve_text_source(tweet.text)
        return GeoRecord(
            tweet_id=tweet.tweet_id,
            user_id=tweet.user_id,
            created_at=tweet.created_at,
            geo=self.resolve_gps(tweet),
            place=self.resolve_place_field(tweet),
            user_location=user_place,
            tweet_locations=content_place,
            mentioned_toponyms=tuple(mentioned),
        )


def resolve_corpus(
    tweets: Iterable[RawTweet],
    resolver: Resolver,
    workers: int = 1,
    chunk_size: int = 256,
) -> Iterator[GeoRecord]:
    """Resolve a tweet stream, preserving input order.

    With workers > 1 tweets are processed in chunks on a thread pool;
    results still come out in input order, so output files stay
    deterministic.
    """
    if workers <= 1:
        for tweet in tweets:
            yield resolver.resolve_tweet(tweet)
        return

    def do_chunk(chunk: list[RawTweet]) -> list[GeoRecord]:
        return [resolver.resolve_tweet(t) for t in chunk]

    def chunks() -> Iterator[list[RawTweet]]:
        batch: list[RawTweet] = []
        for tweet in tweets:
            batch.append(tweet)
            if len(batch) >= chunk_size:
                yield batch
                batch = []
        if batch:
            yield batch

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for done in pool.map(do_chunk, chunks()):
            yield from done


def dumps_record(record: GeoRecord) -> str:
    """Canonical single-line JSON form (schema v1, fixed field order)."""
    return json.dumps(record.to_dict(), ensure_ascii=False, separators=(",", ":"))


def write_records(records: Iterable[GeoRecord], sink: IO[str]) -> int:
    """Write records as NDJSON; returns the number written."""
    count = 0
    for record in records:
        sink.write(dumps_record(record) + "\n")
        count += 1
    return count


def read_records(source: IO[str]) -> Iterator[GeoRecord]:
    """Parse an NDJSON GeoRecord stream written by write_records."""
    for line in source:
        if line.strip():
            yield record_from_dict(json.loads(line))
