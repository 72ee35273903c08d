"""Corpus description reports: volumes, languages, places, users.

`summarize` makes one pass over (tweet, record) pairs and fills a
mergeable CorpusSummary; shards summarized independently and merged
equal one pass over the concatenation, which is what makes the whole
thing parallelizable. `write_reports` emits every report as plot-ready
CSV plus a manifest.json naming the files.

Country/city attribution takes each record's highest-priority non-empty
slot by default (geo, then place, then user location, then tweet
content); pass `source` to pin a single slot instead.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from .ingest import RawTweet
from .resolve import GeoRecord, SOURCE_PRIORITY

__all__ = [
    "CorpusSummary",
    "DEFAULT_CITY_THRESHOLDS",
    "DEFAULT_COUNTRY_THRESHOLDS",
    "bucket_table",
    "summarize",
    "top_n_series",
    "write_reports",
]

# Cumulative ">threshold" rows as reported for countries and cities.
DEFAULT_COUNTRY_THRESHOLDS = (10_000_000, 1_000_000, 500_000, 100_000)
DEFAULT_CITY_THRESHOLDS = (1_000_000, 500_000, 100_000, 50_000)

UNDETERMINED_LANGUAGE = "und"


def _bump(counts: dict, key, by: int = 1) -> None:
    counts[key] = counts.get(key, 0) + by


def _attributed(record: GeoRecord, source: str):
    if source == "priority":
        return record.best_place()
    if source not in SOURCE_PRIORITY:
        raise ValueError(f"unknown attribution source: {source!r}")
    return getattr(record, source)


@dataclass
class CorpusSummary:
    """One-pass counters over a corpus shard; merge() combines shards."""

    total_tweets: int = 0
    daily_counts: dict[str, int] = field(default_factory=dict)
    language_counts: dict[str, int] = field(default_factory=dict)
    country_counts: dict[str, int] = field(default_factory=dict)
    city_counts: dict[str, int] = field(default_factory=dict)
    tweets_with_geo: int = 0
    tweets_with_place: int = 0
    tweets_with_user_location: int = 0
    tweets_with_tweet_locations: int = 0

    # User-id sets back the unique-user counters and make merging exact.
    user_ids: set[int] = field(default_factory=set)
    users_geo: set[int] = field(default_factory=set)
    users_place: set[int] = field(default_factory=set)
    users_location: set[int] = field(default_factory=set)
    verified_ids: set[int] = field(default_factory=set)
    verified_geo: set[int] = field(default_factory=set)
    verified_place: set[int] = field(default_factory=set)
    verified_location: set[int] = field(default_factory=set)

    @property
    def unique_users(self) -> int:
        return len(self.user_ids)

    @property
    def users_with_geo(self) -> int:
        return len(self.users_geo)

    @property
    def users_with_place(self) -> int:
        return len(self.users_place)

    @property
    def users_with_location_value(self) -> int:
        return len(self.users_location)

    @property
    def verified_users(self) -> int:
        return len(self.verified_ids)

    @property
    def verified_users_with_geo(self) -> int:
        return len(self.verified_geo)

    @property
    def verified_users_with_place(self) -> int:
        return len(self.verified_place)

    @property
    def verified_users_with_location_value(self) -> int:
        return len(self.verified_location)

    def add(self, tweet: RawTweet, record: GeoRecord, source: str = "priority") -> None:
        self.total_tweets += 1
        _bump(self.daily_counts, tweet.created_at.date().isoformat())
        _bump(self.language_counts, tweet.language or UNDETERMINED_LANGUAGE)

        place = _attributed(record, source)
        if place is not None:
            country = place.country_code or place.country
            if country:
                _bump(self.country_counts, country)
            if place.city:
                _bump(self.city_counts, place.city)

        if record.geo is not None:
            self.tweets_with_geo += 1
            self.users_geo.add(tweet.user_id)
            if tweet.user_verified:
                self.verified_geo.add(tweet.user_id)
        if record.place is not None:
            self.tweets_with_place += 1
            self.users_place.add(tweet.user_id)
            if tweet.user_verified:
                self.verified_place.add(tweet.user_id)
        if record.user_location is not None:
            self.tweets_with_user_location += 1
            self.users_location.add(tweet.user_id)
            if tweet.user_verified:
                self.verified_location.add(tweet.user_id)
        if record.tweet_locations is not None:
            self.tweets_with_tweet_locations += 1

        self.user_ids.add(tweet.user_id)
        if tweet.user_verified:
            self.verified_ids.add(tweet.user_id)

    def merge(self, other: "CorpusSummary") -> "CorpusSummary":
        """Fold another shard into this summary; returns self."""
        self.total_tweets += other.total_tweets
        for mine, theirs in (
            (self.daily_counts, other.daily_counts),
            (self.language_counts, other.language_counts),
            (self.country_counts, other.country_counts),
            (self.city_counts, other.city_counts),
        ):
            for key, value in theirs.items():
                _bump(mine, key, value)
        self.tweets_with_geo += other.tweets_with_geo
        self.tweets_with_place += other.tweets_with_place
        self.tweets_with_user_location += other.tweets_with_user_location
        self.tweets_with_tweet_locations += other.tweets_with_tweet_locations
        self.user_ids |= other.user_ids
        self.users_geo |= other.users_geo
        self.users_place |= other.users_place
        self.users_location |= other.users_location
        self.verified_ids |= other.verified_ids
        self.verified_geo |= other.verified_geo
        self.verified_place |= other.verified_place
        self.verified_location |= other.verified_location
        return self

    def as_dict(self) -> dict:
        """Counter snapshot (no id sets); used for reports and equality."""
        return {
            "total_tweets": self.total_tweets,
            "daily_counts": dict(sorted(self.daily_counts.items())),
            "language_counts": dict(sorted(self.language_counts.items())),
            "country_counts": dict(sorted(self.country_counts.items())),
            "city_counts": dict(sorted(self.city_counts.items())),
            "tweets_with_geo": self.tweets_with_geo,
            "tweets_with_place": self.tweets_with_place,
            "tweets_with_user_location": self.tweets_with_user_location,
            "tweets_with_tweet_locations": self.tweets_with_tweet_locations,
            "unique_users": self.unique_users,
            "users_with_geo": self.users_with_geo,
            "users_with_place": self.users_with_place,
            "users_with_location_value": self.users_with_location_value,
            "verified_users": self.verified_users,
            "verified_users_with_geo": self.verified_users_with_geo,
            "verified_users_with_place": self.verified_users_with_place,
            "verified_users_with_location_value": self.verified_users_with_location_value,
        }


def summarize(
    records: Iterable[tuple[RawTweet, GeoRecord]], source: str = "priority"
) -> CorpusSummary:
    """Single-pass summary over (tweet, record) pairs."""
    summary = CorpusSummary()
    for tweet, record in records:
        summary.add(tweet, record, source)
    return summary


def _human(n: int) -> str:
    for unit, label in ((1_000_000, "M"), (1_000, "K")):
        if n >= unit and n % unit == 0:
            return f"{n // unit}{label}"
    return str(n)


def bucket_table(
    counts: dict[str, int], thresholds: Iterable[int]
) -> list[tuple[str, int]]:
    """Cumulative ">threshold" rows: how many entities exceed each.

    An entity above several thresholds appears in every one of those
    rows. Thresholds must be strictly descending.
    """
    levels = list(thresholds)
    if any(b <= a for a, b in zip(levels[1:], levels)):
        raise ValueError(f"thresholds must be strictly descending: {levels}")
    return [
        (f">{_human(t)}", sum(1 for v in counts.values() if v > t)) for t in levels
    ]


def top_n_series(
    records: Iterable[tuple[RawTweet, GeoRecord]],
    key: str,
    n: int,
    source: str = "priority",
) -> list[list[str]]:
    """Daily time series for the n largest keys, as CSV-ready rows.

    `key` is country, city, or language. The first row is the header
    ("date" plus the keys ordered by total, largest first).
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if key not in ("country", "city", "language"):
        raise ValueError(f"unknown series key: {key!r}")
    daily: dict[str, dict[str, int]] = {}
    totals: dict[str, int] = {}
    for tweet, record in records:
        if key == "language":
            value: str | None = tweet.language or UNDETERMINED_LANGUAGE
        else:
            place = _attributed(record, source)
            if place is None:
                continue
            if key == "country":
                value = place.country_code or place.country
            else:
                value = place.city
        if not value:
            continue
        date = tweet.created_at.date().isoformat()
        _bump(daily.setdefault(value, {}), date)
        _bump(totals, value)

    top = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))[:n]
    keys = [k for k, _ in top]
    dates = sorted({d for series in daily.values() for d in series})
    rows = [["date"] + keys]
    for date in dates:
        rows.append([date] + [str(daily[k].get(date, 0)) for k in keys])
    return rows


def _write_csv(path: Path, header: Iterable[str], rows: Iterable[Iterable]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(list(row))
            count += 1
    return count


def _sorted_counts(counts: dict[str, int]) -> list[tuple[str, int]]:
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def write_reports(
    records: Iterable[tuple[RawTweet, GeoRecord]],
    out_dir: str | Path,
    *,
    source: str = "priority",
    country_thresholds: Iterable[int] = DEFAULT_COUNTRY_THRESHOLDS,
    city_thresholds: Iterable[int] = DEFAULT_CITY_THRESHOLDS,
    top_countries: int = 15,
    top_cities: int = 15,
    top_languages: int = 20,
) -> dict:
    """Emit every report CSV plus manifest.json; returns the manifest.

    Streams the input once; memory use scales with distinct keys, not
    corpus size.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    summary = CorpusSummary()
    daily_by: dict[str, dict[str, dict[str, int]]] = {
        "country": {},
        "city": {},
        "language": {},
    }
    for tweet, record in records:
        summary.add(tweet, record, source)
        date = tweet.created_at.date().isoformat()
        _bump(
            daily_by["language"].setdefault(
                tweet.language or UNDETERMINED_LANGUAGE, {}
            ),
            date,
        )
        place = _attributed(record, source)
        if place is not None:
            country = place.country_code or place.country
            if country:
                _bump(daily_by["country"].setdefault(country, {}), date)
            if place.city:
                _bump(daily_by["city"].setdefault(place.city, {}), date)

    files: dict[str, int] = {}

    files["daily_counts.csv"] = _write_csv(
        out / "daily_counts.csv",
        ("date", "tweets"),
        sorted(summary.daily_counts.items()),
    )
    files["language_counts.csv"] = _write_csv(
        out / "language_counts.csv",
        ("language", "tweets"),
        _sorted_counts(summary.language_counts),
    )
    files["country_counts.csv"] = _write_csv(
        out / "country_counts.csv",
        ("country", "tweets"),
        _sorted_counts(summary.country_counts),
    )
    files["city_counts.csv"] = _write_csv(
        out / "city_counts.csv",
        ("city", "tweets"),
        _sorted_counts(summary.city_counts),
    )
    files["geolocation_sources.csv"] = _write_csv(
        out / "geolocation_sources.csv",
        ("source", "tweets"),
        [
            ("geo_coordinates", summary.tweets_with_geo),
            ("place", summary.tweets_with_place),
            ("user_location", summary.tweets_with_user_location),
            ("tweet_text", summary.tweets_with_tweet_locations),
        ],
    )
    files["country_buckets.csv"] = _write_csv(
        out / "country_buckets.csv",
        ("bucket", "countries"),
        bucket_table(summary.country_counts, country_thresholds),
    )
    files["city_buckets.csv"] = _write_csv(
        out / "city_buckets.csv",
        ("bucket", "cities"),
        bucket_table(summary.city_counts, city_thresholds),
    )
    files["user_stats.csv"] = _write_csv(
        out / "user_stats.csv",
        ("metric", "users"),
        [
            ("unique_users", summary.unique_users),
            ("users_with_geo_tweet", summary.users_with_geo),
            ("users_with_place_tweet", summary.users_with_place),
            ("users_with_location_value", summary.users_with_location_value),
        ],
    )
    files["verified_user_stats.csv"] = _write_csv(
        out / "verified_user_stats.csv",
        ("metric", "users"),
        [
            ("verified_users", summary.verified_users),
            ("verified_users_with_geo_tweet", summary.verified_users_with_geo),
            ("verified_users_with_place_tweet", summary.verified_users_with_place),
            (
                "verified_users_with_location_value",
                summary.verified_users_with_location_value,
            ),
        ],
    )

    for name, key, n in (
        ("top_countries_daily.csv", "country", top_countries),
        ("top_cities_daily.csv", "city", top_cities),
        ("top_languages_daily.csv", "language", top_languages),
    ):
        totals = {k: sum(v.values()) for k, v in daily_by[key].items()}
        top = [
            k for k, _ in sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))[:n]
        ]
        dates = sorted({d for series in daily_by[key].values() for d in series})
        rows = [
            [date] + [str(daily_by[key][k].get(date, 0)) for k in top]
            for date in dates
        ]
        files[name] = _write_csv(out / name, ["date"] + top, rows)

    manifest = {
        "schema_version": 1,
        "attribution_source": source,
        "total_tweets": summary.total_tweets,
        "files": files,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
