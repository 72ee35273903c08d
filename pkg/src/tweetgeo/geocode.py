"""Rate-limited, cached client for Nominatim-compatible geocoders.

`search` resolves a place name, `reverse` resolves coordinates; both
go through the shared response cache first, then a per-endpoint rate
limiter and bounded retries. Requests round-robin across configured
endpoints, so N servers at Q requests/second each yield N*Q aggregate.

All network interaction happens through an injectable `transport`
callable, which makes the client fully mockable; the default transport
is a requests session. Responses are cached verbatim, so warm-cache
results are bit-identical to cold-cache results.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Callable

from .cache import ResponseCache, reverse_key, search_key
from .gazetteer import normalize
from .ratelimit import RateLimiter

__all__ = [
    "Endpoint",
    "GeocodeError",
    "GeocodeUnavailable",
    "NominatimClient",
    "PUBLIC_ENDPOINT_QPS",
    "ResolvedPlace",
    "TransportError",
    "map_address",
]

logger = logging.getLogger(__name__)

# The public OpenStreetMap service allows 60 calls/minute; expressed as
# a sliding-window ceiling of one request per second.
PUBLIC_ENDPOINT_QPS = 1.0

# Nominatim address keys per output slot, first present wins.
_STATE_KEYS = ("state", "province", "region")
_COUNTY_KEYS = ("county", "district")
_CITY_KEYS = ("city", "town", "village", "municipality", "hamlet")


class GeocodeError(Exception):
    """Base class for geocoding failures."""


class GeocodeUnavailable(GeocodeError):
    """Query could not be served: retries exhausted, endpoint missing,
    or a previously recorded permanent failure."""


class TransportError(Exception):
    """HTTP-level failure surfaced by a transport callable."""

    def __init__(
        self,
        message: str,
        status: int | None = None,
        retry_after: float | None = None,
    ) -> None:
        super().__init__(message)
        self.status = status
        self.retry_after = retry_after

    @property
    def retryable(self) -> bool:
        return self.status is None or self.status == 429 or self.status >= 500


@dataclass(frozen=True, slots=True)
class ResolvedPlace:
    """A location normalized to four granularity slots.

    A valid place carries at least one of country_code/country/state/
    county/city; a country_code-only place is the coarsest valid form
    (used when only a country is known).
    """

    country_code: str | None = None
    country: str | None = None
    state: str | None = None
    county: str | None = None
    city: str | None = None
    latitude: float | None = None
    longitude: float | None = None
    importance: float | None = None

    def is_valid(self) -> bool:
        return any(
            (self.country_code, self.country, self.state, self.county, self.city)
        )

    def level(self, level: str) -> str | None:
        """Value of one granularity level; country means country_code."""
        if level == "country":
            return self.country_code or self.country
        if level in ("state", "county", "city"):
            return getattr(self, level)
        raise ValueError(f"unknown granularity level: {level!r}")

    def to_dict(self) -> dict:
        out = {}
        for key in (
            "country_code",
            "country",
            "state",
            "county",
            "city",
            "latitude",
            "longitude",
            "importance",
        ):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ResolvedPlace":
        return cls(**data)


def map_address(address: dict) -> ResolvedPlace | None:
    """Map a service address object onto the four granularity slots.

    Values pass through gazetteer normalization so that derived and
    ground-truth places share one naming vocabulary. An address with
    nothing usable maps to None.
    """

    def pick(keys: tuple[str, ...]) -> str | None:
        for key in keys:
            value = address.get(key)
            if isinstance(value, str):
                value = normalize(value)
                if value:
                    return value
        return None

    cc = address.get("country_code")
    country_code = normalize(cc) if isinstance(cc, str) and cc.strip() else None
    place = ResolvedPlace(
        country_code=country_code,
        country=pick(("country",)),
        state=pick(_STATE_KEYS),
        county=pick(_COUNTY_KEYS),
        city=pick(_CITY_KEYS),
    )
    return place if place.is_valid() else None


@dataclass(frozen=True, slots=True)
class Endpoint:
    """One geocoder base URL with its request-per-second ceiling."""

    url: str
    qps: float = PUBLIC_ENDPOINT_QPS


@dataclass
class ClientStats:
    requests: int = 0
    cache_hits: int = 0
    retries: int = 0
    failures: int = 0

    def as_dict(self) -> dict:
        return {
            "requests": self.requests,
            "cache_hits": self.cache_hits,
            "retries": self.retries,
            "failures": self.failures,
        }


def _requests_transport(
    user_agent: str, accept_language: str, timeout: float
) -> Callable[[str, dict], str]:
    import requests

    session = requests.Session()
    session.headers.update(
        {"User-Agent": user_agent, "Accept-Language": accept_language}
    )

    def transport(url: str, params: dict) -> str:
        try:
            response = session.get(url, params=params, timeout=timeout)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        if response.status_code != 200:
            retry_after = None
            header = response.headers.get("Retry-After")
            if header is not None:
                try:
                    retry_after = float(header)
                except ValueError:
                    pass
            raise TransportError(
                f"HTTP {response.status_code} from {url}",
                status=response.status_code,
                retry_after=retry_after,
            )
        return response.text

    return transport


class NominatimClient:
    """Shared, thread-safe geocoding client.

    `transport(url, params) -> body` may be swapped for a recorded-
    fixture stub; everything else (cache, limiter, retry, mapping)
    behaves identically, which is what keeps the test suite hermetic.
    """

    def __init__(
        self,
        endpoints: list[Endpoint],
        cache: ResponseCache | None = None,
        *,
        transport: Callable[[str, dict], str] | None = None,
        user_agent: str = "tweetgeo/0.1",
        accept_language: str = "en",
        retries: int = 3,
        backoff: tuple[float, ...] = (1.0, 4.0, 16.0),
        timeout: float = 10.0,
        max_in_flight: int = 16,
        limiter_slack: float = 0.01,
        search_limit: int = 10,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.endpoints = list(endpoints)
        self.cache = cache if cache is not None else ResponseCache()
        self.stats = ClientStats()
        self._transport = transport or _requests_transport(
            user_agent, accept_language, timeout
        )
        self._retries = retries
        self._backoff = backoff
        self._sleep = sleep
        self._search_limit = search_limit
        self._limiters = [
            RateLimiter(ep.qps, slack=limiter_slack, clock=clock, sleep=sleep)
            for ep in self.endpoints
        ]
        self._rr = 0
        self._lock = threading.Lock()
        self._in_flight = threading.BoundedSemaphore(max_in_flight)
        self._failed: set[str] = set()

    # -- public operations -------------------------------------------------

    def search(self, query: str) -> list[ResolvedPlace]:
        """Forward-geocode a name; empty list means not a resolvable toponym."""
        q = normalize(query)
        if not q:
            raise ValueError("empty search query")
        key = search_key(q)
        body = self._fetch(
            key,
            "/search",
            {
                "q": q,
                "format": "jsonv2",
                "addressdetails": "1",
                "limit": str(self._search_limit),
            },
        )
        return self._parse_search(key, body)

    def reverse(self, latitude: float, longitude: float) -> ResolvedPlace | None:
        """Reverse-geocode coordinates; None when nothing contains them."""
        if not (-90.0 <= latitude <= 90.0 and -180.0 <= longitude <= 180.0):
            raise ValueError(f"coordinates out of range: {latitude}, {longitude}")
        key = reverse_key(latitude, longitude)
        body = self._fetch(
            key,
            "/reverse",
            {
                "lat": f"{latitude:.6f}",
                "lon": f"{longitude:.6f}",
                "format": "jsonv2",
                "addressdetails": "1",
            },
        )
        return self._parse_reverse(key, body)

    # -- internals -----------------------------------------------------------

    def _fetch(self, key: str, path: str, params: dict) -> str:
        cached = self.cache.get(key)
        if cached is not None:
            with self._lock:
                self.stats.cache_hits += 1
            return cached
        with self._lock:
            if key in self._failed:
                raise GeocodeUnavailable(f"previously failed: {key}")
        body = self._request(key, path, params)
        return body

    def _request(self, key: str, path: str, params: dict) -> str:
        if not self.endpoints:
            raise GeocodeUnavailable(
                f"cache miss for {key} and no endpoints configured"
            )
        attempts = 1 + self._retries
        for attempt in range(attempts):
            index = self._next_endpoint()
            endpoint = self.endpoints[index]
            self._limiters[index].acquire()
            try:
                with self._in_flight:
                    with self._lock:
                        self.stats.requests += 1
                    return self._transport(endpoint.url.rstrip("/") + path, params)
            except TransportError as exc:
                if not exc.retryable or attempt == attempts - 1:
                    self._mark_failed(key, str(exc))
                    raise GeocodeUnavailable(f"{key}: {exc}") from exc
                with self._lock:
                    self.stats.retries += 1
                delay = self._backoff[min(attempt, len(self._backoff) - 1)]
                if exc.retry_after is not None:
                    delay = max(delay, exc.retry_after)
                self._sleep(delay)
        raise GeocodeUnavailable(key)  # unreachable

    def _next_endpoint(self) -> int:
        with self._lock:
            index = self._rr % len(self.endpoints)
            self._rr += 1
            return index

    def _mark_failed(self, key: str, reason: str) -> None:
        logger.warning("geocode failure for %s: %s", key, reason)
        with self._lock:
            self._failed.add(key)
            self.stats.failures += 1

    def _parse_search(self, key: str, body: str) -> list[ResolvedPlace]:
        try:
            results = json.loads(body)
            if not isinstance(results, list):
                raise ValueError("search response is not a list")
        except (json.JSONDecodeError, ValueError) as exc:
            self._mark_failed(key, f"malformed response: {exc}")
            raise GeocodeUnavailable(f"{key}: malformed response") from exc
        self.cache.put(key, body)
        places = []
        for item in results:
            if not isinstance(item, dict):
                continue
            place = self._to_place(item)
            if place is not None:
                places.append(place)
        return places

    def _parse_reverse(self, key: str, body: str) -> ResolvedPlace | None:
        try:
            result = json.loads(body)
            if not isinstance(result, dict):
                raise ValueError("reverse response is not an object")
        except (json.JSONDecodeError, ValueError) as exc:
            self._mark_failed(key, f"malformed response: {exc}")
            raise GeocodeUnavailable(f"{key}: malformed response") from exc
        self.cache.put(key, body)
        if "error" in result:
            return None
        return self._to_place(result)

    @staticmethod
    def _to_place(item: dict) -> ResolvedPlace | None:
        address = item.get("address")
        if not isinstance(address, dict):
            return None
        place = map_address(address)
        if place is None:
            return None
        lat = lon = None
        try:
            if "lat" in item and "lon" in item:
                lat, lon = float(item["lat"]), float(item["lon"])
        except (TypeError, ValueError):
            lat = lon = None
        importance = item.get("importance")
        if not isinstance(importance, (int, float)):
            importance = None
        return ResolvedPlace(
            country_code=place.country_code,
            country=place.country,
            state=place.state,
            county=place.county,
            city=place.city,
            latitude=lat,
            longitude=lon,
            importance=float(importance) if importance is not None else None,
        )
