"""Persistent key-value cache for geocoder response bodies.

On-disk layout is append-only JSONL: one ``{"key": ..., "response": ...}``
object per line, where `response` is the verbatim body string returned
by the service. A half-written trailing line (crash mid-append) is
dropped on load; later lines win on duplicate keys. Recorded test
fixtures use exactly the same layout, so a fixture file is a valid
pre-warmed cache.

Keys are built by `search_key`/`reverse_key`: the normalized query
string, or coordinates rounded to 4 decimal places (~11 m, far below
the granularity of any output slot).
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from .gazetteer import normalize

__all__ = ["ResponseCache", "reverse_key", "search_key"]


def search_key(query: str) -> str:
    return f"search:{normalize(query)}"


def reverse_key(latitude: float, longitude: float) -> str:
    return f"reverse:{latitude:.4f},{longitude:.4f}"


class ResponseCache:
    """Append-safe response store shared by all workers.

    With `path=None` the cache is memory-only. Writes take one lock and
    one appended line, so concurrent puts never interleave bytes.
    """

    def __init__(self, path: str | Path | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self._data: dict[str, str] = {}
        self._lock = threading.Lock()
        self._fh = None
        if self.path is not None:
            self._load()
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8")

    def _load(self) -> None:
        if self.path is None or not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError:
                    continue  # truncated trailing line from a crash
                if isinstance(entry, dict) and "key" in entry and "response" in entry:
                    self._data[entry["key"]] = entry["response"]

    def get(self, key: str) -> str | None:
        with self._lock:
            return self._data.get(key)

    def put(self, key: str, response: str) -> None:
        with self._lock:
            if self._data.get(key) == response:
                return
            self._data[key] = response
            if self._fh is not None:
                line = json.dumps(
                    {"key": key, "response": response}, ensure_ascii=False
                )
                self._fh.write(line + "\n")
                self._fh.flush()

    def __contains__(self, key: str) -> bool:
        with self._lock:
            return key in self._data

    def __len__(self) -> int:
        with self._lock:
            return len(self._data)

    def keys(self) -> list[str]:
        with self._lock:
            return list(self._data)

    def compact(self) -> int:
        """Rewrite the file dropping superseded duplicate lines.

        Returns the number of live entries. No-op for memory caches.
        """
        with self._lock:
            if self.path is None:
                return len(self._data)
            tmp = self.path.with_suffix(".compact.tmp")
            with open(tmp, "w", encoding="utf-8") as out:
                for key, response in self._data.items():
                    out.write(
                        json.dumps(
                            {"key": key, "response": response}, ensure_ascii=False
                        )
                        + "\n"
                    )
                out.flush()
                os.fsync(out.fileno())
            if self._fh is not None:
                self._fh.close()
            tmp.replace(self.path)
            self._fh = open(self.path, "a", encoding="utf-8")
            return len(self._data)

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None
