"""Membership index of world location names.

The index is a plain hashed set of normalized name strings built from a
city-names CSV (the public world-cities dump, or any CSV with a name
column). Lookup is an O(1) set membership test and is used to prune
non-toponym candidates before any geocoding happens.

Snapshot format (``save_snapshot``/``load_snapshot``), version 1:
a ``TGAZ1\\n`` magic line followed by the zlib-compressed UTF-8 bytes of
all entries, sorted and newline-joined. The format exists only to skip
CSV parsing on startup; the CSV remains the source of truth.
"""

from __future__ import annotations

import csv
import unicodedata
import zlib
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "GazetteerError",
    "GazetteerIndex",
    "build_index",
    "load_snapshot",
    "normalize",
]

_SNAPSHOT_MAGIC = b"TGAZ1\n"

# Column headers (lowercased) accepted as location-name columns. The
# world-cities dump carries both an ASCII-folded "city" column and an
# "accentcity" column; both are indexed to keep recall on ASCII-typed
# profile locations.
_NAME_COLUMNS = ("city", "accentcity", "name", "asciiname", "alternatenames")


class GazetteerError(Exception):
    """Unusable gazetteer input (missing file, no name column)."""


def normalize(phrase: str) -> str:
    """Canonical form used for every index entry and lookup.

    NFC normalization, lowercasing, and whitespace collapse. Diacritics
    are preserved; "  New   York " and "new york" normalize identically.
    """
    if not phrase.isascii():
        phrase = unicodedata.normalize("NFC", phrase)
    return " ".join(phrase.lower().split())


@dataclass(frozen=True)
class GazetteerIndex:
    """Immutable set of normalized location names.

    Safe to share across workers without locking. Every stored entry is
    already normalized, so lookups only pay one `normalize` call.
    """

    entries: frozenset[str]
    rows_read: int = 0

    @property
    def entry_count(self) -> int:
        return len(self.entries)

    def contains(self, phrase: str) -> bool:
        """True iff normalize(phrase) is an indexed name."""
        return normalize(phrase) in self.entries

    def __contains__(self, phrase: str) -> bool:
        return self.contains(phrase)

    def save_snapshot(self, path: str | Path) -> None:
        """Write the versioned binary snapshot described in the module docs."""
        payload = "\n".join(sorted(self.entries)).encode("utf-8")
        data = _SNAPSHOT_MAGIC + zlib.compress(payload, level=6)
        tmp = Path(path).with_suffix(".tmp")
        tmp.write_bytes(data)
        tmp.replace(path)


def build_index(source: str | Path) -> GazetteerIndex:
    """Build the index from a CSV with a header row and a name column.

    Every value found in any recognized name column is normalized and
    added; duplicates collapse. Raises GazetteerError when the file is
    unreadable or no name column exists.
    """
    path = Path(source)
    try:
        fh = open(path, newline="", encoding="utf-8", errors="replace")
    except OSError as exc:
        raise GazetteerError(f"cannot read gazetteer CSV {path}: {exc}") from exc

    entries: set[str] = set()
    rows_read = 0
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise GazetteerError(f"gazetteer CSV {path} is empty") from None
        name_cols = [
            i for i, col in enumerate(header) if col.strip().lower() in _NAME_COLUMNS
        ]
        if not name_cols:
            raise GazetteerError(
                f"gazetteer CSV {path} has no name column (header: {header})"
            )
        for row in reader:
            rows_read += 1
            for i in name_cols:
                if i < len(row):
                    name = normalize(row[i])
                    if name:
                        entries.add(name)
    return GazetteerIndex(entries=frozenset(entries), rows_read=rows_read)


def load_snapshot(path: str | Path) -> GazetteerIndex:
    """Load an index previously written by save_snapshot."""
    data = Path(path).read_bytes()
    if not data.startswith(_SNAPSHOT_MAGIC):
        raise GazetteerError(f"{path} is not a gazetteer snapshot (bad magic)")
    payload = zlib.decompress(data[len(_SNAPSHOT_MAGIC):]).decode("utf-8")
    entries = frozenset(line for line in payload.split("\n") if line)
    return GazetteerIndex(entries=entries)
