"""Toponym candidate extraction from free-form tweet text.

Three pure stages, composed by `extract_toponyms`:

1. `preprocess`   - whitespace tokenization; URLs, "RT", @-mentions,
                    numbers and special-character tokens become the
                    literal ``<noise>`` token; hashtags are unwrapped;
                    surviving tokens are lowercased.
2. `generate_candidates` - all non-noise uni-grams plus adjacent
                    bi-grams whose both members are non-noise.
3. `prune`        - drop stop-word phrases and anything missing from
                    the gazetteer index.

Stop-word filtering runs on whole phrases after bi-gram formation, so
"new york" survives even when "new" is a stop-word. All stages are
deterministic and safe to call from any number of workers.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from pathlib import Path

from .gazetteer import GazetteerIndex, normalize

__all__ = [
    "NOISE",
    "ToponymCandidate",
    "TokenStream",
    "default_stopwords",
    "extract_toponyms",
    "generate_candidates",
    "load_stopwords",
    "preprocess",
]

NOISE = "<noise>"

TokenStream = list[str]

# Punctuation stripped from token edges. '@' and '#' are kept at the
# front so mentions and hashtags are still recognizable after the strip.
_EDGE_CHARS = string.punctuation + "¡¿‘’“”–—…«»。、！？，"
_LEAD_CHARS = _EDGE_CHARS.replace("@", "").replace("#", "")

_URL_PREFIXES = ("http://", "https://", "www.")

# Tokens made only of digits plus sign/separator characters count as
# numbers ("2020", "19:30", "1,5", "50%", "1/2").
_NUMERIC_RE = re.compile(r"[0-9+\-.,:/%]+")


@dataclass(frozen=True, slots=True)
class ToponymCandidate:
    """A normalized uni-gram or bi-gram with its first-token position."""

    phrase: str
    arity: int
    position: int


def _classify_token(raw: str, unwrap_hashtags: bool) -> str:
    """Map one whitespace token to its cleaned form or NOISE."""
    if raw.lower().startswith(_URL_PREFIXES):
        return NOISE
    core = raw.lstrip(_LEAD_CHARS).rstrip(_EDGE_CHARS)
    if not core:
        return NOISE
    if core == "RT":  # platform retweet marker, case-sensitive
        return NOISE
    if core.startswith("@"):
        return NOISE
    if core.startswith("#"):
        if not unwrap_hashtags:
            return NOISE
        core = core.lstrip("#")
        if not core:
            return NOISE
    if _NUMERIC_RE.fullmatch(core) and any(c.isdigit() for c in core):
        return NOISE
    if not any(c.isalnum() for c in core):
        return NOISE
    return normalize(core)


def preprocess(text: str, *, unwrap_hashtags: bool = True) -> TokenStream:
    """Tokenize text, replacing non-word tokens with ``<noise>``.

    `unwrap_hashtags=True` (default) keeps the body of "#Italy" as
    "italy"; with False, hashtag tokens become noise like any other
    special-character token.
    """
    return [_classify_token(tok, unwrap_hashtags) for tok in text.split()]


def generate_candidates(tokens: TokenStream) -> list[ToponymCandidate]:
    """Uni-grams plus adjacent bi-grams, skipping anything with noise.

    Duplicated phrases are kept (their positions differ); output order
    follows token positions.
    """
    out: list[ToponymCandidate] = []
    n = len(tokens)
    for i, tok in enumerate(tokens):
        if tok == NOISE:
            continue
        out.append(ToponymCandidate(tok, 1, i))
        if i + 1 < n and tokens[i + 1] != NOISE:
            out.append(ToponymCandidate(f"{tok} {tokens[i + 1]}", 2, i))
    return out


def prune(
    candidates: list[ToponymCandidate],
    index: GazetteerIndex,
    stopwords: frozenset[str] | set[str],
) -> list[ToponymCandidate]:
    """Keep candidates that are not stop-word phrases and are indexed.

    The stop-word test covers the whole phrase, so a bi-gram like
    "new york" passes even though its first word alone would not.
    """
    return [
        c
        for c in candidates
        if c.phrase not in stopwords and c.phrase in index.entries
    ]


def extract_toponyms(
    text: str,
    index: GazetteerIndex,
    stopwords: frozenset[str] | set[str],
    *,
    unwrap_hashtags: bool = True,
) -> list[ToponymCandidate]:
    """Full extraction: preprocess, candidate generation, pruning."""
    tokens = preprocess(text, unwrap_hashtags=unwrap_hashtags)
    return prune(generate_candidates(tokens), index, stopwords)


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stop-word list, one lowercase entry per line."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word and not word.startswith("#"):
                words.add(word.lower())
    return frozenset(words)


def default_stopwords() -> frozenset[str]:
    """The bundled English stop-word list."""
    return load_stopwords(Path(__file__).parent / "data" / "stopwords_en.txt")
