"""Ranked inverted index over alias strings.

Maps a surface form to candidate Wikidata IRIs with token-overlap scores.
The index is built once from an alignments file and never mutated, so it is
safe to share across threads.
"""

from __future__ import annotations

import pickle
import re
import sys
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

from .errors import FormatError

INDEX_MAGIC = b"WLIDX\n"
INDEX_VERSION = 1

DEFAULT_ENTITY_K = 50
DEFAULT_PROPERTY_K = 25

_IRI_RE = re.compile(r"^[QP][0-9]+$")


class Alignment(NamedTuple):
    """One (IRI, canonical label, alias) row of background knowledge."""

    iri: str
    canonical_label: str
    alias: str


@dataclass
class Candidate:
    """A retrieved IRI with the alias that matched and its scores.

    `rank` starts at 0 and is incremented by triple verification.
    """

    iri: str
    matched_label: str
    text_score: float
    rank: int = 0

    def iri_suffix(self) -> int:
        return int(self.iri[1:])


def normalize(text: str) -> list[str]:
    """Case-fold, strip diacritics and punctuation, split on whitespace.

    "U.S.A." becomes ["usa"]: punctuation is removed, not turned into
    token boundaries.
    """
    decomposed = unicodedata.normalize("NFKD", text)
    flat = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    tokens = []
    for chunk in flat.casefold().split():
        word = "".join(ch for ch in chunk if ch.isalnum())
        if word:
            tokens.append(word)
    return tokens


def score(query_tokens: list[str], alias_tokens: list[str]) -> float:
    """Token-overlap F1 between two normalized token multisets.

    1.0 for identical multisets, 0.0 when no token is shared.
    """
    if not query_tokens or not alias_tokens:
        return 0.0
    remaining: dict[str, int] = {}
    for tok in query_tokens:
        remaining[tok] = remaining.get(tok, 0) + 1
    common = 0
    for tok in alias_tokens:
        left = remaining.get(tok, 0)
        if left:
            remaining[tok] = left - 1
            common += 1
    if not common:
        return 0.0
    return 2.0 * common / (len(query_tokens) + len(alias_tokens))


class AliasIndex:
    """Immutable inverted index from normalized tokens to alignments."""

    def __init__(self, kind: str, alignments: list[Alignment]):
        if kind not in ("entity", "property"):
            raise ValueError(f"unknown index kind: {kind}")
        self.kind = kind
        self.alignments: list[Alignment] = alignments
        self._norm: list[tuple[str, ...]] = []
        self.token_postings: dict[str, list[int]] = {}
        for aid, alignment in enumerate(alignments):
            tokens = tuple(sys.intern(t) for t in normalize(alignment.alias))
            self._norm.append(tokens)
            for tok in set(tokens):
                self.token_postings.setdefault(tok, []).append(aid)

    @classmethod
    def build(cls, alignments: Iterable[Alignment], kind: str) -> "AliasIndex":
        """Build an index, dropping exact duplicate (iri, alias) pairs."""
        expected_prefix = "Q" if kind == "entity" else "P"
        seen: set[tuple[str, str]] = set()
        rows: list[Alignment] = []
        for alignment in alignments:
            if not _IRI_RE.match(alignment.iri):
                raise FormatError(f"bad IRI in alignment: {alignment.iri!r}")
            if not alignment.iri.startswith(expected_prefix):
                raise FormatError(
                    f"{alignment.iri} does not belong in a {kind} index"
                )
            if not alignment.alias.strip():
                raise FormatError(f"empty alias for {alignment.iri}")
            key = (alignment.iri, alignment.alias)
            if key in seen:
                continue
            seen.add(key)
            rows.append(alignment)
        return cls(kind, rows)

    def query(self, surface: str, k: int) -> list[Candidate]:
        """Return up to k candidates sorted by descending text score.

        Ties break on ascending numeric IRI suffix, then on alignment
        position, which makes the result a stable prefix for any larger k.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        query_tokens = normalize(surface)
        if not query_tokens:
            return []
        counts: dict[str, int] = {}
        for tok in query_tokens:
            counts[tok] = counts.get(tok, 0) + 1
        hit_ids: set[int] = set()
        for tok in counts:
            hit_ids.update(self.token_postings.get(tok, ()))
        qlen = len(query_tokens)
        scored: list[tuple[float, int, int]] = []
        for aid in hit_ids:
            alias_tokens = self._norm[aid]
            remaining = dict(counts)
            common = 0
            for tok in alias_tokens:
                left = remaining.get(tok, 0)
                if left:
                    remaining[tok] = left - 1
                    common += 1
            if not common:
                continue
            value = 2.0 * common / (qlen + len(alias_tokens))
            scored.append((value, int(self.alignments[aid].iri[1:]), aid))
        scored.sort(key=lambda row: (-row[0], row[1], row[2]))
        results = []
        for value, _suffix, aid in scored[:k]:
            alignment = self.alignments[aid]
            results.append(Candidate(alignment.iri, alignment.alias, value))
        return results

    def save(self, path: str | Path) -> None:
        payload = {"kind": self.kind, "alignments": self.alignments}
        with open(path, "wb") as handle:
            handle.write(INDEX_MAGIC)
            handle.write(bytes([INDEX_VERSION]))
            pickle.dump(payload, handle, protocol=pickle.HIGHEST_PROTOCOL)

    def __len__(self) -> int:
        return len(self.alignments)


def read_alignments(path: str | Path) -> list[Alignment]:
    """Read a tab-separated alignments file written by the KB builder."""
    rows = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            rows.append(Alignment(parts[0], parts[1], parts[2]))
    return rows


def build_index(alignments_path: str | Path, kind: str) -> AliasIndex:
    """Build an index straight from an alignments file."""
    return AliasIndex.build(read_alignments(alignments_path), kind)


def load_index(path: str | Path) -> AliasIndex:
    """Load an index previously written by :meth:`AliasIndex.save`."""
    with open(path, "rb") as handle:
        magic = handle.read(len(INDEX_MAGIC))
        if magic != INDEX_MAGIC:
            raise FormatError(f"{path}: not an alias index file")
        version = handle.read(1)
        if not version or version[0] != INDEX_VERSION:
            raise FormatError(f"{path}: unsupported index version")
        payload = pickle.load(handle)
    alignments = [Alignment(*row) for row in payload["alignments"]]
    return AliasIndex(payload["kind"], alignments)
