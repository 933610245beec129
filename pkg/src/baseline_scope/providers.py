"""Citation-count providers and the on-disk response cache.

A provider answers (title, year) -> global citation count or None. The
file-backed stub serves tests and offline runs; the HTTP client targets a
scholarly-graph API. Responses (including misses) are cached on disk keyed
by normalized title+year so reruns never re-query the provider.
"""

from __future__ import annotations

import dataclasses
import json
import os
import threading
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Protocol, Sequence

from .corpus import Reference

CACHE_ENV_VAR = "BASELINE_SCOPE_CACHE"
CACHE_FILENAME = "citation_counts.tsv"
_MISS = "-"


class ProviderError(Exception):
    """The provider could not be reached or gave an unusable answer."""


def normalize_title_key(title: str, year: int | None = None) -> str:
    words = "".join(ch if ch.isalnum() else " " for ch in title.lower()).split()
    return " ".join(words) + "|" + (str(year) if year is not None else _MISS)


class CitationCountProvider(Protocol):
    def lookup(self, title: str, year: int | None) -> int | None: ...


class FileBackedProvider:
    """Stub provider backed by a {title: count} mapping (dict or JSON file)."""

    def __init__(self, source: dict | str | Path):
        if not isinstance(source, dict):
            source = json.loads(Path(source).read_text(encoding="utf-8"))
        self._counts = {normalize_title_key(title).split("|")[0]: int(count)
                        for title, count in source.items()}
        self.calls = 0

    def lookup(self, title: str, year: int | None) -> int | None:
        self.calls += 1
        return self._counts.get(normalize_title_key(title).split("|")[0])


class HttpCitationProvider:
    """Minimal client for a scholarly-graph paper-search endpoint.

    Expects a JSON response with a ``data`` list whose first entry carries a
    ``citationCount`` field (Semantic Scholar Graph API shape).
    """

    def __init__(self, base_url: str, api_key: str | None = None, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout
        self.calls = 0

    def lookup(self, title: str, year: int | None) -> int | None:
        self.calls += 1
        params = {"query": title, "fields": "title,citationCount", "limit": "1"}
        if year is not None:
            params["year"] = str(year)
        url = f"{self.base_url}?{urllib.parse.urlencode(params)}"
        request = urllib.request.Request(url)
        if self.api_key:
            request.add_header("x-api-key", self.api_key)
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                payload = json.loads(response.read().decode("utf-8"))
        except Exception as exc:
            raise ProviderError(f"citation-count request failed: {exc}") from exc
        matches = payload.get("data") or []
        if not matches:
            return None
        count = matches[0].get("citationCount")
        return int(count) if count is not None else None


def default_cache_dir() -> Path:
    override = os.environ.get(CACHE_ENV_VAR)
    if override:
        return Path(override)
    return Path.home() / ".cache" / "baseline-scope"


class CountCache:
    """Append-only TSV cache: key, count (or '-' for a miss), timestamp."""

    def __init__(self, cache_dir: str | Path | None = None):
        self.path = Path(cache_dir) if cache_dir is not None else default_cache_dir()
        self.file = self.path / CACHE_FILENAME
        self._lock = threading.Lock()
        self._entries: dict[str, int | None] = {}
        if self.file.exists():
            for line in self.file.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                key, value, _timestamp = line.split("\t")
                self._entries[key] = None if value == _MISS else int(value)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def get(self, key: str) -> int | None:
        return self._entries[key]

    def put(self, key: str, count: int | None) -> None:
        with self._lock:
            self._entries[key] = count
            self.path.mkdir(parents=True, exist_ok=True)
            stamp = datetime.now(timezone.utc).isoformat()
            value = _MISS if count is None else str(count)
            with self.file.open("a", encoding="utf-8") as handle:
                handle.write(f"{key}\t{value}\t{stamp}\n")


@dataclass
class FetchReport:
    resolved: int = 0
    from_cache: int = 0
    unresolved: list[tuple[str, str]] = field(default_factory=list)  # (ref_id, reason)
    failures: list[tuple[str, str]] = field(default_factory=list)  # (ref_id, error)

    def to_dict(self) -> dict:
        return {
            "resolved": self.resolved,
            "from_cache": self.from_cache,
            "unresolved": [list(item) for item in self.unresolved],
            "failures": [list(item) for item in self.failures],
        }


def fetch_citation_counts(refs: Sequence[Reference], provider: CitationCountProvider,
                          cache: CountCache | None = None) -> tuple[list[Reference], FetchReport]:
    """Fill citation_count for resolvable references.

    Provider failures are soft: they land in the report and the pipeline
    continues with the count left absent.
    """
    if cache is None:
        cache = CountCache()
    report = FetchReport()
    out = []
    for ref in refs:
        if ref.citation_count is not None:
            out.append(ref)
            continue
        if not ref.cited_title:
            report.unresolved.append((ref.ref_id, "no cited title"))
            out.append(ref)
            continue
        key = normalize_title_key(ref.cited_title, ref.cited_year)
        if key in cache:
            count = cache.get(key)
            report.from_cache += 1
        else:
            try:
                count = provider.lookup(ref.cited_title, ref.cited_year)
            except ProviderError as exc:
                report.failures.append((ref.ref_id, str(exc)))
                out.append(ref)
                continue
            cache.put(key, count)
        if count is None:
            report.unresolved.append((ref.ref_id, "not found"))
            out.append(ref)
        else:
            report.resolved += 1
            out.append(dataclasses.replace(ref, citation_count=count))
    return out, report
