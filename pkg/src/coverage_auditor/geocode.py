"""Placename-to-country resolution cascade with persistent caching.

Stages, in order: local knowledge-base lookup, remote geocoder query,
whole-text country inference. The first stage that succeeds wins; every
outcome (including misses) is cached so re-runs are cheap and hermetic.
"""

from __future__ import annotations

import json
import logging
import re
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Protocol

from .countries import CountryCode, CountryRegistry, normalize_name
from .places import PlaceMention, ResolverStage

log = logging.getLogger(__name__)

DEFAULT_ENDPOINT_ENV = "COVAUD_GEOCODER_URL"
DEFAULT_ENDPOINT = "https://nominatim.openstreetmap.org/search"


@dataclass
class GeocoderResult:
    display_name: str
    iso3: str | None
    importance: float


class GeocoderClient(Protocol):
    def geocode(self, query: str) -> list[GeocoderResult]: ...


# sentence, title -> CountryCode or None
CountryInferencer = Callable[[str, str], CountryCode | None]


# --- knowledge base ----------------------------------------------------------

class KnowledgeBase:
    """Offline snapshot standing in for a live entity-database query.

    Entries whose has_enwiki flag is false never resolve: a place without
    an English encyclopedia page gives editors nothing to link to.
    """

    def __init__(self, entries: dict[str, tuple[str, bool]], registry: CountryRegistry):
        self._entries = entries
        self._registry = registry

    @classmethod
    def load(cls, registry: CountryRegistry, path: Path | None = None) -> "KnowledgeBase":
        path = path or Path(str(resources.files("coverage_auditor")
                                .joinpath("data", "kb.tsv")))
        entries: dict[str, tuple[str, bool]] = {}
        for country in registry:
            entries[normalize_name(country.display_name)] = (country.iso3, True)
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                line = raw.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                name, iso3, flag = (f.strip() for f in line.split("\t"))
                entries[normalize_name(name)] = (iso3, flag.lower() == "true")
        return cls(entries, registry)

    def lookup(self, placename: str) -> CountryCode | None:
        entry = self._entries.get(normalize_name(placename))
        if entry is None:
            return None
        iso3, has_enwiki = entry
        if not has_enwiki:
            return None
        return self._registry.get_optional(iso3)


def kb_lookup(placename: str, kb: KnowledgeBase) -> CountryCode | None:
    """Exact (case-normalized) lookup in the local knowledge base."""
    return kb.lookup(placename)


# --- remote geocoding --------------------------------------------------------

class ReplayGeocoderClient:
    """Serves recorded responses from a JSONL file; unknown queries get []."""

    def __init__(self, path: Path):
        self._responses: dict[str, list[GeocoderResult]] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                self._responses[normalize_name(obj["query"])] = [
                    GeocoderResult(r["display_name"], r.get("iso3"),
                                   float(r.get("importance", 0.0)))
                    for r in obj["results"]
                ]

    def geocode(self, query: str) -> list[GeocoderResult]:
        return self._responses.get(normalize_name(query), [])


class LiveGeocoderClient:
    """HTTP client for a Nominatim-style JSON endpoint.

    Enforces a bounded number of in-flight requests and a global minimum
    inter-request delay.
    """

    def __init__(self, endpoint: str | None = None, min_delay_ms: int = 1000,
                 max_inflight: int = 2, timeout: float = 10.0):
        import os
        self.endpoint = (endpoint or os.environ.get(DEFAULT_ENDPOINT_ENV)
                         or DEFAULT_ENDPOINT)
        self.min_delay = min_delay_ms / 1000.0
        self.timeout = timeout
        self._gate = threading.Semaphore(max_inflight)
        self._lock = threading.Lock()
        self._last_request = 0.0

    def geocode(self, query: str) -> list[GeocoderResult]:
        import requests

        with self._gate:
            with self._lock:
                wait = self._last_request + self.min_delay - time.monotonic()
                if wait > 0:
                    time.sleep(wait)
                self._last_request = time.monotonic()
            resp = requests.get(
                self.endpoint,
                params={"q": query, "format": "jsonv2", "addressdetails": 1},
                headers={"User-Agent": "coverage-auditor/0.1"},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            results = []
            for item in resp.json():
                iso3 = _country_code_from_payload(item)
                results.append(GeocoderResult(
                    display_name=item.get("display_name", ""),
                    iso3=iso3,
                    importance=float(item.get("importance", 0.0)),
                ))
            return results


def _country_code_from_payload(item: dict) -> str | None:
    address = item.get("address") or {}
    code = address.get("country_code") or item.get("country_code")
    if not code:
        return None
    return _ISO2_TO_ISO3.get(code.upper())


# Minimal alpha-2 -> alpha-3 map for the live client; the replay client
# carries iso3 directly.
_ISO2_TO_ISO3 = {
    "US": "USA", "GB": "GBR", "CA": "CAN", "JP": "JPN", "CN": "CHN",
    "IN": "IND", "PK": "PAK", "AU": "AUS", "BR": "BRA", "MX": "MEX",
    "FR": "FRA", "DE": "DEU", "IT": "ITA", "ES": "ESP", "NL": "NLD",
    "SD": "SDN", "HT": "HTI", "CU": "CUB", "AO": "AGO", "IR": "IRN",
    "NG": "NGA", "KE": "KEN", "ZA": "ZAF", "EG": "EGY", "ID": "IDN",
    "PH": "PHL", "VN": "VNM", "TH": "THA", "BD": "BGD", "NP": "NPL",
    "LK": "LKA", "MM": "MMR", "RU": "RUS", "TR": "TUR", "PE": "PER",
    "CO": "COL", "AR": "ARG", "CL": "CHL", "NZ": "NZL",
}


def remote_geocode(placename: str, client: GeocoderClient,
                   retries: int = 2, backoff: float = 0.2,
                   registry: CountryRegistry | None = None) -> CountryCode | None:
    """One query; returns the most important result carrying a country.

    Importance ties break lexicographically on display_name. Network
    failures are retried up to ``retries`` times before skipping the stage.
    """
    from .countries import default_registry

    registry = registry or default_registry()
    attempt = 0
    while True:
        try:
            results = client.geocode(placename)
            break
        except Exception as exc:
            attempt += 1
            if attempt > retries:
                log.warning("geocoder failed for %r after %d attempts: %s",
                            placename, attempt, exc)
                return None
            time.sleep(backoff * attempt)

    with_country = [r for r in results if r.iso3]
    if not with_country:
        return None
    best = min(with_country, key=lambda r: (-r.importance, r.display_name))
    return registry.get_optional(best.iso3)


# --- whole-text inference ----------------------------------------------------

class AliasScanInferencer:
    """Scan sentence then title for country names/demonyms; first hit wins.

    Longer aliases take precedence at equal positions, so "South Sudan"
    is never read as "Sudan".
    """

    def __init__(self, registry: CountryRegistry):
        self._entries = [
            (re.compile(rf"\b{re.escape(alias)}\b"), len(alias), country)
            for alias, country in registry.alias_items()
        ]

    def __call__(self, sentence: str, title: str) -> CountryCode | None:
        for text in (sentence, title):
            hit = self._scan(normalize_name(text))
            if hit is not None:
                return hit
        return None

    def _scan(self, text: str) -> CountryCode | None:
        best: tuple[int, int, CountryCode] | None = None
        for pattern, length, country in self._entries:
            m = pattern.search(text)
            if m and (best is None or (m.start(), -length) < (best[0], -best[1])):
                best = (m.start(), length, country)
        return best[2] if best else None


def context_infer(sentence: str, title: str,
                  inferencer: CountryInferencer) -> CountryCode | None:
    """Infer a country from the candidate's whole text."""
    return inferencer(sentence, title)


# --- cache and cascade -------------------------------------------------------

@dataclass
class GeoCacheEntry:
    query: str
    result: str | None  # iso3
    stage: ResolverStage
    fetched_at: str


class GeoCache:
    """Append-only JSONL cache keyed by normalized query.

    Concurrent reads are lock-free on the in-memory dict; appends are
    serialized. No TTL: places rarely move countries.
    """

    def __init__(self, path: Path | None = None):
        self.path = path
        self._entries: dict[str, GeoCacheEntry] = {}
        self._lock = threading.Lock()
        if path is not None and path.exists():
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    entry = GeoCacheEntry(obj["query"], obj["result"],
                                          ResolverStage(obj["stage"]),
                                          obj["fetched_at"])
                    self._entries[entry.query] = entry

    def get(self, placename: str) -> GeoCacheEntry | None:
        return self._entries.get(normalize_name(placename))

    def put(self, placename: str, result: str | None, stage: ResolverStage) -> None:
        entry = GeoCacheEntry(
            query=normalize_name(placename),
            result=result,
            stage=stage,
            fetched_at=datetime.now(timezone.utc).isoformat(),
        )
        with self._lock:
            self._entries[entry.query] = entry
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps({
                        "query": entry.query, "result": entry.result,
                        "stage": entry.stage.value, "fetched_at": entry.fetched_at,
                    }, sort_keys=True) + "\n")


class CascadeResolver:
    """kb_lookup -> remote_geocode -> context_infer, first success wins."""

    def __init__(self, kb: KnowledgeBase, client: GeocoderClient,
                 registry: CountryRegistry, cache: GeoCache | None = None,
                 inferencer: CountryInferencer | None = None,
                 refresh: bool = False):
        self.kb = kb
        self.client = client
        self.registry = registry
        self.cache = cache or GeoCache()
        self.inferencer = inferencer or AliasScanInferencer(registry)
        self.refresh = refresh

    def resolve(self, placename: str, sentence: str = "",
                title: str = "") -> PlaceMention:
        if not self.refresh:
            cached = self.cache.get(placename)
            if cached is not None:
                resolved = (self.registry.get_optional(cached.result)
                            if cached.result else None)
                return PlaceMention(placename, resolved, cached.stage)

        country = kb_lookup(placename, self.kb)
        stage = ResolverStage.GAZETTEER
        if country is None:
            country = remote_geocode(placename, self.client, registry=self.registry)
            stage = ResolverStage.REMOTE_GEOCODER
        if country is None:
            country = context_infer(sentence, title, self.inferencer)
            stage = ResolverStage.CONTEXT_INFERENCE
        if country is None:
            stage = ResolverStage.UNRESOLVED

        self.cache.put(placename, country.iso3 if country else None, stage)
        return PlaceMention(placename, country, stage)
