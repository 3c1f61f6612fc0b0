"""SPARQL-over-HTTP client backed by an append-only JSONL cache.

Knowledge-base answers drift over time, so every response is written to the cache
and later runs with a warm cache never touch the network.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from pathlib import Path
from typing import Optional

import requests

from .errors import FetchError

logger = logging.getLogger(__name__)

ENDPOINT_ENV = "CORONA_NER_SPARQL_ENDPOINT"
WIKIDATA_ENDPOINT = "https://query.wikidata.org/sparql"
USER_AGENT = "corona-ner/0.1 (corpus annotation; python-requests)"

_endpoint_locks: dict[str, threading.Lock] = {}
_endpoint_locks_guard = threading.Lock()


def _endpoint_lock(endpoint: str) -> threading.Lock:
    with _endpoint_locks_guard:
        return _endpoint_locks.setdefault(endpoint, threading.Lock())


def resolve_endpoint(configured: Optional[str]) -> str:
    return os.environ.get(ENDPOINT_ENV) or configured or WIKIDATA_ENDPOINT


def query_hash(query: str) -> str:
    return hashlib.sha256(query.strip().encode("utf-8")).hexdigest()[:16]


class SparqlCache:
    """JSONL records ``{endpoint, key, query_hash, rows}``; last record per key wins."""

    def __init__(self, path):
        self.path = Path(path) if path else None
        self._data: dict[tuple[str, str, str], list] = {}
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        rec = json.loads(line)
                        self._data[(rec["endpoint"], rec["key"], rec["query_hash"])] = rec["rows"]
                    except (json.JSONDecodeError, KeyError, TypeError):
                        raise FetchError(str(self.path), reason=f"corrupt cache line {lineno}") from None

    def __len__(self):
        return len(self._data)

    def get(self, endpoint, key, qhash):
        return self._data.get((endpoint, key, qhash))

    def put(self, endpoint, key, qhash, rows) -> None:
        with self._lock:
            self._data[(endpoint, key, qhash)] = rows
            if self.path is None:
                return
            self.path.parent.mkdir(parents=True, exist_ok=True)
            rec = {"endpoint": endpoint, "key": key, "query_hash": qhash, "rows": rows}
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


class SparqlClient:
    def __init__(self, endpoint: str, timeout: float = 30.0, cache_path=None,
                 offline: bool = False, session: Optional[requests.Session] = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self.cache = SparqlCache(cache_path)
        self.offline = offline
        self.session = session or requests.Session()
        self.requests_made = 0

    def select(self, query: str, key: str = "") -> list[dict]:
        """Run a SELECT and return the raw JSON result bindings.

        ``key`` namespaces the cache entry (entity type, or a lookup tag).
        """
        qhash = query_hash(query)
        cached = self.cache.get(self.endpoint, key, qhash)
        if cached is not None:
            return cached
        if self.offline:
            raise FetchError(self.endpoint, key, "cache miss in offline mode")
        rows = self._request(query, key)
        self.cache.put(self.endpoint, key, qhash, rows)
        return rows

    def _request(self, query: str, key: str) -> list[dict]:
        headers = {"Accept": "application/sparql-results+json", "User-Agent": USER_AGENT}
        with _endpoint_lock(self.endpoint):
            self.requests_made += 1
            try:
                resp = self.session.get(self.endpoint, params={"query": query, "format": "json"},
                                        headers=headers, timeout=self.timeout)
                resp.raise_for_status()
            except requests.RequestException as exc:
                raise FetchError(self.endpoint, key, str(exc)) from exc
        try:
            bindings = resp.json()["results"]["bindings"]
        except (ValueError, KeyError, TypeError):
            raise FetchError(self.endpoint, key, "malformed SPARQL JSON response") from None
        if not isinstance(bindings, list) or not all(isinstance(b, dict) for b in bindings):
            raise FetchError(self.endpoint, key, "malformed SPARQL JSON response")
        return bindings


def binding_value(row: dict, var: str) -> Optional[str]:
    cell = row.get(var)
    if isinstance(cell, dict):
        return cell.get("value")
    return None


def item_id(uri: str) -> str:
    """``http://www.wikidata.org/entity/Q42`` -> ``Q42``; non-URIs pass through."""
    return uri.rstrip("/").rsplit("/", 1)[-1].rsplit("#", 1)[-1]
