"""Search backends: a BM25 index over a local corpus and a JSON-over-HTTP web search client.

Both expose ``search(query, k)`` and ``fetch(hit)`` so the scraper and baselines
never care which one they talk to.
"""

from __future__ import annotations

import html
import json
import logging
import math
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Protocol

import httpx

from .cache import DiskCache
from .errors import ParseError, ProviderError, TransportError
from .dates import CalendarDate, format_date, try_parse_date
from .text import tokenize

log = logging.getLogger(__name__)

K1 = 1.2
B = 0.75
MIN_BODY_TOKENS = 20


class RetrievalError(Exception):
    pass


class DuplicateDocId(RetrievalError):
    pass


class MalformedRecord(RetrievalError):
    pass


class FetchError(RetrievalError):
    pass


class EmptyBody(RetrievalError):
    pass


@dataclass(frozen=True)
class SearchHit:
    doc_id: str
    title: str = ""
    snippet: str = ""
    published: Optional[CalendarDate] = None
    score: float = 0.0

    def __post_init__(self):
        if not self.doc_id:
            raise ValueError("empty doc_id")
        if not math.isfinite(self.score):
            raise ValueError("score must be finite")

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id, "title": self.title, "snippet": self.snippet,
            "published": format_date(self.published) if self.published else None,
            "score": self.score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchHit":
        pub = d.get("published")
        return cls(d["doc_id"], d.get("title", ""), d.get("snippet", ""),
                   try_parse_date(pub) if pub else None, float(d.get("score", 0.0)))


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    body: str
    published: Optional[CalendarDate] = None

    def to_dict(self) -> dict:
        return {"doc_id": self.doc_id, "title": self.title, "body": self.body,
                "published": format_date(self.published) if self.published else None}

    @classmethod
    def from_dict(cls, d: dict) -> "Document":
        pub = d.get("published")
        return cls(d["doc_id"], d.get("title", ""), d["body"], try_parse_date(pub) if pub else None)


class SearchBackend(Protocol):
    def search(self, query: str, k: int) -> list[SearchHit]: ...

    def fetch(self, hit: SearchHit) -> Document: ...


_SCRIPT_RE = re.compile(r"<(script|style)\b.*?</\1\s*>", re.I | re.S)
_COMMENT_RE = re.compile(r"<!--.*?-->", re.S)
_BLOCK_RE = re.compile(r"</?(p|div|br|li|ul|ol|h[1-6]|tr|table|section|article|blockquote)\b[^>]*>", re.I)
_TAG_RE = re.compile(r"<[^>]*>")


def clean_markup(raw: str) -> str:
    """Markup to plain text. Block elements become paragraph breaks."""
    text = _SCRIPT_RE.sub(" ", raw)
    text = _COMMENT_RE.sub(" ", text)
    text = _BLOCK_RE.sub("\n\n", text)
    text = _TAG_RE.sub(" ", text)
    text = html.unescape(text)
    paragraphs = (" ".join(p.split()) for p in re.split(r"\n\s*\n", text))
    return "\n\n".join(p for p in paragraphs if p)


# ---------------------------------------------------------------- local BM25


@dataclass
class LocalIndex:
    postings: dict[str, list[tuple[str, int]]] = field(default_factory=dict)
    doc_lengths: dict[str, int] = field(default_factory=dict)
    avg_doc_length: float = 0.0
    doc_count: int = 0

    @property
    def vocabulary_size(self) -> int:
        return len(self.postings)

    def to_dict(self) -> dict:
        return {
            "doc_count": self.doc_count,
            "avg_doc_length": self.avg_doc_length,
            "doc_lengths": self.doc_lengths,
            "postings": {t: [list(p) for p in ps] for t, ps in self.postings.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LocalIndex":
        return cls(
            postings={t: [(doc, int(tf)) for doc, tf in ps] for t, ps in d["postings"].items()},
            doc_lengths={k: int(v) for k, v in d["doc_lengths"].items()},
            avg_doc_length=float(d["avg_doc_length"]),
            doc_count=int(d["doc_count"]),
        )


def record_to_document(record: Mapping) -> Document:
    doc_id = record.get("id", record.get("doc_id"))
    body = record.get("text", record.get("body"))
    if not doc_id or not isinstance(doc_id, str):
        raise MalformedRecord(f"record without id: {str(record)[:80]}")
    if body is None or not isinstance(body, str):
        raise MalformedRecord(f"record {doc_id!r} has no text")
    date = record.get("date") or record.get("published")
    published = try_parse_date(date) if date else None
    if date and published is None:
        raise MalformedRecord(f"record {doc_id!r} has an unparseable date {date!r}")
    return Document(doc_id, record.get("title") or "", body, published)


def read_corpus_jsonl(path: str | os.PathLike) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"{path}:{lineno}: {exc}") from None
    return records


def index_corpus(corpus_stream: Iterable[Mapping | Document]) -> LocalIndex:
    index = LocalIndex()
    for rec in corpus_stream:
        doc = rec if isinstance(rec, Document) else record_to_document(rec)
        if doc.doc_id in index.doc_lengths:
            raise DuplicateDocId(doc.doc_id)
        toks = tokenize(f"{doc.title} {doc.body}")
        index.doc_lengths[doc.doc_id] = len(toks)
        for term, tf in Counter(toks).items():
            index.postings.setdefault(term, []).append((doc.doc_id, tf))
    index.doc_count = len(index.doc_lengths)
    if index.doc_count:
        index.avg_doc_length = sum(index.doc_lengths.values()) / index.doc_count
    return index


def bm25_scores(index: LocalIndex, query: str) -> dict[str, float]:
    scores: dict[str, float] = {}
    n = index.doc_count
    avgdl = index.avg_doc_length or 1.0
    for term in dict.fromkeys(tokenize(query)):
        plist = index.postings.get(term)
        if not plist:
            continue
        df = len(plist)
        idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
        for doc_id, tf in plist:
            norm = K1 * (1 - B + B * index.doc_lengths[doc_id] / avgdl)
            scores[doc_id] = scores.get(doc_id, 0.0) + idf * tf * (K1 + 1) / (tf + norm)
    return scores


def search_local(index: LocalIndex, query: str, k: int) -> list[SearchHit]:
    """Top-k hits by BM25; ties go to the smaller doc_id. Hits carry only id and score."""
    ranked = sorted(bm25_scores(index, query).items(), key=lambda kv: (-kv[1], kv[0]))
    return [SearchHit(doc_id, score=score) for doc_id, score in ranked[:k]]


def _snippet(body: str, words: int = 30) -> str:
    return " ".join(body.split()[:words])


class LocalSearch:
    """Closed-corpus backend: BM25 over an in-memory document store."""

    name = "local"

    def __init__(self, documents: Iterable[Document], index: LocalIndex | None = None):
        self.documents = {d.doc_id: d for d in documents}
        self.index = index if index is not None else index_corpus(self.documents.values())
        self.search_calls = 0

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> "LocalSearch":
        docs = [record_to_document(r) for r in records]
        return cls(docs, index_corpus(docs))

    @classmethod
    def from_jsonl(cls, path: str | os.PathLike) -> "LocalSearch":
        return cls.from_records(read_corpus_jsonl(path))

    def save(self, path: str | os.PathLike) -> None:
        payload = {"index": self.index.to_dict(),
                   "documents": [d.to_dict() for d in self.documents.values()]}
        Path(path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "LocalSearch":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        docs = [Document.from_dict(d) for d in payload["documents"]]
        return cls(docs, LocalIndex.from_dict(payload["index"]))

    def search(self, query: str, k: int) -> list[SearchHit]:
        self.search_calls += 1
        hits = []
        for hit in search_local(self.index, query, k):
            doc = self.documents[hit.doc_id]
            hits.append(SearchHit(hit.doc_id, doc.title, _snippet(doc.body), doc.published, hit.score))
        return hits

    def fetch(self, hit: SearchHit) -> Document:
        try:
            doc = self.documents[hit.doc_id]
        except KeyError:
            raise FetchError(f"unknown document {hit.doc_id!r}") from None
        if len(tokenize(doc.body)) < MIN_BODY_TOKENS:
            raise EmptyBody(hit.doc_id)
        return doc


# ---------------------------------------------------------------- remote search


def _parse_hits(payload, k: int) -> list[SearchHit]:
    if isinstance(payload, dict):
        items = payload.get("organic")
        if items is None:
            items = payload.get("results")
    else:
        items = payload
    if not isinstance(items, list):
        raise ParseError("response has no result array")
    hits = []
    for rank, item in enumerate(items[:k]):
        if not isinstance(item, dict) or not item.get("link"):
            raise ParseError(f"result {rank} lacks a link")
        date = item.get("date")
        hits.append(SearchHit(
            doc_id=item["link"],
            title=item.get("title") or "",
            snippet=item.get("snippet") or "",
            published=try_parse_date(date) if isinstance(date, str) and date else None,
            score=float(k - rank),
        ))
    return hits


class RemoteSearch:
    """Web search over a JSON POST API (``{"q": ..., "num": ...}``) with a disk cache."""

    name = "remote"

    def __init__(self, endpoint: str, api_key: str | None = None, cache: DiskCache | None = None,
                 client: httpx.Client | None = None, timeout: float = 30.0):
        api_key = api_key if api_key is not None else os.environ.get("SEARCH_API_KEY", "")
        if not api_key:
            raise ValueError("search API key missing (set SEARCH_API_KEY)")
        self.endpoint = endpoint
        self._api_key = api_key
        self.cache = cache
        self.client = client or httpx.Client(timeout=timeout, follow_redirects=True)
        self.network_calls = 0

    def search(self, query: str, k: int) -> list[SearchHit]:
        key = {"op": "search", "endpoint": self.endpoint, "query": query, "k": k}
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return [SearchHit.from_dict(h) for h in cached]
        self.network_calls += 1
        try:
            resp = self.client.post(
                self.endpoint,
                json={"q": query, "num": k},
                headers={"X-API-KEY": self._api_key, "Content-Type": "application/json"},
            )
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if not 200 <= resp.status_code < 300:
            raise ProviderError(resp.status_code, resp.text[:200])
        try:
            payload = resp.json()
        except ValueError as exc:
            raise ParseError(f"response is not JSON: {exc}") from None
        hits = _parse_hits(payload, k)
        if self.cache is not None:
            self.cache.put(key, [h.to_dict() for h in hits])
        return hits

    def fetch(self, hit: SearchHit) -> Document:
        key = {"op": "fetch", "doc_id": hit.doc_id}
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                doc = Document.from_dict(cached)
                if len(tokenize(doc.body)) < MIN_BODY_TOKENS:
                    raise EmptyBody(hit.doc_id)
                return doc
        self.network_calls += 1
        try:
            resp = self.client.get(hit.doc_id)
        except httpx.HTTPError as exc:
            raise FetchError(f"{hit.doc_id}: {exc}") from exc
        if not 200 <= resp.status_code < 300:
            raise FetchError(f"{hit.doc_id}: HTTP {resp.status_code}")
        doc = Document(hit.doc_id, hit.title, clean_markup(resp.text), hit.published)
        if self.cache is not None:
            self.cache.put(key, doc.to_dict())
        if len(tokenize(doc.body)) < MIN_BODY_TOKENS:
            raise EmptyBody(hit.doc_id)
        return doc


def snippet_document(hit: SearchHit) -> Document:
    """Degraded document built from a hit when its page cannot be fetched."""
    return Document(hit.doc_id, hit.title, f"{hit.title}\n\n{hit.snippet}".strip(), hit.published)
