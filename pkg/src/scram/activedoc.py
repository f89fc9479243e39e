"""Typed document activation on top of fetch and tokenize.

A document type registry maps a ``<doc type=...>`` path to a builder that
turns an event stream into a domain object, gated on a minimum document
version. Activation runs the whole pipeline (fetch, tokenize, splice,
header check, build) and memoizes the result in an object store keyed by
normalized URL and version, so a document is fetched and parsed at most
once per store.

Two splicing tags exist. ``<inline url=...>`` always splices the target's
events in place. ``<include url=...>`` does the same for document types
that do not claim the tag themselves, but then insists the included
document has a header of the same type; types registered with
``splice_includes=False`` (the project requirements format does this) see
the include events and record them as references instead.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from .errors import DocTypeError
from .markup import (
    DocHeader,
    parse_version,
    read_doc_header,
    splice_inline,
    strip_doc_header,
    tokenize_markup,
)
from .urlaccess import ResourceUrl, UrlCache, parse_url


@dataclass(frozen=True)
class TypedDocument:
    header: DocHeader
    source: ResourceUrl
    version: str
    payload: object


@dataclass
class _TypeEntry:
    doc_type: str
    min_version: tuple[int, ...]
    builder: object
    splice_includes: bool


class DocTypeRegistry:
    def __init__(self):
        self._types: dict[tuple[str, ...], _TypeEntry] = {}

    def register(self, doc_type: str, min_version: str, builder,
                 *, splice_includes: bool = True) -> "DocTypeRegistry":
        key = DocHeader(doc_type, "0").type_path()
        if key in self._types:
            raise DocTypeError(f"document type '{doc_type}' is already registered")
        self._types[key] = _TypeEntry(
            doc_type, parse_version(min_version), builder, splice_includes
        )
        return self

    def entry_for(self, header: DocHeader) -> _TypeEntry:
        entry = self._types.get(header.type_path())
        if entry is None:
            known = ", ".join(sorted(e.doc_type for e in self._types.values()))
            raise DocTypeError(
                f"unknown document type '{header.doc_type}' (registered: {known})"
            )
        if parse_version(header.doc_version) < entry.min_version:
            minimum = ".".join(str(p) for p in entry.min_version)
            raise DocTypeError(
                f"document version {header.doc_version} of '{header.doc_type}' "
                f"is older than the supported minimum {minimum}"
            )
        return entry


class ObjectStore:
    """Memoized activations; concurrent readers, per-key builder runs."""

    def __init__(self):
        self._entries: dict[str, TypedDocument] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._mutex = threading.Lock()

    def lock_for(self, key: str) -> threading.Lock:
        with self._mutex:
            return self._locks.setdefault(key, threading.Lock())

    def get(self, key: str) -> TypedDocument | None:
        return self._entries.get(key)

    def put(self, key: str, doc: TypedDocument) -> None:
        self._entries[key] = doc


@dataclass
class EngineStats:
    fetches: int = 0
    parses: int = 0


class DocumentEngine:
    """Binds a cache, a type registry and an object store into ``activate``."""

    def __init__(self, cache: UrlCache, types: DocTypeRegistry,
                 store: ObjectStore | None = None, refresh: bool = False):
        self.cache = cache
        self.types = types
        self.store = store if store is not None else ObjectStore()
        self.refresh = refresh
        self.stats = EngineStats()

    def activate(self, url: ResourceUrl | str, version: str | None = None,
                 _chain: tuple[str, ...] = ()) -> TypedDocument:
        if isinstance(url, str):
            url = parse_url(url)
        key = url.cache_key(version)
        cached = self.store.get(key)
        if cached is not None:
            return cached
        if key in _chain:
            chain = " -> ".join(list(_chain) + [key])
            raise DocTypeError(f"document inclusion cycle: {chain}")
        with self.store.lock_for(key):
            cached = self.store.get(key)
            if cached is not None:
                return cached
            doc = self._activate_uncached(url, version, _chain + (key,))
            self.store.put(key, doc)
            return doc

    def _activate_uncached(self, url: ResourceUrl, version: str | None,
                           chain: tuple[str, ...]) -> TypedDocument:
        try:
            events = self.events_for(url, version)
            header = read_doc_header(events)
            entry = self.types.entry_for(header)
            events = self._splice(events, url, version, header, entry, chain)
            payload = entry.builder(strip_doc_header(events))
        except Exception as exc:
            self._tag_context(exc, url)
            raise
        return TypedDocument(header, url, url.version_tag(version), payload)

    def events_for(self, url: ResourceUrl, version: str | None):
        content, _ = self.cache.fetch(url, version, refresh=self.refresh)
        self.stats.fetches += 1
        text = content.decode("utf-8", errors="replace")
        self.stats.parses += 1
        return tokenize_markup(text, source_id=str(url))

    def _splice(self, events, url, version, header, entry, chain):
        """Process inline and include tags, resolving nested documents
        against their own URLs and carrying the cycle chain through."""

        def resolver(require_typed):
            def resolve(target: str):
                resolved = parse_url(target, base=url)
                tag = resolved.get("version") or url.version_tag(version)
                key = resolved.cache_key(tag)
                if key in chain:
                    readable = " -> ".join(
                        [str(url), str(resolved)]
                    )
                    raise DocTypeError(f"document inclusion cycle: {readable}")
                inner_events = self.events_for(resolved, tag)
                inner_header, inner_entry = header, entry
                if require_typed:
                    inner_header = read_doc_header(inner_events)
                    if inner_header.type_path() != header.type_path():
                        raise DocTypeError(
                            f"<include> of {resolved} expects type "
                            f"'{header.doc_type}', found '{inner_header.doc_type}'"
                        )
                    inner_entry = self.types.entry_for(inner_header)
                return self._splice(
                    inner_events, resolved, tag, inner_header, inner_entry,
                    chain + (key,),
                )
            return resolve

        events = splice_inline(events, resolver(require_typed=False), tag="inline")
        if entry.splice_includes:
            events = splice_inline(events, resolver(require_typed=True), tag="include")
        return events

    @staticmethod
    def _tag_context(exc: Exception, url: ResourceUrl) -> None:
        from .errors import ScramError

        if isinstance(exc, ScramError) and exc.context is None:
            exc.context = f"while activating {url}"
