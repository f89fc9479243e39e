"""Configurations, project requirements, and architecture-scoped selection.

A configuration pins (tool, version, spec URL) triples, optionally grouped
under ``<Architecture name=...>`` blocks. A requirements document names a
configuration (``<base>`` + ``<include>``) and selects tools from it by
name only; versions always come from the configuration, which is what
keeps a multi-project setup consistent. Selection picks, for each selected
name, the require entry with the most specific architecture scope that
matches the running architecture.
"""

from __future__ import annotations

import platform
import re
from dataclasses import dataclass, field

from .errors import ConfigError
from .markup import HandlerMap, parse_with_handlers

ARCH_ENV = "SCRAM_ARCH"

_CANONICAL_RE = re.compile(r"^[A-Za-z0-9]+__[0-9.]+$")


@dataclass(frozen=True)
class Architecture:
    os: str
    release: str

    @property
    def canonical(self) -> str:
        return f"{self.os}__{self.release}"

    def __str__(self) -> str:
        return self.canonical


def detect_architecture(override: str | None = None,
                        env: dict[str, str] | None = None) -> Architecture:
    """Current architecture, from an override, ``$SCRAM_ARCH``, or the OS."""
    if override is None and env is not None:
        override = env.get(ARCH_ENV) or None
    if override is not None:
        if not _CANONICAL_RE.match(override):
            raise ConfigError(
                f"bad architecture {override!r} (want <os>__<release>, "
                f"like Linux__2.4)"
            )
        os_name, _, release = override.partition("__")
        return Architecture(os_name, release)
    os_name = re.sub(r"[^A-Za-z0-9]", "", platform.system()) or "Unknown"
    matched = re.match(r"(\d+)(?:\.(\d+))?", platform.release())
    if matched is None:
        release = "0"
    elif matched.group(2) is None:
        release = matched.group(1)
    else:
        release = f"{matched.group(1)}.{matched.group(2)}"
    return Architecture(os_name, release)


def match_architecture(scope: str, arch: Architecture) -> bool:
    """Scope prefixes match at component boundaries: SunOS__5 covers
    SunOS__5.8 but not SunOS__51; an empty scope covers everything."""
    if not scope:
        return True
    canonical = arch.canonical
    if scope == canonical:
        return True
    return canonical.startswith(scope) and canonical[len(scope)] == "."


@dataclass(frozen=True)
class RequireEntry:
    name: str
    version: str
    url: str
    arch_scope: str = ""

    @property
    def folded_name(self) -> str:
        return self.name.casefold()


@dataclass
class ConfigurationDoc:
    entries: list[RequireEntry] = field(default_factory=list)
    base: str | None = None


@dataclass(frozen=True)
class SelectEntry:
    name: str
    arch_scope: str = ""

    @property
    def folded_name(self) -> str:
        return self.name.casefold()


@dataclass
class RequirementsDoc:
    base: str | None = None
    includes: list[str] = field(default_factory=list)
    selects: list[SelectEntry] = field(default_factory=list)


class _ScopedParser:
    """Shared Architecture-scope tracking for both document kinds."""

    def __init__(self):
        self.scope = ""
        self.used = False  # set once any entry is recorded; bases must precede

    def enter_scope(self, _state, ev):
        self.scope = ev.require("name")

    def leave_scope(self, _state, ev):
        self.scope = ""


def parse_configuration(events) -> ConfigurationDoc:
    doc = ConfigurationDoc()
    state = _ScopedParser()
    seen: set[tuple[str, str]] = set()

    def on_require(_, ev):
        entry = RequireEntry(
            name=ev.require("name"),
            version=ev.require("version"),
            url=ev.require("url"),
            arch_scope=state.scope,
        )
        key = (entry.folded_name, entry.arch_scope)
        if key in seen:
            raise ConfigError(
                f"duplicate require for '{entry.name}' in scope "
                f"'{entry.arch_scope or '(all)'}'"
            )
        seen.add(key)
        state.used = True
        doc.entries.append(entry)

    def on_base(_, ev):
        if state.used:
            raise ConfigError("<base> must precede every <require>")
        doc.base = ev.require("url")

    handlers = HandlerMap()
    handlers.add("config", "Architecture", open=state.enter_scope, close=state.leave_scope)
    handlers.add("config", "require", open=on_require)
    handlers.add("config", "base", open=on_base)
    parse_with_handlers(events, handlers, None)
    return doc


def parse_requirements(events) -> RequirementsDoc:
    doc = RequirementsDoc()
    state = _ScopedParser()
    seen: set[tuple[str, str]] = set()

    def on_select(_, ev):
        entry = SelectEntry(ev.require("name"), state.scope)
        key = (entry.folded_name, entry.arch_scope)
        if key in seen:
            return  # duplicate selects collapse
        seen.add(key)
        state.used = True
        doc.selects.append(entry)

    def on_include(_, ev):
        state.used = True
        doc.includes.append(ev.require("url"))

    def on_base(_, ev):
        if state.used:
            raise ConfigError("<base> must precede every <include> and <select>")
        doc.base = ev.require("url")

    handlers = HandlerMap()
    handlers.add("req", "Architecture", open=state.enter_scope, close=state.leave_scope)
    handlers.add("req", "select", open=on_select)
    handlers.add("req", "include", open=on_include)
    handlers.add("req", "base", open=on_base)
    parse_with_handlers(events, handlers, None)
    return doc


@dataclass(frozen=True)
class PinnedTool:
    name: str
    version: str
    spec_url: str
    # effective base of the configuration that pinned this tool; spec_url
    # resolves against it at fetch time
    spec_base: str | None = None


@dataclass
class ResolvedConfiguration:
    arch: Architecture
    tools: dict[str, PinnedTool]  # insertion-ordered by select order
    config_identity: tuple[str, str] = ("", "")
    base: str | None = None

    def names(self) -> list[str]:
        return list(self.tools)

    def get(self, name: str) -> PinnedTool | None:
        return self.tools.get(name.casefold())


def resolve_selection(req: RequirementsDoc, configs: list[ConfigurationDoc],
                      arch: Architecture,
                      identity: tuple[str, str] = ("", "")) -> ResolvedConfiguration:
    """Bind every architecture-matching select to its pinned require entry.

    The most specific matching scope wins; equally specific candidates are
    an error, not a pick. Selects scoped to other architectures are skipped
    silently. Pure in (req, configs, arch).
    """
    entries = [(e, config.base) for config in configs for e in config.entries]
    tools: dict[str, PinnedTool] = {}
    for select in req.selects:
        if not match_architecture(select.arch_scope, arch):
            continue
        if select.folded_name in tools:
            continue
        candidates = [
            (e, base) for e, base in entries
            if e.folded_name == select.folded_name
            and match_architecture(e.arch_scope, arch)
        ]
        if not candidates:
            raise ConfigError(
                f"'{select.name}' is selected but no configuration entry "
                f"matches architecture {arch}"
            )
        best_len = max(len(e.arch_scope) for e, _ in candidates)
        best = [(e, base) for e, base in candidates if len(e.arch_scope) == best_len]
        if len(best) > 1:
            raise ConfigError(
                f"'{select.name}' matches several equally specific "
                f"configuration entries under {arch}"
            )
        chosen, chosen_base = best[0]
        tools[select.folded_name] = PinnedTool(
            select.folded_name, chosen.version, chosen.url, chosen_base
        )
    return ResolvedConfiguration(arch, tools, identity, req.base)
