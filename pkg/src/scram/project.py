"""Central installations, developer areas, and their lifecycle.

A project area is a directory with a fixed skeleton (src, config, lib, bin,
logs, tmp, .SCRAM). The .SCRAM directory holds everything administrative:
the area's own identity, a state marker, per-architecture resolved tool
records, and, for developer areas, a Link file pointing at the central
installation they draw from. Nothing else in the area stores an absolute
self-path, so an area keeps working after a rename; only the Link target
is absolute.

A flat registry file (one ``project version arch location`` record per
line) makes central installations discoverable. Developer areas inherit
tool records and the resolved configuration through their link and keep
locally only what the developer overrides.
"""

from __future__ import annotations

import json
import os
import shlex
import subprocess
from dataclasses import dataclass

from .activedoc import DocTypeRegistry, DocumentEngine, ObjectStore
from .configuration import (
    Architecture,
    PinnedTool,
    RequirementsDoc,
    ResolvedConfiguration,
    SelectEntry,
    detect_architecture,
    parse_configuration,
    parse_requirements,
)
from .errors import AreaError, ToolError
from .markup import HandlerMap, parse_with_handlers
from .runtime import (
    EXEC_PATH_VAR,
    LIB_PATH_VAR,
    EnvDelta,
    parse_app_env,
)
from .sitefile import SiteInfo
from .tooldoc import (
    LibraryProber,
    ResolvedTool,
    build_contribution,
    order_by_externals,
    parse_tool_doc,
    resolve_tool,
    runtime_contribution,
    select_version,
)
from .urlaccess import ResourceUrl, UrlCache, default_registry, parse_url

ADMIN_DIR = ".SCRAM"
AREA_SUBDIRS = ("src", "config", "lib", "bin", "logs", "tmp", ADMIN_DIR)
LINK_FILE = "Link"
STATE_FILE = "state"
AREA_FILE = "area"
LOCK_FILE = "lock"
CONFIG_RECORD = "configuration"
TOOLS_DIR = "tools"
REQUIREMENTS_ID_FILE = "requirements.url"

STATE_INCOMPLETE = "incomplete"
STATE_COMPLETE = "complete"

LOOKUPDB_ENV = "SCRAM_LOOKUPDB"
CACHE_ENV = "SCRAM_CACHE"
REGISTRY_BASENAME = "scramdb"


@dataclass(frozen=True)
class InstallationRecord:
    project: str
    version: str
    arch: str
    location: str


class Registry:
    """Append-tolerant text registry of central installations."""

    def __init__(self, path: str):
        self.path = path

    @classmethod
    def locate(cls, env=None, dest_root: str | None = None) -> "Registry":
        env = os.environ if env is None else env
        path = env.get(LOOKUPDB_ENV)
        if not path:
            if dest_root:
                path = os.path.join(dest_root, REGISTRY_BASENAME)
            else:
                path = os.path.join(os.path.expanduser("~"), "." + REGISTRY_BASENAME)
        return cls(path)

    def records(self) -> list[InstallationRecord]:
        if not os.path.exists(self.path):
            return []
        out = []
        with open(self.path) as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(None, 3)
                if len(parts) != 4:
                    continue  # tolerate junk lines
                out.append(InstallationRecord(*parts))
        return out

    def find(self, project: str, version: str, arch: str) -> InstallationRecord | None:
        for record in self.records():
            if (record.project, record.version, record.arch) == (project, version, arch):
                return record
        return None

    def add(self, record: InstallationRecord) -> None:
        existing = self.find(record.project, record.version, record.arch)
        if existing is not None:
            if existing.location == record.location:
                return  # re-registering the identical record is a no-op
            raise AreaError(
                f"{record.project} {record.version} ({record.arch}) is already "
                f"registered at {existing.location}"
            )
        os.makedirs(os.path.dirname(self.path) or ".", exist_ok=True)
        with open(self.path, "a") as fh:
            fh.write(f"{record.project} {record.version} {record.arch} "
                     f"{record.location}\n")


class ProjectArea:
    def __init__(self, root: str):
        self.root = os.path.abspath(root)

    # ---- layout -----------------------------------------------------
    @property
    def admin(self) -> str:
        return os.path.join(self.root, ADMIN_DIR)

    def _admin_file(self, name: str) -> str:
        return os.path.join(self.admin, name)

    @property
    def kind(self) -> str:
        return "developer" if os.path.exists(self._admin_file(LINK_FILE)) else "central"

    def link_target(self) -> str | None:
        path = self._admin_file(LINK_FILE)
        if not os.path.exists(path):
            return None
        with open(path) as fh:
            return fh.read().strip()

    def central_root(self) -> str:
        target = self.link_target()
        if target is None:
            return self.root
        if not os.path.isdir(os.path.join(target, ADMIN_DIR)):
            raise AreaError(
                f"linked central installation {target} is missing or not an area"
            )
        return target

    def identity(self) -> tuple[str, str]:
        path = self._admin_file(AREA_FILE)
        values = {}
        try:
            with open(path) as fh:
                for line in fh:
                    key, _, value = line.partition("=")
                    values[key.strip()] = value.strip()
        except OSError as exc:
            raise AreaError(f"unreadable area metadata {path}: {exc}") from exc
        try:
            return values["project"], values["version"]
        except KeyError as exc:
            raise AreaError(f"area metadata {path} lacks {exc}") from exc

    @property
    def area_id(self) -> str:
        project, version = self.identity()
        return f"{project}:{version}"

    def tools_dir(self, arch: Architecture) -> str:
        return os.path.join(self.admin, arch.canonical, TOOLS_DIR)

    def config_record_path(self, arch: Architecture) -> str:
        return os.path.join(self.admin, arch.canonical, CONFIG_RECORD)

    # ---- state ------------------------------------------------------
    def state(self) -> str:
        try:
            with open(self._admin_file(STATE_FILE)) as fh:
                return fh.read().strip()
        except OSError:
            return STATE_INCOMPLETE

    def set_state(self, state: str) -> None:
        with open(self._admin_file(STATE_FILE), "w") as fh:
            fh.write(state + "\n")

    # ---- creation ---------------------------------------------------
    @classmethod
    def create(cls, root: str, project: str, version: str,
               link_target: str | None = None) -> "ProjectArea":
        if os.path.exists(root):
            raise AreaError(f"target directory already exists: {root}")
        area = cls(root)
        for sub in AREA_SUBDIRS:
            os.makedirs(os.path.join(area.root, sub))
        with open(area._admin_file(AREA_FILE), "w") as fh:
            fh.write(f"project = {project}\nversion = {version}\n")
        if link_target is not None:
            with open(area._admin_file(LINK_FILE), "w") as fh:
                fh.write(os.path.abspath(link_target) + "\n")
        area.set_state(STATE_INCOMPLETE)
        return area

    def lock(self) -> "_AreaLock":
        return _AreaLock(self._admin_file(LOCK_FILE))


class _AreaLock:
    """One mutating command per area; read-only commands never take this."""

    def __init__(self, path: str):
        self.path = path
        self._fd = None

    def __enter__(self):
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise AreaError(
                f"another scram command holds the area lock ({self.path}); "
                f"remove it if that command is gone"
            ) from None
        os.write(self._fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *exc):
        if self._fd is not None:
            os.close(self._fd)
        try:
            os.unlink(self.path)
        except OSError:
            pass
        return False


def area_context(cwd: str) -> ProjectArea:
    """Nearest enclosing area: walk upward until a .SCRAM directory."""
    path = os.path.abspath(cwd)
    while True:
        if os.path.isdir(os.path.join(path, ADMIN_DIR)):
            return ProjectArea(path)
        parent = os.path.dirname(path)
        if parent == path:
            raise AreaError(
                f"{cwd} is not inside a scram area (no {ADMIN_DIR} found upward)"
            )
        path = parent


# ---------------------------------------------------------------------
# bootstrap documents

@dataclass
class BootStrapDoc:
    project: str
    version: str
    downloads: list[tuple[str, str]]
    config_url: str | None = None


def _safe_destination(dest: str) -> str:
    norm = os.path.normpath(dest)
    if not dest or os.path.isabs(norm) or norm.startswith(".."):
        raise AreaError(f"download destination escapes the area: {dest!r}")
    return norm


def parse_bootstrap(events) -> BootStrapDoc:
    """Builder for ``BuildSystem::BootStrapDoc``: one ``<project>``, any
    number of ``<download url= to=>``, an optional ``<config url=>``."""
    doc = BootStrapDoc(project="", version="", downloads=[])

    def on_project(_, ev):
        doc.project = ev.require("name")
        doc.version = ev.require("version")

    def on_download(_, ev):
        doc.downloads.append((ev.require("url"), _safe_destination(ev.require("to"))))

    def on_config(_, ev):
        doc.config_url = ev.require("url")

    handlers = HandlerMap()
    handlers.add("boot", "project", open=on_project)
    handlers.add("boot", "download", open=on_download)
    handlers.add("boot", "config", open=on_config)
    parse_with_handlers(events, handlers, None)
    if not doc.project or not doc.version:
        raise AreaError("bootstrap document does not name a project and version")
    return doc


# ---------------------------------------------------------------------
# engine assembly

TOOLDOC_TYPE = "BuildSystem::ToolDoc"
CONFIG_TYPE = "BuildSystem::Configuration"
REQUIREMENTS_TYPE = "BuildSystem::Requirements"
BOOTSTRAP_TYPE = "BuildSystem::BootStrapDoc"
APPENV_TYPE = "BuildSystem::AppEnvDoc"


def build_engine(site: SiteInfo | None = None, env=None,
                 install_root: str | None = None, refresh: bool = False,
                 store: ObjectStore | None = None) -> DocumentEngine:
    env = os.environ if env is None else env
    cache_root = env.get(CACHE_ENV)
    if not cache_root:
        if install_root:
            cache_root = os.path.join(install_root, ".scram-cache")
        else:
            cache_root = os.path.join(os.path.expanduser("~"), ".scram-cache")
    types = DocTypeRegistry()
    types.register(TOOLDOC_TYPE, "1.0", parse_tool_doc)
    types.register(CONFIG_TYPE, "1.0", parse_configuration)
    types.register(REQUIREMENTS_TYPE, "2.0", parse_requirements,
                   splice_includes=False)
    types.register(BOOTSTRAP_TYPE, "1.0", parse_bootstrap)
    types.register(APPENV_TYPE, "1.0", parse_app_env)
    cache = UrlCache(cache_root, default_registry(site))
    return DocumentEngine(cache, types, store, refresh=refresh)


# ---------------------------------------------------------------------
# resolved-configuration persistence

def _write_config_record(area: ProjectArea, arch: Architecture,
                         resolved: ResolvedConfiguration) -> None:
    path = area.config_record_path(arch)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    payload = {
        "identity": list(resolved.config_identity),
        "tools": [
            {"name": pin.name, "version": pin.version, "spec_url": pin.spec_url,
             "spec_base": pin.spec_base}
            for pin in resolved.tools.values()
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_config_record(area: ProjectArea, arch: Architecture) -> ResolvedConfiguration:
    """The central installation's resolved configuration; an installation
    never bootstrapped for this architecture reads as empty."""
    path = ProjectArea(area.central_root()).config_record_path(arch)
    if not os.path.exists(path):
        return ResolvedConfiguration(arch, {})
    with open(path) as fh:
        payload = json.load(fh)
    tools = {
        t["name"]: PinnedTool(t["name"], t["version"], t["spec_url"],
                              t.get("spec_base"))
        for t in payload["tools"]
    }
    identity = tuple(payload.get("identity", ("", "")))
    return ResolvedConfiguration(arch, tools, identity)  # order preserved by json


# ---------------------------------------------------------------------
# tool records

def _record_path(area_root: str, arch: Architecture, name: str) -> str:
    return os.path.join(area_root, ADMIN_DIR, arch.canonical, TOOLS_DIR,
                        name.casefold())


def write_tool_record(area: ProjectArea, arch: Architecture,
                      rt: ResolvedTool) -> str:
    path = _record_path(area.root, arch, rt.name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    payload = {
        "name": rt.name,
        "version": rt.version,
        "bindings": rt.bindings,
        "runtime": rt.runtime_entries,
        "libs": rt.lib_names,
        "provenance": rt.provenance,
        "descriptions": rt.descriptions,
        "externals": rt.externals,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    return path


def _load_record(path: str) -> ResolvedTool:
    with open(path) as fh:
        payload = json.load(fh)
    return ResolvedTool(
        name=payload["name"],
        version=payload["version"],
        bindings=dict(payload["bindings"]),
        runtime_entries=[tuple(pair) for pair in payload["runtime"]],
        lib_names=list(payload["libs"]),
        provenance=dict(payload["provenance"]),
        descriptions=dict(payload.get("descriptions", {})),
        externals=[tuple(pair) for pair in payload.get("externals", [])],
    )


def active_tool_record(area: ProjectArea, arch: Architecture,
                       name: str) -> tuple[ResolvedTool, str] | None:
    """Local record wins over the inherited central one."""
    local = _record_path(area.root, arch, name)
    if os.path.exists(local):
        return _load_record(local), "local"
    central = _record_path(area.central_root(), arch, name)
    if os.path.exists(central):
        return _load_record(central), "central"
    return None


def _known_tool_names(area: ProjectArea, arch: Architecture) -> list[str]:
    names: list[str] = []
    for root in (area.central_root(), area.root):
        directory = os.path.join(root, ADMIN_DIR, arch.canonical, TOOLS_DIR)
        if os.path.isdir(directory):
            for entry in sorted(os.listdir(directory)):
                if entry not in names:
                    names.append(entry)
    return names


# ---------------------------------------------------------------------
# spec loading and resolution

def _load_requirements(engine: DocumentEngine, url: ResourceUrl):
    typed = engine.activate(url)
    payload = typed.payload
    if isinstance(payload, RequirementsDoc):
        return typed, payload
    if hasattr(payload, "entries"):  # a configuration document directly
        selects = [SelectEntry(e.name, e.arch_scope) for e in payload.entries]
        return typed, RequirementsDoc(base=payload.base, includes=[],
                                      selects=selects)
    raise AreaError(
        f"{url} is a '{typed.header.doc_type}' document; expected "
        f"{REQUIREMENTS_TYPE} or {CONFIG_TYPE}"
    )


def resolve_project_configuration(engine: DocumentEngine, url: ResourceUrl,
                                  arch: Architecture) -> ResolvedConfiguration:
    """Activate a requirements document, load its configurations, and bind
    the architecture's selection."""
    from .configuration import ConfigurationDoc, resolve_selection

    typed, req = _load_requirements(engine, url)
    req_base = parse_url(req.base, base=typed.source) if req.base else None

    def rebased(config, source, fallback):
        # activated payloads are memoized and shared; rebase on a copy
        own = parse_url(config.base, base=source) if config.base else None
        effective = own or fallback
        return ConfigurationDoc(entries=list(config.entries),
                                base=effective.unparse() if effective else None)

    if isinstance(typed.payload, RequirementsDoc):
        configs = []
        for raw in req.includes:
            inc_url = parse_url(raw, base=req_base or typed.source)
            inc_typed = engine.activate(inc_url)
            configs.append(rebased(inc_typed.payload, inc_typed.source, req_base))
    else:
        configs = [rebased(typed.payload, typed.source, None)]
    identity = (typed.source.unparse(), typed.version)
    return resolve_selection(req, configs, arch, identity=identity)


def _activate_spec(engine: DocumentEngine, pin: PinnedTool):
    base = parse_url(pin.spec_base) if pin.spec_base else None
    spec_url = parse_url(pin.spec_url, base=base)
    typed = engine.activate(spec_url)
    if typed.header.type_path() != ("BuildSystem", "ToolDoc"):
        raise ToolError(
            f"{spec_url} is a '{typed.header.doc_type}' document, "
            f"expected {TOOLDOC_TYPE}"
        )
    return typed.payload


def resolve_selected_tools(engine: DocumentEngine, area: ProjectArea,
                           arch: Architecture, resolved: ResolvedConfiguration,
                           site: SiteInfo, prompt=None) -> list[ResolvedTool]:
    """Resolve every selected tool in dependency order and persist the
    records under the area's administrative directory."""
    blocks = {}
    for pin in resolved.tools.values():
        spec = _activate_spec(engine, pin)
        blocks[pin.name] = select_version(spec, pin.version)
    order = order_by_externals(blocks)
    prober = LibraryProber(site.library_roots())
    done: dict[str, ResolvedTool] = {}
    out = []
    for name in order:
        rt = resolve_tool(blocks[name], tool_name=name, site=site,
                          prober=prober, prompt=prompt, already_resolved=done)
        done[name] = rt
        write_tool_record(area, arch, rt)
        out.append(rt)
    return out


# ---------------------------------------------------------------------
# lifecycle commands

def bootstrap_install(bootstrap_url: str, dest_root: str,
                      site: SiteInfo | None = None, prompt=None, env=None,
                      arch: Architecture | None = None, refresh: bool = False,
                      ) -> tuple[ProjectArea, InstallationRecord]:
    """Assemble a central installation from a bootstrap document.

    The area is created unregistered and stays in the ``incomplete`` state
    until a successful build (or a forced install) marks it complete.
    """
    env = os.environ if env is None else env
    arch = arch or detect_architecture(env=env)
    site = site if site is not None else SiteInfo.locate(env, dest_root)
    engine = build_engine(site=site, env=env, install_root=dest_root,
                          refresh=refresh)
    typed = engine.activate(parse_url(bootstrap_url))
    boot: BootStrapDoc = typed.payload
    if not isinstance(boot, BootStrapDoc):
        raise AreaError(f"{bootstrap_url} is not a {BOOTSTRAP_TYPE} document")

    root = os.path.join(os.path.abspath(dest_root),
                        f"{boot.project}_{boot.version}")
    area = ProjectArea.create(root, boot.project, boot.version)
    for raw_url, dest in boot.downloads:
        content, _ = engine.cache.fetch(parse_url(raw_url, base=typed.source))
        target = os.path.join(area.root, dest)
        os.makedirs(os.path.dirname(target), exist_ok=True)
        with open(target, "wb") as fh:
            fh.write(content)

    if boot.config_url is not None:
        config_url = parse_url(boot.config_url, base=typed.source)
        resolved = resolve_project_configuration(engine, config_url, arch)
        _write_config_record(area, arch, resolved)
        with open(os.path.join(area.root, "config", REQUIREMENTS_ID_FILE), "w") as fh:
            fh.write(f"{resolved.config_identity[0]} "
                     f"{resolved.config_identity[1]}\n")
        resolve_selected_tools(engine, area, arch, resolved, site, prompt)

    record = InstallationRecord(boot.project, boot.version, arch.canonical,
                                area.root)
    return area, record


def register_install(area: ProjectArea, registry: Registry,
                     arch: Architecture | None = None,
                     force: bool = False) -> InstallationRecord:
    arch = arch or detect_architecture()
    if area.kind != "central":
        raise AreaError("only central installations can be registered; "
                        "this is a developer area")
    if area.state() != STATE_COMPLETE:
        if not force:
            raise AreaError(
                "installation is not marked complete (run a successful "
                "'scram build' first, or pass --force)"
            )
        area.set_state(STATE_COMPLETE)
    project, version = area.identity()
    record = InstallationRecord(project, version, arch.canonical, area.root)
    registry.add(record)
    return record


LIST_HEADER = "| Project  | Version  |  Location  |"
LIST_RULE = "-" * 36
TOOL_LIST_RULE = "+" * 50


def list_installs(registry: Registry, project_filter: str | None,
                  arch: Architecture) -> str:
    lines = ["Listing installed projects....", "", LIST_RULE, LIST_HEADER,
             LIST_RULE]
    for record in registry.records():
        if record.arch != arch.canonical:
            continue
        if project_filter is not None and record.project != project_filter:
            continue
        lines.append(f"{record.project} {record.version} --> {record.location}")
    lines.append(f"Projects available for platform >> {arch.canonical} <<")
    return "\n".join(lines) + "\n"


def create_dev_area(project: str, version: str, registry: Registry, cwd: str,
                    arch: Architecture | None = None) -> ProjectArea:
    """Developer area linked to a registered central installation; only the
    configuration identity and administrative metadata are local."""
    arch = arch or detect_architecture()
    record = registry.find(project, version, arch.canonical)
    if record is None:
        available = [r.version for r in registry.records()
                     if r.project == project and r.arch == arch.canonical]
        hint = (f" (available versions: {', '.join(available)})" if available
                else " (no versions registered; see 'scram list')")
        raise AreaError(f"no registered installation of {project} {version} "
                        f"for {arch}{hint}")
    if not os.path.isdir(os.path.join(record.location, ADMIN_DIR)):
        raise AreaError(
            f"registered location {record.location} is gone or is not an "
            f"installation area"
        )
    root = os.path.join(os.path.abspath(cwd), f"{project}_{version}")
    area = ProjectArea.create(root, project, version,
                              link_target=record.location)
    source = os.path.join(record.location, "config", REQUIREMENTS_ID_FILE)
    if os.path.exists(source):
        with open(source) as src, open(
                os.path.join(area.root, "config", REQUIREMENTS_ID_FILE), "w") as dst:
            dst.write(src.read())
    return area


def tool_list(area: ProjectArea, arch: Architecture) -> str:
    """The area's tools in configuration order: active version next to the
    configuration default, then local additions."""
    central = area.central_root()
    resolved = load_config_record(area, arch)
    lines = [f"Tool list for location {central}", TOOL_LIST_RULE]
    listed = set()
    for pin in resolved.tools.values():
        active = active_tool_record(area, arch, pin.name)
        version = active[0].version if active else pin.version
        listed.add(pin.name)
        lines.append(_tool_row(pin.name, version, pin.version))
    for name in _known_tool_names(area, arch):
        if name in listed:
            continue
        active = active_tool_record(area, arch, name)
        if active is not None:
            lines.append(_tool_row(name, active[0].version, "none"))
    return "\n".join(lines) + "\n"


def _tool_row(name: str, version: str, default: str) -> str:
    return f" {name:<21}{version:<11}(default={default})"


def setup_tool(area: ProjectArea, name: str | None = None,
               version: str | None = None, url: str | None = None,
               site: SiteInfo | None = None, prompt=None, env=None,
               arch: Architecture | None = None, refresh: bool = False) -> list[str]:
    """(Re)resolve tools into the area's own records.

    With a URL: set up exactly that product/version, overriding locally.
    With a name: re-resolve that tool from the inherited configuration.
    With nothing: make sure every configured tool has a valid record,
    resolving only the ones that lack one.

    Returns the names written.
    """
    env = os.environ if env is None else env
    arch = arch or detect_architecture(env=env)
    central = area.central_root()
    site = site if site is not None else SiteInfo.locate(env, central)
    engine = build_engine(site=site, env=env, install_root=central,
                          refresh=refresh)
    prober = LibraryProber(site.library_roots())

    def resolved_externals(block) -> dict[str, ResolvedTool]:
        deps: dict[str, ResolvedTool] = {}
        for ref, _version in ((e.ref, e.version) for e in block.externals):
            active = active_tool_record(area, arch, ref)
            if active is not None:
                deps[ref.casefold()] = active[0]
        return deps

    def resolve_and_write(tool_name: str, block) -> str:
        rt = resolve_tool(block, tool_name=tool_name, site=site, prober=prober,
                          prompt=prompt,
                          already_resolved=resolved_externals(block))
        write_tool_record(area, arch, rt)
        return rt.name

    if url is not None:
        if name is None or version is None:
            raise AreaError("setup with a URL needs both a name and a version")
        spec = _activate_spec(engine, PinnedTool(name.casefold(), version, url))
        return [resolve_and_write(name, select_version(spec, version))]

    resolved = load_config_record(area, arch)
    if name is not None:
        pin = resolved.get(name)
        if pin is None:
            known = ", ".join(resolved.tools) or "(none)"
            raise ToolError(
                f"'{name}' is not in the configuration (known tools: {known}); "
                f"pass a specification URL to add it"
            )
        spec = _activate_spec(engine, pin)
        return [resolve_and_write(pin.name, select_version(spec, pin.version))]

    written = []
    for pin in resolved.tools.values():
        active = active_tool_record(area, arch, pin.name)
        if active is not None and active[0].version == pin.version:
            continue  # inheritance suffices
        spec = _activate_spec(engine, pin)
        written.append(resolve_and_write(pin.name, select_version(spec, pin.version)))
    return written


def tool_info(area: ProjectArea, name: str, arch: Architecture) -> str:
    active = active_tool_record(area, arch, name)
    if active is None:
        known = ", ".join(_known_tool_names(area, arch)) or "(none)"
        raise ToolError(f"unknown tool '{name}' (known tools: {known})")
    rt, source = active
    lines = [f"Tool: {rt.name}", f"Version: {rt.version}", f"Record: {source}"]
    if rt.lib_names:
        lines.append("Libraries: " + " ".join(rt.lib_names))
    if rt.externals:
        lines.append("Externals:")
        lines.extend(f"  {ref} {version}" for ref, version in rt.externals)
    if rt.bindings:
        lines.append("Environment:")
        lines.extend(
            f"  {key}={value}  [{rt.provenance.get(key, '?')}]"
            for key, value in rt.bindings.items()
        )
    if rt.descriptions:
        lines.append("Notes:")
        lines.extend(f"  {key}: {text}" for key, text in rt.descriptions.items())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------
# environments

def _area_level_prepends(area: ProjectArea, delta: EnvDelta) -> None:
    """bin/ and lib/ of the central and developer areas, developer ending up
    ahead. Only directories with content contribute, which also keeps the
    emission byte-stable across a developer-area rename while the area has
    produced nothing."""
    roots = [area.central_root()]
    if area.root != roots[0]:
        roots.append(area.root)
    for var, sub in ((EXEC_PATH_VAR, "bin"), (LIB_PATH_VAR, "lib")):
        for root in roots:
            path = os.path.join(root, sub)
            if os.path.isdir(path) and os.listdir(path):
                delta.prepend(var, path)


def _tools_in_runtime_order(area: ProjectArea, arch: Architecture):
    resolved = load_config_record(area, arch)
    missing = []
    records = []
    for pin in resolved.tools.values():
        active = active_tool_record(area, arch, pin.name)
        if active is None:
            missing.append(pin.name)
        else:
            records.append(active[0])
    if missing:
        raise AreaError(
            "tools without resolved records: " + ", ".join(missing) +
            " (run 'scram setup')"
        )
    for name in _known_tool_names(area, arch):
        if resolved.get(name) is None:
            active = active_tool_record(area, arch, name)
            if active is not None:
                records.append(active[0])
    return records


def compute_runtime_env(area: ProjectArea, arch: Architecture) -> EnvDelta:
    """Runtime delta of an area: every active tool's contribution in
    configuration order, then the area-level path entries."""
    delta = EnvDelta(area_id=area.area_id)
    for record in _tools_in_runtime_order(area, arch):
        delta = delta.merge(runtime_contribution(record))
    _area_level_prepends(area, delta)
    delta.area_id = area.area_id
    return delta


def build_environment(area: ProjectArea, arch: Architecture) -> EnvDelta:
    """Build-time delta: every binding of every active tool, plus the
    runtime path entries."""
    delta = EnvDelta(area_id=area.area_id)
    for record in _tools_in_runtime_order(area, arch):
        delta = delta.merge(build_contribution(record))
    _area_level_prepends(area, delta)
    delta.area_id = area.area_id
    return delta


def run_build(area: ProjectArea, args: list[str], site: SiteInfo | None = None,
              env=None, arch: Architecture | None = None) -> int:
    """Pass-through build: run the operator-configured command inside tmp/
    with the area's build environment; a zero exit marks the area complete."""
    env = os.environ if env is None else env
    arch = arch or detect_architecture(env=env)
    site = site if site is not None else SiteInfo.locate(env, area.central_root())
    template = site.get("build.command")
    if not template:
        raise AreaError(
            "no build command configured (site key build.command)"
        )
    from .runtime import apply_delta

    build_env = apply_delta(env, build_environment(area, arch))
    argv = shlex.split(template) + list(args)
    try:
        proc = subprocess.run(argv, cwd=os.path.join(area.root, "tmp"),
                              env=build_env)
    except FileNotFoundError as exc:
        raise AreaError(f"build command not found: {exc}") from exc
    if proc.returncode == 0:
        area.set_state(STATE_COMPLETE)
    return proc.returncode
