"""The scram command line.

Verbs: list, project, setup, tool list, tool info, runtime, build, install,
bootstrap. Exit codes: 0 success, 1 operational failure, 2 usage error.
Operational errors render as one line on standard error:
``scram: <context>: <message>``. See docs/cli.md for the full table.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .configuration import detect_architecture
from .errors import ScramError
from .project import (
    Registry,
    area_context,
    bootstrap_install,
    compute_runtime_env,
    create_dev_area,
    list_installs,
    register_install,
    run_build,
    setup_tool,
    tool_info,
    tool_list,
)
from .runtime import emit_shell, load_app_env_file
from .sitefile import SiteInfo


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scram",
        description="Configuration management and developer workspaces.",
    )
    parser.add_argument("--version", action="version",
                        version=f"scram {__version__}")
    parser.add_argument("--arch", metavar="OS__RELEASE",
                        help="override the detected architecture")
    parser.add_argument("--refresh", action="store_true",
                        help="refetch unversioned (HEAD) documents")
    verbs = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    p = verbs.add_parser("list", help="list registered central installations")
    p.add_argument("project", nargs="?", default=None)

    p = verbs.add_parser("project", help="create a linked developer area")
    p.add_argument("name")
    p.add_argument("project_version", metavar="version")

    p = verbs.add_parser("setup", help="resolve tools into the current area")
    p.add_argument("name", nargs="?", default=None)
    p.add_argument("tool_version", metavar="version", nargs="?", default=None)
    p.add_argument("url", nargs="?", default=None)

    p = verbs.add_parser("tool", help="query the area's tools")
    tool_verbs = p.add_subparsers(dest="tool_verb", required=True,
                                  metavar="list|info")
    tool_verbs.add_parser("list", help="tools with active and default versions")
    info = tool_verbs.add_parser("info", help="details of one tool")
    info.add_argument("name")

    p = verbs.add_parser("runtime", help="emit the area's runtime environment")
    dialect = p.add_mutually_exclusive_group(required=True)
    dialect.add_argument("-csh", dest="dialect", action="store_const",
                         const="csh", help="emit csh syntax")
    dialect.add_argument("-sh", dest="dialect", action="store_const",
                         const="sh", help="emit Bourne shell syntax")
    p.add_argument("--app", default=None,
                   help="overlay an application environment file")

    p = verbs.add_parser("build", help="run the configured build command")
    p.add_argument("args", nargs=argparse.REMAINDER)

    p = verbs.add_parser("install", help="register this central installation")
    p.add_argument("--force", action="store_true",
                   help="register even without a verified build")

    p = verbs.add_parser("bootstrap",
                         help="install a project from its bootstrap document")
    p.add_argument("url")
    p.add_argument("--dest", default=".",
                   help="directory to install under (default: .)")
    return parser


def _make_prompt(stdin):
    if stdin is None or not hasattr(stdin, "isatty") or not stdin.isatty():
        return None

    def prompt(tool: str, var: str, hint: str):
        if hint:
            print(f"{tool}: {hint}", file=sys.stderr)
        sys.stderr.write(f"value for {var} of {tool} (empty to give up): ")
        sys.stderr.flush()
        answer = stdin.readline().strip()
        return answer or None

    return prompt


def main(argv: list[str] | None = None, env=None, cwd: str | None = None) -> int:
    env = os.environ if env is None else env
    cwd = os.getcwd() if cwd is None else cwd
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        arch = detect_architecture(args.arch, env=env)
        return _dispatch(args, env, cwd, arch) or 0
    except ScramError as exc:
        context = exc.context or args.verb
        print(f"scram: {context}: {exc}", file=sys.stderr)
        return 1


def _dispatch(args, env, cwd, arch) -> int:
    if args.verb == "list":
        registry = Registry.locate(env)
        sys.stdout.write(list_installs(registry, args.project, arch))
        return 0

    if args.verb == "project":
        registry = Registry.locate(env)
        area = create_dev_area(args.name, args.project_version, registry, cwd, arch)
        print(f"Developer area created: {area.root}")
        return 0

    if args.verb == "bootstrap":
        site = SiteInfo.locate(env, args.dest)
        area, record = bootstrap_install(
            args.url, args.dest, site=site, prompt=_make_prompt(sys.stdin),
            env=env, arch=arch, refresh=args.refresh)
        print(f"Central installation assembled: {area.root}")
        print("Run 'scram build' and 'scram install' inside it to publish.")
        return 0

    area = area_context(cwd)

    if args.verb == "setup":
        site = SiteInfo.locate(env, area.central_root())
        with area.lock():
            written = setup_tool(
                area, args.name, args.tool_version, args.url, site=site,
                prompt=_make_prompt(sys.stdin), env=env, arch=arch,
                refresh=args.refresh)
        for name in written:
            print(f"set up {name}")
        return 0

    if args.verb == "tool":
        if args.tool_verb == "list":
            sys.stdout.write(tool_list(area, arch))
        else:
            sys.stdout.write(tool_info(area, args.name, arch))
        return 0

    if args.verb == "runtime":
        delta = compute_runtime_env(area, arch)
        if args.app:
            delta = delta.merge(
                load_app_env_file(area.root, args.app, area_id=delta.area_id))
        sys.stdout.write(emit_shell(delta, env, args.dialect))
        return 0

    if args.verb == "build":
        site = SiteInfo.locate(env, area.central_root())
        with area.lock():
            return run_build(area, args.args, site=site, env=env, arch=arch)

    if args.verb == "install":
        registry = Registry.locate(env, os.path.dirname(area.root))
        with area.lock():
            record = register_install(area, registry, arch, force=args.force)
        print(f"Registered {record.project} {record.version} ({record.arch}) "
              f"at {record.location}")
        return 0

    raise AssertionError(f"unrouted verb {args.verb}")


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
