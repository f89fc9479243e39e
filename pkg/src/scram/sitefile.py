"""Site description file: local key/value data for resource mapping.

Line-oriented ``key = value`` records; blank lines and ``#`` comments are
skipped. Well-known keys:

    tool.<name>.<VAR>   value for a tool's client variable
    search.libroots     path-list of directories probed for libraries
    scheme.cvs.command  checkout command template for the cvs/vcs scheme
    build.command       command run by ``scram build``

The file is found through ``$SCRAM_SITE`` or ``<install-root>/site.cfg``.
"""

from __future__ import annotations

import os

from .errors import AreaError

SITE_ENV = "SCRAM_SITE"
SITE_BASENAME = "site.cfg"


class SiteInfo:
    def __init__(self, values: dict[str, str] | None = None, path: str | None = None):
        self.values = dict(values or {})
        self.path = path

    @classmethod
    def load(cls, path: str) -> "SiteInfo":
        values: dict[str, str] = {}
        try:
            with open(path) as fh:
                for lineno, raw in enumerate(fh, start=1):
                    line = raw.strip()
                    if not line or line.startswith("#"):
                        continue
                    key, eq, value = line.partition("=")
                    if not eq or not key.strip():
                        raise AreaError(
                            f"{path}:{lineno}: expected 'key = value', got {line!r}"
                        )
                    values[key.strip()] = value.strip()
        except OSError as exc:
            raise AreaError(f"cannot read site file {path}: {exc}") from exc
        return cls(values, path)

    @classmethod
    def locate(cls, env: dict[str, str] | None = None,
               install_root: str | None = None) -> "SiteInfo":
        """Best-effort lookup; a missing site file is an empty one."""
        env = os.environ if env is None else env
        explicit = env.get(SITE_ENV)
        if explicit:
            return cls.load(explicit)
        if install_root:
            candidate = os.path.join(install_root, SITE_BASENAME)
            if os.path.exists(candidate):
                return cls.load(candidate)
        return cls({})

    def get(self, key: str, default: str | None = None) -> str | None:
        return self.values.get(key, default)

    def tool_value(self, tool: str, var: str) -> str | None:
        return self.values.get(f"tool.{tool.casefold()}.{var}")

    def library_roots(self) -> list[str]:
        raw = self.values.get("search.libroots", "")
        return [p for p in raw.split(os.pathsep) if p]
