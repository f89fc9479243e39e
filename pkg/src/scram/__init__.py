"""scram: configuration management, installation, and developer workspaces.

Typed markup documents describe products and configurations; scram resolves
architecture-scoped selections into consistent tool sets, installs central
project areas, links lightweight developer areas to them, and emits
rollback-correct runtime environments for sh and csh.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    AreaError,
    ConfigError,
    DocTypeError,
    FetchError,
    MarkupError,
    ScramError,
    ToolError,
    UrlError,
)
