"""Ultra-compact texture cellular automata.

Thin wrapper around the compiled extension; see the README for the CLI and
the C++ API.
"""

try:
    from ._unca import *  # noqa: F401,F403  (installed package layout)
except ImportError:  # pragma: no cover - development layout
    from _unca import *  # noqa: F401,F403
