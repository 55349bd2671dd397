"""Backend selection for the hot-loop kernels.

The compiled extension is preferred when it imported cleanly; set
``PRICEGAME_BACKEND=python`` (or ``ext``) to force a backend.  Both expose the
same two functions, ``run_game`` and ``tatonnement``, and produce
bit-identical results.
"""

import os

from . import _py

try:
    from . import _ext
except ImportError:  # pragma: no cover - depends on the build environment
    _ext = None

_BACKENDS = {"python": _py}
if _ext is not None:
    _BACKENDS["ext"] = _ext


def get_backend(name=None):
    """Resolve a backend module by name, env var, or availability."""
    if name is None:
        name = os.environ.get("PRICEGAME_BACKEND")
    if name is None:
        return _ext if _ext is not None else _py
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; available: {sorted(_BACKENDS)}"
        ) from None


def available_backends():
    return sorted(_BACKENDS)


DEFAULT = get_backend()
