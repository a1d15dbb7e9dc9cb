"""Backend dispatch for the hot trace/value kernels.

The compiled extension is preferred when it imported cleanly; setting
``REMATCH_PURE_PYTHON=1`` in the environment (or calling
:func:`set_backend`) forces the pure-Python twin.  Both backends are
required to produce bit-identical results.
"""

from __future__ import annotations

import os

from . import _core_py

try:  # compiled twin is optional
    from . import _core_cy  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on build environment
    _core_cy = None

_BACKENDS = {"python": _core_py}
if _core_cy is not None:
    _BACKENDS["compiled"] = _core_cy

if _core_cy is not None and not os.environ.get("REMATCH_PURE_PYTHON"):
    _active = _core_cy
else:
    _active = _core_py


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def active_backend() -> str:
    return _active.BACKEND


def set_backend(name: str) -> None:
    global _active
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")


def get_backend(name: str | None = None):
    return _active if name is None else _BACKENDS[name]


def sm_trace(tables, real: int) -> list[int]:
    return _active.sm_trace(tables, real)


def gc_trace(tables, real: int) -> list[int]:
    return _active.gc_trace(tables, real)


def dp_solve(tables, commit: bool, prune: bool):
    return _active.dp_solve(tables, commit, prune)


def lex_less(a: int, b: int) -> bool:
    return _core_py.lex_less(a, b)
