"""Backend selection: compiled extension when available, numpy fallback otherwise.

The choice happens at import and can be forced with RENEWALAB_BACKEND
(``auto`` | ``compiled`` | ``python``).  Per-kernel dispatch falls back to
the python backend for chain families the extension does not implement
(custom lattice tables).
"""

from __future__ import annotations

import os
from typing import NamedTuple

from . import py_backend

try:
    from . import _core
except ImportError:  # extension not built; numpy path covers everything
    _core = None


class Backend(NamedTuple):
    name: str
    window_step: "object"
    window_run: "object"
    simulate_block: "object"
    step_states: "object"
    families: frozenset


PYTHON_BACKEND = Backend(
    name=py_backend.NAME,
    window_step=py_backend.window_step,
    window_run=py_backend.window_run,
    simulate_block=py_backend.simulate_block,
    step_states=py_backend.step_states,
    families=py_backend.FAMILIES,
)

COMPILED_BACKEND = (
    Backend(
        name=_core.NAME,
        window_step=_core.window_step,
        window_run=_core.window_run,
        simulate_block=_core.simulate_block,
        step_states=py_backend.step_states,  # single steps are never hot
        families=_core.FAMILIES,
    )
    if _core is not None
    else None
)


def get_backend(name: str) -> Backend:
    if name == "python":
        return PYTHON_BACKEND
    if name == "compiled":
        if COMPILED_BACKEND is None:
            raise RuntimeError("compiled backend requested but the extension is not built")
        return COMPILED_BACKEND
    if name == "auto":
        return COMPILED_BACKEND or PYTHON_BACKEND
    raise ValueError(f"unknown backend {name!r}")


ACTIVE = get_backend(os.environ.get("RENEWALAB_BACKEND", "auto"))


def active_backend() -> Backend:
    return ACTIVE


def backend_for(kernel, requested: Backend | None = None) -> Backend:
    """Backend to use for this kernel: the requested/active one, unless the
    kernel's family needs the python implementation."""
    b = requested or ACTIVE
    if kernel.family in b.families:
        return b
    return PYTHON_BACKEND
