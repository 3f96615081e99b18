"""Hot per-token kernels with a compiled core and a pure-Python fallback.

The native (Cython) backend is selected at import when available; set
``EDGESPEC_BACKEND=pure`` or ``EDGESPEC_BACKEND=native`` to force a choice.
Both backends implement identical floating-point semantics, so results do
not depend on which one is active.

Call sites must access kernels as module attributes (``kernels.seq_sum``),
not ``from`` imports, so that ``set_backend`` -- used by the parity tests
and the benchmark -- can rebind them at runtime.
"""

from __future__ import annotations

import os

from . import _pure

try:
    from . import _native
except ImportError:  # extension not built on this install
    _native = None

_FUNCTIONS = (
    "seq_sum",
    "tv_distance",
    "overlap_mass",
    "residual_into",
    "inverse_cdf",
    "nucleus_cutoff",
    "peaked_weights_into",
)

_active = None


def available_backends() -> tuple[str, ...]:
    return ("pure", "native") if _native is not None else ("pure",)


def backend_name() -> str:
    return _active.NAME


def _module_for(name: str):
    if name == "pure":
        return _pure
    if name == "native":
        if _native is None:
            raise RuntimeError("native kernel extension is not built")
        return _native
    raise ValueError(f"unknown kernel backend {name!r} (expected 'pure' or 'native')")


def set_backend(name: str) -> None:
    """Rebind the public kernel functions to the given backend."""
    global _active
    mod = _module_for(name)
    for fn in _FUNCTIONS:
        globals()[fn] = getattr(mod, fn)
    _active = mod


_requested = os.environ.get("EDGESPEC_BACKEND")
if _requested:
    set_backend(_requested)
else:
    set_backend("native" if _native is not None else "pure")
