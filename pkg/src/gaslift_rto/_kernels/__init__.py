"""Kernel backend selection.

Prefers the compiled extension, falls back to the pure-Python module.
Both expose the same functions with identical numerical semantics.
Set GASLIFT_RTO_BACKEND=python to force the fallback.
"""

import os

from . import pykernels

if os.environ.get("GASLIFT_RTO_BACKEND", "") == "python":
    _impl = pykernels
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = pykernels

BACKEND = _impl.BACKEND_NAME

OK = pykernels.OK
ERR_FLOODED = pykernels.ERR_FLOODED
ERR_HOLDUP = pykernels.ERR_HOLDUP
ERR_SINGULAR = pykernels.ERR_SINGULAR

_ERR_NAMES = {OK: "ok", ERR_FLOODED: "pipe flooded",
              ERR_HOLDUP: "nonpositive holdup",
              ERR_SINGULAR: "singular flow balance"}


def err_name(code):
    return _ERR_NAMES.get(code, f"error {code}")

well_chain = _impl.well_chain
well_chain_fwd = _impl.well_chain_fwd
network_rhs = _impl.network_rhs
twin_rk4 = _impl.twin_rk4
