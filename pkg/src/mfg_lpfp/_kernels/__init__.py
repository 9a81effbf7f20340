"""Pivot-loop backend selection.

The compiled kernel (Cython) and the numpy fallback implement the same
revised-simplex pivot loop with identical pivot rules; which one is active
is decided once at import.  Set MFG_LPFP_KERNEL=python to force the
fallback (used by the benchmark and the parity tests).
"""

import os

if os.environ.get("MFG_LPFP_KERNEL") == "python":
    from . import _pure as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "c"
    except ImportError:  # extension not built; pure fallback
        from . import _pure as _impl

        BACKEND = "python"

OPTIMAL = 0
UNBOUNDED = 1
BUDGET = 2

pivot_chunk = _impl.pivot_chunk


def backends():
    """All importable backends, for benchmarks and parity tests."""
    from . import _pure

    out = {"python": _pure.pivot_chunk}
    try:
        from . import _core

        out["c"] = _core.pivot_chunk
    except ImportError:
        pass
    return out
