"""Numeric kernel backend selection.

Imports the compiled ``_speedups`` extension when available, otherwise the
pure-Python ``_reference`` module.  Both expose the same functions with
bit-identical results; set the environment variable ``RIGHTOFWAY_PURE=1``
to force the pure backend (used by the benchmark and the equivalence
tests).  ``BACKEND`` names the active implementation.
"""

import os

if os.environ.get("RIGHTOFWAY_PURE", "") not in ("", "0"):
    from . import _reference as _impl

    BACKEND = "pure"
else:
    try:
        from . import _speedups as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import _reference as _impl

        BACKEND = "pure"

ELLIPSE = _impl.ELLIPSE
BAND = _impl.BAND
EPS = _impl.EPS

threshold = _impl.threshold
threshold_ext = _impl.threshold_ext
completion_member = _impl.completion_member
raw_member = _impl.raw_member
segment_enters = _impl.segment_enters
segment_hits_raw = _impl.segment_hits_raw
slot_flow = _impl.slot_flow
brake_rest_x = _impl.brake_rest_x
impulse_rest_x = _impl.impulse_rest_x
pair_worst_clear = _impl.pair_worst_clear
