"""Hot-loop kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import: numba when it imports cleanly, unless
``TORBGP_DISABLE_NUMBA`` is set to a truthy value. Both backends take and
return plain numpy arrays and are interchangeable; tests run both.

explore(down_ptr, down_idx, up_ptr, up_idx, peer_ptr, peer_idx, src, cap)
    -> (cls int8[N], hops int32[N], count int64[N], saturated bool)
resilience(att_keys, att_counts, origin_keys, origin_counts, origin_is_att, mode)
    -> float64[len(origin_keys)]   (NaN where the attacker set is empty)
"""

from __future__ import annotations

import logging
import os

from torbgp._kernels import _numpy
from torbgp._kernels.common import (  # noqa: F401
    CLASS_SHIFT,
    CUSTOMER,
    INF_KEY,
    MODE_HIJACK,
    MODE_INTERCEPT,
    PEER,
    PROVIDER,
    rank_keys,
)

log = logging.getLogger(__name__)

_DISABLED = os.environ.get("TORBGP_DISABLE_NUMBA", "").lower() not in ("", "0", "false", "no")

numpy_backend = _numpy
numba_backend = None
if not _DISABLED:
    try:
        from torbgp._kernels import _numba as numba_backend
    except ImportError:  # pragma: no cover - numba is a declared dependency
        log.warning("numba unavailable; using the numpy kernels")

backend = numba_backend if numba_backend is not None else numpy_backend
BACKEND_NAME = "numba" if backend is numba_backend else "numpy"

explore = backend.explore
resilience = backend.resilience
