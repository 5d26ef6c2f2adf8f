"""Hot-loop kernels: compiled extension when available, NumPy fallback.

The compiled backend is built from `_fastimpl.pyx` (Cython).  Import-time
selection; `tilecodes._kernels.BACKEND` reports which one is active.
"""

from __future__ import annotations

import os

if os.environ.get("TILECODES_FORCE_PY"):
    from ._pyimpl import BACKEND, match_positions, sliding_codes_1d, sliding_codes_2d
else:
    try:
        from ._fastimpl import (  # type: ignore[attr-defined]
            BACKEND,
            match_positions,
            sliding_codes_1d,
            sliding_codes_2d,
        )
    except ImportError:
        from ._pyimpl import (
            BACKEND,
            match_positions,
            sliding_codes_1d,
            sliding_codes_2d,
        )

__all__ = ["BACKEND", "sliding_codes_1d", "sliding_codes_2d", "match_positions"]
