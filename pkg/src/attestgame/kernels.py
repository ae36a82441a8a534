"""Selects the enumeration kernel: compiled extension if available, NumPy fallback otherwise.

Set ATTESTGAME_PURE_PYTHON=1 to force the fallback (used by the benchmark
and the kernel-equivalence tests).
"""

from __future__ import annotations

import os

if os.environ.get("ATTESTGAME_PURE_PYTHON"):
    from . import _core_py as _impl

    IMPLEMENTATION = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        IMPLEMENTATION = "compiled"
    except ImportError:
        from . import _core_py as _impl

        IMPLEMENTATION = "python"

best_attack = _impl.best_attack
best_attack_batch = _impl.best_attack_batch
HARD_LIMIT = _impl.HARD_LIMIT
