"""Backend selection for the bitmask kernels.

The compiled extension is used when it imports; setting ``CCM_PURE_PYTHON=1``
forces the pure-Python fallback.
"""

from __future__ import annotations

import os

from ccm import _pykernels

if os.environ.get("CCM_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from ccm import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

transitive_closure = _impl.transitive_closure
downset_masks = _impl.downset_masks
strict_orders = _impl.strict_orders

__all__ = ["BACKEND", "transitive_closure", "downset_masks", "strict_orders"]
