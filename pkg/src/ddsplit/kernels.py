"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``DDSPLIT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels as python

BACKEND = "python"
compiled = None
if os.environ.get("DDSPLIT_PURE_PYTHON", "").lower() not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None
    else:
        BACKEND = "compiled"

_impl = compiled if compiled is not None else python

tridiag_factor = _impl.tridiag_factor
tridiag_solve = _impl.tridiag_solve
potential_resolvent = _impl.potential_resolvent
