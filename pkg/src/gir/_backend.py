"""Select the kernel backend at import time.

The compiled extension is preferred.  Setting ``GIR_PURE_PYTHON=1`` forces
the pure-Python fallback, which is also used when the extension is missing.
"""

import logging
import os

from . import _pykernels
from .models import MODEL_IDS

log = logging.getLogger(__name__)


def _load():
    if os.environ.get("GIR_PURE_PYTHON", "") not in ("", "0"):
        return _pykernels
    try:
        from . import _kernels
    except ImportError as exc:
        log.debug("compiled kernels unavailable (%s); using pure Python", exc)
        return _pykernels
    if tuple(_kernels.MODEL_ORDER) != MODEL_IDS:
        raise ImportError("gir._kernels model table is out of date; rebuild the extension")
    return _kernels


kernels = _load()
BACKEND = kernels.BACKEND
