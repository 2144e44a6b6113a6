"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting ``VVLAB_PURE=1``
forces the numpy fallback.  ``BACKEND`` names the active choice.
"""
import os

from . import _kernels_py

try:
    if os.environ.get("VVLAB_PURE", "") == "1":
        raise ImportError("pure backend requested")
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _kernels_py
    BACKEND = "numpy"

BACKENDS = {"numpy": _kernels_py}
if BACKEND == "compiled":
    BACKENDS["compiled"] = _impl

q_sum = _impl.q_sum
area_sum = _impl.area_sum
stencil_rhs = _impl.stencil_rhs
