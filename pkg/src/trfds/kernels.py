"""Backend selection for the numerical kernels.

The compiled extension ``_ckernels`` is used when it imports cleanly; the
pure-Python ``_pykernels`` module is the fallback. Setting the environment
variable ``TRFDS_PURE_PYTHON=1`` forces the fallback.
"""
import os

from ._pykernels import (  # noqa: F401
    MODEL_DECAY,
    MODEL_PREDPREY,
    SET_BALL,
    SET_BOX,
    STATUS_MAX_STEPS,
    STATUS_NONFINITE,
    STATUS_OK,
    STATUS_STEP_UNDERFLOW,
)

_impl = None
if not os.environ.get("TRFDS_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = None
if _impl is None:
    from . import _pykernels as _impl

BACKEND = "cython" if _impl.__name__.endswith("_ckernels") else "python"

dykstra = _impl.dykstra
fista = _impl.fista
dopri5 = _impl.dopri5
