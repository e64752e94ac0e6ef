"""Hot inner loops with a compiled backend and a pure-Python fallback.

The compiled extension is used when it imports; setting the environment
variable ``AGDA_PL_PURE_PYTHON=1`` forces the fallback. ``BACKEND`` names the
active one and ``get_backend`` returns either module explicitly.
"""
import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

if _ckernels is not None and os.environ.get("AGDA_PL_PURE_PYTHON", "") in ("", "0"):
    _active: ModuleType = _ckernels
    BACKEND = "cython"
else:
    _active = _pykernels
    BACKEND = "python"

# divergence guard shared by every run loop
DIVERGENCE_LIMIT = 1e12

scalar_gda = _active.scalar_gda
rls_stoc_agda = _active.rls_stoc_agda
rls_vr_inner = _active.rls_vr_inner


def get_backend(name: str) -> ModuleType:
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _ckernels is not None else [])
