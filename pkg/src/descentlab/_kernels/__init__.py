"""Hot-loop kernels with a compiled implementation and a numpy fallback.

The backend is picked at import: the Cython extension when it was built,
otherwise the pure-numpy module.  ``DESCENTLAB_BACKEND=python`` forces the
fallback; ``DESCENTLAB_BACKEND=cython`` makes a missing extension an error.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_requested = os.environ.get("DESCENTLAB_BACKEND", "auto").lower()
if _requested not in ("auto", "python", "cython"):
    raise ImportError(f"DESCENTLAB_BACKEND must be auto, python or cython, not {_requested!r}")
if _requested == "cython" and _ckernels is None:
    raise ImportError("DESCENTLAB_BACKEND=cython but descentlab._kernels._ckernels is not built")

if _ckernels is not None and _requested != "python":
    BACKEND = "cython"
    _impl = _ckernels
else:
    BACKEND = "python"
    _impl = _pykernels

sgd_epoch = _impl.sgd_epoch


def available_backends():
    return ["python"] + (["cython"] if _ckernels is not None else [])


def get_backend(name):
    """Kernel module by name, for tests and benchmarks comparing both."""
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
