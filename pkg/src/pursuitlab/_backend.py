"""Stepping-backend selection.

The compiled kernel (``_stepcore``, built from Cython) is preferred when
importable; otherwise the pure NumPy fallback (``_stepcore_py``) is used.
Both produce bit-identical results, so the choice only affects speed.

Override with the environment variable ``PURSUITLAB_BACKEND``:
``python`` forces the fallback, ``compiled`` requires the extension
(raising ImportError when it is missing), ``auto`` (default) prefers the
extension.
"""

import os

from . import _stepcore_py

_choice = os.environ.get("PURSUITLAB_BACKEND", "auto")
if _choice not in ("auto", "python", "compiled"):
    raise ValueError(
        f"PURSUITLAB_BACKEND must be 'auto', 'python' or 'compiled', "
        f"got {_choice!r}")

if _choice == "python":
    _impl = _stepcore_py
    BACKEND = "python"
else:
    try:
        from . import _stepcore as _impl
        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _stepcore_py
        BACKEND = "python"

compute_speeds = _impl.compute_speeds


def backend_name():
    """Name of the active stepping backend: 'compiled' or 'python'."""
    return BACKEND
