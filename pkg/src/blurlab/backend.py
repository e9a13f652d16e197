"""Select the convolution core at import time.

The compiled Cython extension is preferred when it built successfully; the
pure-numpy implementation is a drop-in fallback. Override with the
BLURLAB_BACKEND environment variable ("cython" or "python").
"""

import os

_requested = os.environ.get("BLURLAB_BACKEND", "auto")

if _requested not in ("auto", "cython", "python"):
    raise ValueError(f"BLURLAB_BACKEND must be auto|cython|python, got {_requested!r}")

if _requested == "python":
    from . import _convcore_py as _impl

    name = "python"
else:
    try:
        from . import _convcore as _impl  # type: ignore[attr-defined]

        name = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _convcore_py as _impl

        name = "python"

corr_forward = _impl.corr_forward
corr_backward_input = _impl.corr_backward_input
corr_backward_weight = _impl.corr_backward_weight
