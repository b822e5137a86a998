"""Hot numeric kernels with two interchangeable backends.

The env var ``SSCAE_BACKEND`` selects the implementation:

* ``numba`` — jit-compiled loops (the default when numba imports cleanly)
* ``numpy`` — pure-numpy fallback, no compilation

Both backends compute the same quantities; tests and the benchmark under
``benchmarks/`` compare them directly.  Selection happens once at import.
"""

import os

from . import numpy_backend

_requested = os.environ.get("SSCAE_BACKEND", "auto").lower()

if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(f"SSCAE_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numpy":
    _impl = numpy_backend
else:
    try:
        from . import numba_backend as _impl
    except ImportError:
        if _requested == "numba":
            raise
        _impl = numpy_backend

BACKEND = _impl.NAME

corr_valid = _impl.corr_valid
corr_valid_grad_w = _impl.corr_valid_grad_w
full_conv = _impl.full_conv
maxpool = _impl.maxpool
unpool = _impl.unpool
gather = _impl.gather
