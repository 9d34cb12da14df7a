"""Kernel backend selection.

The compiled extension is used when importable; otherwise (or when
SVCBENCH_PURE is set to a non-empty value) the numpy implementations take
over. Both produce identical integers, so everything downstream is
backend-agnostic; only speed differs. `benchmarks/bench_kernels.py`
measures the gap.
"""

import os

if os.environ.get("SVCBENCH_PURE"):
    from . import _kernels_py as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "numpy"

sad_map = _impl.sad_map
sad4x4_tensor = _impl.sad4x4_tensor


def backend() -> str:
    return BACKEND
