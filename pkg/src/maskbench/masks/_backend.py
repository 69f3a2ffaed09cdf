"""Kernel backend selection.

The compiled extension is preferred when present; MASKBENCH_KERNELS=py or
=cy forces one side (forcing the extension raises if it was never built).
"""

import os

_forced = os.environ.get("MASKBENCH_KERNELS", "").strip().lower()

if _forced in ("py", "python"):
    from . import _kernels_py as kernels
elif _forced in ("cy", "cython"):
    from . import _kernels_cy as kernels  # type: ignore[no-redef]
elif _forced:
    raise RuntimeError(f"MASKBENCH_KERNELS={_forced!r} not recognized (use 'py' or 'cy')")
else:
    try:
        from . import _kernels_cy as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels


def backend_name() -> str:
    return kernels.BACKEND_NAME
