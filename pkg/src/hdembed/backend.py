"""Kernel backend selection.

The packed-bit kernels exist twice: a Cython extension (``hdembed._kernels``)
and a pure-numpy fallback (``hdembed._kernels_np``). The compiled one is
preferred when importable. Set ``HDEMBED_KERNELS=numpy`` or ``=cython`` to
force a backend; forcing ``cython`` raises if the extension is missing.
"""

import os

_requested = os.environ.get("HDEMBED_KERNELS", "").strip().lower()
if _requested not in ("", "cython", "numpy"):
    raise RuntimeError(
        f"HDEMBED_KERNELS must be 'cython' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    from . import _kernels_np as kernels

    BACKEND = "numpy"
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _kernels_np as kernels  # type: ignore[no-redef]

        BACKEND = "numpy"


def available_backends():
    """Importable kernel backends as {name: module}, compiled one first."""
    out = {}
    try:
        from . import _kernels

        out["cython"] = _kernels
    except ImportError:
        pass
    from . import _kernels_np

    out["numpy"] = _kernels_np
    return out
