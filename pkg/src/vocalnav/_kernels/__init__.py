"""Hot per-frame kernels with a compiled core and a pure-numpy fallback.

The compiled extension is preferred when present; setting the environment
variable ``VOCALNAV_PURE_PYTHON=1`` forces the fallback (used by the parity
tests and the benchmark). ``KERNEL_BACKEND`` names the active one.
"""

from __future__ import annotations

import os

if os.environ.get("VOCALNAV_PURE_PYTHON"):
    from . import _reference as _impl

    KERNEL_BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        KERNEL_BACKEND = "compiled"
    except ImportError:
        from . import _reference as _impl  # type: ignore[no-redef]

        KERNEL_BACKEND = "python"

frame_count = _impl.frame_count
frame_rms = _impl.frame_rms
acf_pitch = _impl.acf_pitch

__all__ = ["KERNEL_BACKEND", "frame_count", "frame_rms", "acf_pitch"]
