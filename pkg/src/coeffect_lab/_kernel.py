"""Kernel selection: compiled closure when available, pure Python otherwise.

Set COEFFECT_LAB_PURE=1 to force the fallback (used by the benchmark and by
tests that cross-check the two implementations).
"""

from __future__ import annotations

import os

if os.environ.get("COEFFECT_LAB_PURE") == "1":
    from coeffect_lab._closure_py import closure_indexed

    KERNEL_KIND = "pure"
else:
    try:
        from coeffect_lab._closure_cy import closure_indexed  # type: ignore[no-redef]

        KERNEL_KIND = "compiled"
    except ImportError:
        from coeffect_lab._closure_py import closure_indexed  # type: ignore[no-redef]

        KERNEL_KIND = "pure"

__all__ = ["closure_indexed", "KERNEL_KIND"]
