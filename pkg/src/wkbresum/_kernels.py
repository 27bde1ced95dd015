"""Select the compiled Sturm kernel when available, else the numpy fallback.

Set ``WKB_RESUM_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("WKB_RESUM_PURE_PYTHON", "") not in ("", "0"):
    from ._sturm_py import bisect_eigenvalues, sturm_count

    BACKEND = "python"
else:
    try:
        from ._sturm import bisect_eigenvalues, sturm_count

        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._sturm_py import bisect_eigenvalues, sturm_count

        BACKEND = "python"

__all__ = ["BACKEND", "bisect_eigenvalues", "sturm_count"]
