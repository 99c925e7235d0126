"""Kernel backend selection.

The compiled extension is preferred; set ``PRCS_TOMO_PURE_PYTHON=1`` to force
the numpy fallback. ``BACKEND`` names the active implementation.
"""
import os

if os.environ.get("PRCS_TOMO_PURE_PYTHON", "") not in ("", "0"):
    from ._pykernels import fock_density_table, fock_mixture, i0e

    BACKEND = "python"
else:
    try:
        from ._ckernels import fock_density_table, fock_mixture, i0e

        BACKEND = "cython"
    except ImportError:
        from ._pykernels import fock_density_table, fock_mixture, i0e

        BACKEND = "python"

__all__ = ["BACKEND", "fock_density_table", "fock_mixture", "i0e"]
