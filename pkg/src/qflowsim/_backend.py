"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when it
is unavailable. QFLOWSIM_BACKEND=python|cython forces a choice.
"""

import os
import warnings

_choice = os.environ.get("QFLOWSIM_BACKEND", "").lower()

if _choice == "python":
    from . import _kernels_py as kernels
elif _choice == "cython":
    from . import _kernels as kernels  # noqa: F401  (raises if not built)
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        warnings.warn(
            "qflowsim compiled kernels not available; falling back to the "
            "pure-python backend (slower on large sectors)",
            RuntimeWarning, stacklevel=2)
        from . import _kernels_py as kernels

excitation_table = kernels.excitation_table
sector_hamiltonian_matrix = kernels.sector_hamiltonian
BACKEND = kernels.BACKEND
