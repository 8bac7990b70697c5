"""Kernel backend selection.

The compiled extension is used when importable unless ``QLANGEVIN_BACKEND``
is set to ``python``.
"""
import os

from . import _pykernels

kernels = _pykernels
BACKEND = "python"

if os.environ.get("QLANGEVIN_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as kernels  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass
