"""Kernel dispatch: compiled extension when built, numpy fallback otherwise.

Set ``ORBITRESPONSE_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "numpy"
birkhoff_chains = _fallback.birkhoff_chains

if not os.environ.get("ORBITRESPONSE_PURE"):
    try:
        from ._kernels import birkhoff_chains  # noqa: F811
    except ImportError:
        pass
    else:
        BACKEND = "cython"

__all__ = ["BACKEND", "birkhoff_chains"]
