"""Kernel backend selection.

The compiled ``_core`` extension is used when it imports; otherwise the numpy
fallback is used. Set ``NSA_PURE_PYTHON=1`` to force the fallback and
``NSA_THREADS`` to cap the number of worker threads (0 means automatic).
"""
import os

import numpy as np

from . import _fallback

try:
    if os.environ.get("NSA_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("compiled kernels disabled by NSA_PURE_PYTHON")
    from . import _core as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _fallback
    BACKEND = "python"


def n_threads():
    try:
        return max(0, int(os.environ.get("NSA_THREADS", "0")))
    except ValueError:
        return 0


def pairwise_distances(x):
    return _impl.pairwise_distances(np.ascontiguousarray(x, dtype=np.float64), n_threads())


def gnsa_rows(z, ref, nz, eps_dist=1e-12, tie_tol=0.0):
    return _impl.gnsa_rows(
        np.ascontiguousarray(z, dtype=np.float64),
        np.ascontiguousarray(ref, dtype=np.float64),
        float(nz),
        float(eps_dist),
        float(tie_tol),
        n_threads(),
    )
