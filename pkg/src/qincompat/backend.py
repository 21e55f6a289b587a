"""Projection-kernel backend selection.

The feasibility solvers spend nearly all their time eigendecomposing and
PSD-clipping small complex Hermitian matrices.  Two interchangeable
implementations exist:

* ``qincompat._jacobi`` -- compiled Cython cyclic-Jacobi kernels,
* ``qincompat._backend_numpy`` -- NumPy/LAPACK fallback.

Jacobi beats the LAPACK dispatch overhead for single operators up to
roughly 16x16 but loses above that (see benchmarks/bench_backend.py), so
the default backend routes by size; stacked batches always go to the
vectorized LAPACK path.  Set QINCOMPAT_PURE_PYTHON=1 to force the NumPy
implementation throughout.
"""

from __future__ import annotations

import os

from . import _backend_numpy

_JACOBI_MAX_DIM = 16

try:
    from . import _jacobi
except ImportError:
    _jacobi = None

_FORCE_NUMPY = os.environ.get("QINCOMPAT_PURE_PYTHON", "").strip() in ("1", "true", "yes")

if _jacobi is None or _FORCE_NUMPY:
    BACKEND: str = _backend_numpy.NAME
    eigh = _backend_numpy.eigh
    min_eig = _backend_numpy.min_eig
    psd_clip = _backend_numpy.psd_clip
else:
    BACKEND = _jacobi.NAME

    def eigh(a):
        if a.shape[0] <= _JACOBI_MAX_DIM:
            return _jacobi.eigh(a)
        return _backend_numpy.eigh(a)

    def min_eig(a):
        if a.shape[0] <= _JACOBI_MAX_DIM:
            return _jacobi.min_eig(a)
        return _backend_numpy.min_eig(a)

    def psd_clip(a):
        if a.shape[0] <= _JACOBI_MAX_DIM:
            return _jacobi.psd_clip(a)
        return _backend_numpy.psd_clip(a)


# stacked batches amortize the LAPACK dispatch; the vectorized path wins
eigh_batch = _backend_numpy.eigh_batch
psd_clip_batch = _backend_numpy.psd_clip_batch
