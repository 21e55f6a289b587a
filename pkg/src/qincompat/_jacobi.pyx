# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled projection kernels: cyclic Jacobi for complex Hermitian matrices.

Mirrors the call surface of ``qincompat._backend_numpy``.  The Jacobi sweep
is quadratically convergent and, for the small operators handled here
(dimension <= ~125), avoids the per-call overhead of a LAPACK dispatch.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

from libc.math cimport fabs, sqrt

NAME = "jacobi"

ctypedef cnp.complex128_t cplx

cdef double _EPS = 1e-14
cdef int _MAX_SWEEPS = 60


cdef double _off_norm(cplx[:, ::1] a, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(i + 1, n):
            s += 2.0 * (a[i, j].real * a[i, j].real + a[i, j].imag * a[i, j].imag)
    return sqrt(s)


cdef void _jacobi_sweeps(cplx[:, ::1] a, cplx[:, ::1] v, Py_ssize_t n, bint want_vectors) noexcept nogil:
    cdef Py_ssize_t p, q, i, sweep
    cdef double app, aqq, absb, tau, t, c, s, scale
    cdef double phr, phi  # unit phase of a[p, q]
    cdef cplx apq, tmp_p, tmp_q, sph, sphc
    cdef double thresh

    scale = 0.0
    for i in range(n):
        for p in range(n):
            scale += a[i, p].real * a[i, p].real + a[i, p].imag * a[i, p].imag
    scale = sqrt(scale)
    if scale == 0.0:
        return
    thresh = _EPS * scale

    for sweep in range(_MAX_SWEEPS):
        if _off_norm(a, n) <= thresh:
            return
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                absb = sqrt(apq.real * apq.real + apq.imag * apq.imag)
                if absb <= thresh / (n * n):
                    continue
                phr = apq.real / absb
                phi = apq.imag / absb
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * absb)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(tau * tau + 1.0))
                else:
                    t = -1.0 / (-tau + sqrt(tau * tau + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                sph.real = s * phr
                sph.imag = s * phi
                sphc.real = s * phr
                sphc.imag = -s * phi

                a[p, p].real = app - t * absb
                a[p, p].imag = 0.0
                a[q, q].real = aqq + t * absb
                a[q, q].imag = 0.0
                a[p, q].real = 0.0
                a[p, q].imag = 0.0
                a[q, p].real = 0.0
                a[q, p].imag = 0.0

                for i in range(n):
                    if i == p or i == q:
                        continue
                    tmp_p = a[i, p]
                    tmp_q = a[i, q]
                    a[i, p].real = c * tmp_p.real - (sphc.real * tmp_q.real - sphc.imag * tmp_q.imag)
                    a[i, p].imag = c * tmp_p.imag - (sphc.real * tmp_q.imag + sphc.imag * tmp_q.real)
                    a[i, q].real = sph.real * tmp_p.real - sph.imag * tmp_p.imag + c * tmp_q.real
                    a[i, q].imag = sph.real * tmp_p.imag + sph.imag * tmp_p.real + c * tmp_q.imag
                    a[p, i].real = a[i, p].real
                    a[p, i].imag = -a[i, p].imag
                    a[q, i].real = a[i, q].real
                    a[q, i].imag = -a[i, q].imag

                if want_vectors:
                    for i in range(n):
                        tmp_p = v[i, p]
                        tmp_q = v[i, q]
                        v[i, p].real = c * tmp_p.real - (sphc.real * tmp_q.real - sphc.imag * tmp_q.imag)
                        v[i, p].imag = c * tmp_p.imag - (sphc.real * tmp_q.imag + sphc.imag * tmp_q.real)
                        v[i, q].real = sph.real * tmp_p.real - sph.imag * tmp_p.imag + c * tmp_q.real
                        v[i, q].imag = sph.real * tmp_p.imag + sph.imag * tmp_p.real + c * tmp_q.imag


def _decompose(a, bint want_vectors):
    cdef cnp.ndarray[cplx, ndim=2] work = np.array(a, dtype=np.complex128, order="C")
    cdef Py_ssize_t n = work.shape[0]
    cdef cnp.ndarray[cplx, ndim=2] vec = np.eye(n, dtype=np.complex128)
    _jacobi_sweeps(work, vec, n, want_vectors)
    w = np.diagonal(work).real.copy()
    order = np.argsort(w, kind="stable")
    if want_vectors:
        return w[order], np.ascontiguousarray(vec[:, order])
    return w[order], None


def eigh(a):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    w, v = _decompose(a, True)
    return w, v


def eigh_batch(a):
    """Stacked eigendecomposition; `a` has shape (m, n, n)."""
    a = np.asarray(a, dtype=np.complex128)
    m, n = a.shape[0], a.shape[1]
    ws = np.empty((m, n), dtype=float)
    vs = np.empty((m, n, n), dtype=np.complex128)
    for i in range(m):
        ws[i], vs[i] = _decompose(a[i], True)
    return ws, vs


def min_eig(a):
    w, _ = _decompose(a, False)
    return float(w[0])


cdef void _reconstruct_clipped(cplx[:, ::1] v, double[::1] w, cplx[:, ::1] out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double wk
    cdef double acc_r, acc_i
    for i in range(n):
        for j in range(i, n):
            acc_r = 0.0
            acc_i = 0.0
            for k in range(n):
                wk = w[k]
                if wk <= 0.0:
                    continue
                # v[i,k] * wk * conj(v[j,k])
                acc_r += wk * (v[i, k].real * v[j, k].real + v[i, k].imag * v[j, k].imag)
                acc_i += wk * (v[i, k].imag * v[j, k].real - v[i, k].real * v[j, k].imag)
            out[i, j].real = acc_r
            out[i, j].imag = acc_i
            out[j, i].real = acc_r
            out[j, i].imag = -acc_i


def psd_clip(a):
    """Frobenius-nearest PSD matrix to a Hermitian input."""
    cdef cnp.ndarray[cplx, ndim=2] work = np.array(a, dtype=np.complex128, order="C")
    cdef Py_ssize_t n = work.shape[0]
    cdef cnp.ndarray[cplx, ndim=2] vec = np.eye(n, dtype=np.complex128)
    _jacobi_sweeps(work, vec, n, True)
    cdef cnp.ndarray[double, ndim=1] w = np.diagonal(work).real.copy()
    cdef cnp.ndarray[cplx, ndim=2] out = np.empty((n, n), dtype=np.complex128)
    _reconstruct_clipped(vec, w, out, n)
    return out


def psd_clip_batch(a):
    """Blockwise PSD projection; `a` has shape (m, n, n)."""
    a = np.asarray(a, dtype=np.complex128)
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    cdef cnp.ndarray[cplx, ndim=3] out = np.empty((m, n, n), dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=2] work
    cdef cnp.ndarray[cplx, ndim=2] vec
    cdef cnp.ndarray[double, ndim=1] w
    cdef Py_ssize_t i
    for i in range(m):
        work = np.array(a[i], dtype=np.complex128, order="C")
        vec = np.eye(n, dtype=np.complex128)
        _jacobi_sweeps(work, vec, n, True)
        w = np.diagonal(work).real.copy()
        _reconstruct_clipped(vec, w, out[i], n)
    return out
