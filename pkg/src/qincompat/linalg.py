"""Dense complex linear algebra primitives.

All operators are numpy ``complex128`` square arrays.  Tensor factors are
indexed with subsystem 1 as the slowest-varying index, i.e. ``kron(a, b)``
puts ``a`` on subsystem 1; every partial operation below follows this
convention.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import backend
from .errors import DimensionError, NotHermitianError

HERM_TOL = 1e-10


class EigDecomposition(NamedTuple):
    """Spectral decomposition M = V diag(w) V† with `w` ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_operator(m) -> np.ndarray:
    """Coerce to a square complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def require_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> np.ndarray:
    m = as_operator(m)
    dev = float(np.max(np.abs(m - m.conj().T)))
    if dev > tol:
        raise NotHermitianError(f"max |M - M†| = {dev:.3e} exceeds {tol:.1e}")
    return m


def kron(a, b) -> np.ndarray:
    """Tensor product with the second factor fastest-varying."""
    return np.kron(as_operator(a), as_operator(b))


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    out = np.array([[1.0 + 0.0j]])
    for m in mats:
        out = np.kron(out, as_operator(m))
    return out


def _check_dims(m: np.ndarray, dims: Sequence[int]) -> list[int]:
    dims = [int(d) for d in dims]
    if any(d <= 0 for d in dims):
        raise DimensionError(f"factor dimensions must be positive, got {dims}")
    if math.prod(dims) != m.shape[0]:
        raise DimensionError(
            f"factor dimensions {dims} do not multiply to matrix size {m.shape[0]}"
        )
    return dims


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out all tensor factors not listed in `keep`.

    `dims` lists the factor dimensions slowest-first; `keep` holds 0-based
    factor indices.  The result acts on the kept factors in their original
    order.
    """
    m = as_operator(m)
    dims = _check_dims(m, dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep or any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep={keep} is not a nonempty subset of 0..{n - 1}")
    row = [chr(ord("a") + i) for i in range(n)]
    col = [row[i] if i not in keep else chr(ord("A") + i) for i in range(n)]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    sub = "".join(row) + "".join(col) + "->" + out
    dkeep = math.prod(dims[i] for i in keep)
    return np.einsum(sub, m.reshape(dims + dims)).reshape(dkeep, dkeep)


def partial_transpose(m, dims: Sequence[int], systems: Iterable[int]) -> np.ndarray:
    """Transpose the listed tensor factors in place."""
    m = as_operator(m)
    dims = _check_dims(m, dims)
    n = len(dims)
    systems = set(int(s) for s in systems)
    if any(s < 0 or s >= n for s in systems):
        raise DimensionError(f"systems={sorted(systems)} out of range for {n} factors")
    perm = list(range(2 * n))
    for s in systems:
        perm[s], perm[n + s] = perm[n + s], perm[s]
    return m.reshape(dims + dims).transpose(perm).reshape(m.shape)


def _fix_phases(v: np.ndarray) -> np.ndarray:
    """Rotate each eigenvector so its first significant entry is real positive."""
    v = v.copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        idx = int(np.argmax(np.abs(col) > 1e-8 * max(1.0, np.max(np.abs(col)))))
        pivot = col[idx]
        if abs(pivot) > 0:
            v[:, k] = col * (abs(pivot) / pivot)
    return v


def hermitian_eig(m, tol: float = HERM_TOL) -> EigDecomposition:
    """Eigendecomposition with ascending eigenvalues and fixed vector phases."""
    m = require_hermitian(m, tol)
    w, v = backend.eigh(hermitize(m))
    return EigDecomposition(np.asarray(w, dtype=float), _fix_phases(np.asarray(v)))


def psd_project(m, tol: float = HERM_TOL) -> np.ndarray:
    """Frobenius-nearest PSD matrix: clip negative eigenvalues."""
    m = require_hermitian(m, tol)
    return backend.psd_clip(hermitize(m))


def min_eigenvalue(m, tol: float = HERM_TOL) -> float:
    m = require_hermitian(m, tol)
    return backend.min_eig(hermitize(m))


def simplex_project(w: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    w = np.asarray(w, dtype=float)
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, len(w) + 1)
    cond = u - css / ks > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = css[rho] / (rho + 1)
    return np.maximum(w - theta, 0.0)
