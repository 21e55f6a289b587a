"""NumPy/LAPACK implementation of the projection kernels.

Same call surface as the compiled `_jacobi` extension; used as the
pure-Python fallback when the extension is unavailable or disabled.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    return np.linalg.eigh(a)


def eigh_batch(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stacked eigendecomposition; `a` has shape (m, n, n)."""
    return np.linalg.eigh(a)


def min_eig(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(a)[0])


def psd_clip(a: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix to a Hermitian input."""
    w, v = np.linalg.eigh(a)
    w = np.maximum(w, 0.0)
    out = (v * w) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def psd_clip_batch(a: np.ndarray) -> np.ndarray:
    """Blockwise PSD projection; `a` has shape (m, n, n)."""
    w, v = np.linalg.eigh(a)
    w = np.maximum(w, 0.0)
    out = np.einsum("...ij,...j,...kj->...ik", v, w, v.conj())
    return 0.5 * (out + out.conj().swapaxes(-1, -2))
