"""Dense complex linear-algebra primitives shared by the other modules.

Matrices are plain ``numpy.ndarray`` of complex128; everything here is a
pure function.  Dimensions never exceed 6x6, so double precision leaves
ample headroom for the stated tolerances.
"""

import numpy as np

from . import kernels

HERMITIAN_TOL = 1e-10
EIGENVALUE_CLAMP = 1e-10


def tensor(a, b):
    """Kronecker product; row index convention (i_a * b.rows + i_b)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def permanent(a):
    """Matrix permanent of a square complex matrix (Ryser expansion).

    Raises
    ------
    ValueError
        If the input is not square.
    """
    a = np.ascontiguousarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent requires a square matrix, got shape {a.shape}")
    return complex(kernels.permanent(a))


def hermiticity_defect(h):
    """Max-entry norm of (h - h†)."""
    h = np.asarray(h, dtype=complex)
    return float(np.max(np.abs(h - h.conj().T)))


def psd_sqrt(h):
    """Hermitian PSD square root via spectral decomposition.

    Eigenvalues in [-1e-10, 0) are clamped to zero; anything more negative
    is rejected, as is a non-Hermitian input.
    """
    h = np.asarray(h, dtype=complex)
    defect = hermiticity_defect(h)
    if defect > HERMITIAN_TOL:
        raise ValueError(f"input is not Hermitian (defect {defect:.3e})")
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    if w.min() < -EIGENVALUE_CLAMP:
        raise ValueError(f"eigenvalue {w.min():.3e} below the -1e-10 clamp threshold")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def unitarity_defect(u):
    """Max-entry norm of (u†u - I)."""
    u = np.asarray(u, dtype=complex)
    n = u.shape[0]
    return float(np.max(np.abs(u.conj().T @ u - np.eye(n))))


def align_global_phase(m):
    """Rotate a matrix (or vector) so its largest-magnitude entry is real positive.

    Used before comparisons that are only meaningful up to a global phase.
    """
    m = np.asarray(m, dtype=complex)
    k = np.unravel_index(np.argmax(np.abs(m)), m.shape)
    pivot = m[k]
    if abs(pivot) == 0.0:
        return m.copy()
    return m * (abs(pivot) / pivot)
