"""Dense complex linear algebra for systems of at most three qubits.

Operators are plain ``numpy`` arrays of dtype ``complex128``: square matrices
for operators, 1-D arrays for pure states.  Nothing here mutates its inputs.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionMismatchError,
    NoConvergenceError,
    NotHermitianError,
)

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
NORM_TOL = 1e-12


class EigenDecomposition(NamedTuple):
    """Ascending real eigenvalues and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite square complex matrix."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatchError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_state(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatchError(f"expected a non-empty 1-D state, got shape {v.shape}")
    return v


def normalize(psi) -> np.ndarray:
    v = as_state(psi)
    n = np.linalg.norm(v)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("cannot normalize a zero or non-finite vector")
    return v / n


def hermiticity_defect(h) -> float:
    """Largest entry of ``|h - h†|``."""
    m = as_matrix(h)
    return float(np.max(np.abs(m - m.conj().T)))


def unitarity_defect(u) -> float:
    """Largest entry of ``|u†u - 1|``."""
    m = as_matrix(u)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


def _require_hermitian(m: np.ndarray) -> None:
    defect = float(np.max(np.abs(m - m.conj().T)))
    if defect > HERMITIAN_TOL:
        raise NotHermitianError(f"matrix is not Hermitian (max |H - H†| = {defect:.3e})")


def kron(a, b) -> np.ndarray:
    """Tensor product with the left factor as the slow (most significant) index."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(*factors) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for f in factors:
        out = np.kron(out, as_matrix(f))
    return out


def herm_eig(h) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvectors inside a degenerate eigenspace are an arbitrary orthonormal
    basis of that space; callers compare eigenspaces, not individual vectors.

    Raises:
        NotHermitianError: if ``max|h - h†| > 1e-10``.
        NoConvergenceError: if LAPACK fails to converge.
    """
    m = as_matrix(h)
    _require_hermitian(m)
    # symmetrize so roundoff-level anti-Hermitian parts cannot leak into eigh
    m = 0.5 * (m + m.conj().T)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(str(exc)) from exc
    return EigenDecomposition(w, v)


def propagator(h, t: float) -> np.ndarray:
    """Return ``exp(-i h t)`` built from the spectral decomposition of ``h``."""
    w, v = herm_eig(h)
    return (v * np.exp(-1j * w * float(t))) @ v.conj().T


def apply(u, psi) -> np.ndarray:
    """Apply the unitary ``u`` to the state ``psi``."""
    m = as_matrix(u)
    v = as_state(psi)
    if m.shape[1] != v.shape[0]:
        raise DimensionMismatchError(
            f"operator of dimension {m.shape[0]} cannot act on a state of dimension {v.shape[0]}"
        )
    return m @ v


def expectation(psi, o) -> float:
    """Real expectation value ``<psi|o|psi>`` of a Hermitian observable."""
    m = as_matrix(o)
    v = as_state(psi)
    if m.shape[0] != v.shape[0]:
        raise DimensionMismatchError(
            f"observable of dimension {m.shape[0]} vs state of dimension {v.shape[0]}"
        )
    _require_hermitian(m)
    # imaginary part is pure roundoff once m is Hermitian
    return float(np.vdot(v, m @ v).real)


def expectations(states: np.ndarray, o: np.ndarray) -> np.ndarray:
    """Row-wise ``<psi_k|o|psi_k>`` for a stack of states of shape ``(K, dim)``."""
    return np.einsum("ki,ij,kj->k", states.conj(), o, states).real

