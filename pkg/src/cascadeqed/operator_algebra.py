"""Dense complex-matrix helpers shared by every other module.

Operators are plain ``numpy.ndarray`` objects of shape ``(dim, dim)``.
Composite bases are ordered ``|left> (x) |right>`` with the left factor
varying slowest, which is the ``numpy.kron`` convention.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

HERMITIAN_RTOL = 1e-12


class HermiticityError(ValueError):
    """Raised when an operator expected to be Hermitian is not."""


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more operators, leftmost factor slowest."""
    if not ops:
        raise ValueError("tensor() needs at least one operator")
    out = np.asarray(ops[0])
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op))
    return out


def dag(op: np.ndarray) -> np.ndarray:
    return np.conj(op).T


def hermitian_defect(h: np.ndarray) -> float:
    """Largest elementwise ``|h - h^dagger|``."""
    h = np.asarray(h)
    return float(np.max(np.abs(h - dag(h)))) if h.size else 0.0


def check_hermitian(h: np.ndarray, name: str = "operator") -> None:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"{name} must be square, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    defect = hermitian_defect(h)
    if defect > HERMITIAN_RTOL * scale:
        raise HermiticityError(
            f"{name} is not Hermitian: max|O - O^dagger| = {defect:.3e} "
            f"(tolerance {HERMITIAN_RTOL * scale:.1e})"
        )


def hermitian_eigs(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of ``h``.

    The input is symmetrized as ``(h + h^dagger)/2`` after the Hermiticity
    check so roundoff asymmetry never reaches LAPACK.
    """
    h = np.asarray(h)
    check_hermitian(h)
    values, basis = np.linalg.eigh(0.5 * (h + dag(h)))
    return values, basis


def func_of_hermitian(h: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a real scalar function to a Hermitian operator spectrally."""
    values, basis = hermitian_eigs(h)
    fv = np.asarray(f(values), dtype=float)
    out = (basis * fv) @ dag(basis)
    return 0.5 * (out + dag(out))


def expect(op: np.ndarray, rho: np.ndarray) -> complex:
    """``trace(op @ rho)``; ``rho`` may also be a state vector."""
    op = np.asarray(op)
    rho = np.asarray(rho)
    if rho.ndim == 1:
        if rho.shape[0] != op.shape[1]:
            raise ValueError(f"dimension mismatch: op {op.shape} vs state {rho.shape}")
        return complex(np.vdot(rho, op @ rho))
    if op.shape != rho.shape:
        raise ValueError(f"dimension mismatch: op {op.shape} vs rho {rho.shape}")
    # trace(A B) without forming the product
    return complex(np.sum(op * rho.T))


def projector(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


def basis_vector(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def destroy(n: int) -> np.ndarray:
    """Truncated bosonic annihilation operator on ``n`` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


# two-level operators with basis order (|g>, |e>)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|
SIGMA_X = SIGMA_MINUS + SIGMA_MINUS.T
SIGMA_Y = 1j * (SIGMA_MINUS - SIGMA_MINUS.T)
SIGMA_Z = SIGMA_MINUS.T @ SIGMA_MINUS - SIGMA_MINUS @ SIGMA_MINUS.T
