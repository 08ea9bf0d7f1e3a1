"""Composite model of two unidirectionally coupled subsystems.

Everything lives in the advanced time frame of the downstream subsystem:
the propagation delay never enters the generator, only the two-time
correlations.  Channel order is fixed; index 0 is the collective
input/output channel that the single-photon source terms bind to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .operator_algebra import basis_vector, check_hermitian, dag, hermitian_eigs, tensor
from .rabi import DressedSubsystem

CHANNEL_NAMES = ("collective", "lost", "qubit1", "qubit2")


@dataclass(frozen=True)
class CascadeParams:
    kappa1: float = 0.004
    kappa2: float = 0.001
    gamma1: float = 0.0
    gamma2: float = 0.0
    G: float = 1.0

    def __post_init__(self):
        if not (self.kappa1 > 0 and self.kappa2 > 0):
            raise ValueError("kappa1 and kappa2 must be positive")
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ValueError("gamma1 and gamma2 must be non-negative")
        if not 0.0 <= self.G <= 1.0:
            raise ValueError(f"G must lie in [0, 1], got {self.G}")


@dataclass(frozen=True, eq=False)
class CompositeModel:
    sub1: DressedSubsystem
    sub2: DressedSubsystem
    params: CascadeParams
    H: np.ndarray
    lindblads: tuple[np.ndarray, ...]
    observables: dict[str, np.ndarray] = field(repr=False)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def L0(self) -> np.ndarray:
        return self.lindblads[0]

    @property
    def ground(self) -> np.ndarray:
        return composite_ground(self)

    @property
    def ground_energy(self) -> float:
        return float(self.sub1.energies[0] + self.sub2.energies[0])

    @cached_property
    def energies(self) -> np.ndarray:
        return hermitian_eigs(self.H)[0]

    @cached_property
    def decay_operator(self) -> np.ndarray:
        """``sum_n L_n^dagger L_n``."""
        return sum(dag(L) @ L for L in self.lindblads)

    @cached_property
    def h_eff(self) -> np.ndarray:
        return self.H - 0.5j * self.decay_operator


def assemble(d1: DressedSubsystem, d2: DressedSubsystem, p: CascadeParams) -> CompositeModel:
    n1, n2 = d1.n_keep, d2.n_keep
    e1, e2 = np.eye(n1), np.eye(n2)
    A1, A2 = tensor(d1.A, e2), tensor(e1, d2.A)
    S1, S2 = tensor(d1.S, e2), tensor(e1, d2.S)

    coupling = 0.5j * np.sqrt(p.G * p.kappa1 * p.kappa2) * (dag(A1) @ A2 - A1 @ dag(A2))
    H = tensor(np.diag(d1.energies), e2) + tensor(e1, np.diag(d2.energies)) + coupling
    H = 0.5 * (H + dag(H))
    check_hermitian(H, "composite Hamiltonian")

    lindblads = (
        np.sqrt(p.kappa1) * A1 + np.sqrt(p.G * p.kappa2) * A2,
        np.sqrt(p.kappa2 * (1.0 - p.G)) * A2,
        np.sqrt(p.gamma1) * S1,
        np.sqrt(p.gamma2) * S2,
    )
    observables = {
        "A1": A1,
        "A2": A2,
        "S1": S1,
        "S2": S2,
        "S1dagS1": dag(S1) @ S1,
        "S2dagS2": dag(S2) @ S2,
        "A1dagA1": dag(A1) @ A1,
        "A2dagA2": dag(A2) @ A2,
    }
    return CompositeModel(sub1=d1, sub2=d2, params=p, H=H, lindblads=lindblads, observables=observables)


def composite_ground(model: CompositeModel) -> np.ndarray:
    """``|0_1 0_2>``: the first vector of the kept product eigenbasis."""
    return basis_vector(model.dim, 0)


def liouvillian_apply(model: CompositeModel, rho: np.ndarray) -> np.ndarray:
    """Lindblad generator on an arbitrary (not necessarily Hermitian) matrix."""
    rho = np.asarray(rho)
    if rho.shape != model.H.shape:
        raise ValueError(f"dimension mismatch: rho {rho.shape} vs model {model.H.shape}")
    heff = model.h_eff
    out = -1j * (heff @ rho - rho @ dag(heff))
    for L in model.lindblads:
        out += L @ rho @ dag(L)
    return out


def liouvillian_superoperator(model: CompositeModel) -> np.ndarray:
    """Matrix of the generator acting on row-major ``rho.ravel()``.

    Uses ``vec(A X B) = kron(A, B.T) vec(X)`` for row-major vectorization.
    """
    d = model.dim
    eye = np.eye(d)
    heff = model.h_eff
    sup = -1j * (np.kron(heff, eye) - np.kron(eye, heff.conj()))
    for L in model.lindblads:
        sup += np.kron(L, L.conj())
    return sup
