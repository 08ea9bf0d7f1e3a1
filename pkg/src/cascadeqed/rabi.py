"""Single qubit-cavity subsystem in the ultrastrong-coupling regime.

The bare Hamiltonian (units of the qubit frequency, hbar = 1) is::

    H = wc a^dag a + (wq/2) { sz [sin^2 th + cos^2 th cos(2 eta X)]
                              + sy cos th sin(2 eta X)
                              + sx sin(2 th) sin^2(eta X) }

with ``X = a + a^dag``.  Operator trig functions are evaluated spectrally on
the truncated ``X``.  Physical cavity and qubit transition operators are
rebuilt in the eigenbasis keeping only energy-lowering matrix elements, so
the dressed ground state never shows spurious excitation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operator_algebra import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    dag,
    destroy,
    func_of_hermitian,
    hermitian_eigs,
    tensor,
)

CONVERGENCE_TOL = 1e-6


@dataclass(frozen=True)
class SubsystemSpec:
    omega_c: float
    eta: float
    theta: float
    omega_q: float = 1.0
    n_fock: int = 30
    n_keep: int = 8

    def __post_init__(self):
        if self.n_fock < 2:
            raise ValueError(f"n_fock must be >= 2, got {self.n_fock}")
        if self.n_keep < 2:
            raise ValueError(f"n_keep must be >= 2, got {self.n_keep}")
        if self.n_keep > 2 * self.n_fock:
            raise ValueError(f"n_keep={self.n_keep} exceeds the bare dimension 2*n_fock={2 * self.n_fock}")
        if not self.omega_c > 0 or not self.omega_q > 0:
            raise ValueError("omega_c and omega_q must be positive")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if not 0 <= self.theta < np.pi / 2:
            raise ValueError(f"theta must lie in [0, pi/2), got {self.theta}")

    def with_(self, **changes) -> "SubsystemSpec":
        return SubsystemSpec(**{**self.__dict__, **changes})


@dataclass(frozen=True)
class DressedSubsystem:
    spec: SubsystemSpec
    energies: np.ndarray  # ascending, length n_keep
    A: np.ndarray
    S: np.ndarray
    eigvecs: np.ndarray = field(repr=False)  # (2*n_fock, n_keep), bare -> kept eigenbasis

    @property
    def n_keep(self) -> int:
        return len(self.energies)

    @property
    def gaps(self) -> np.ndarray:
        return self.energies - self.energies[0]


def build_bare_hamiltonian(spec: SubsystemSpec) -> np.ndarray:
    n = spec.n_fock
    a = destroy(n)
    x = a + dag(a)
    eta, th = spec.eta, spec.theta
    eye_f = np.eye(n)

    if eta == 0:
        # exact decoupled limit, free of eigensolver roundoff
        cos2, sin2, sinsq = eye_f, np.zeros((n, n)), np.zeros((n, n))
    else:
        cos2 = func_of_hermitian(x, lambda v: np.cos(2 * eta * v))
        sin2 = func_of_hermitian(x, lambda v: np.sin(2 * eta * v))
        sinsq = func_of_hermitian(x, lambda v: np.sin(eta * v) ** 2)

    qubit = (
        tensor(SIGMA_Z, np.sin(th) ** 2 * eye_f + np.cos(th) ** 2 * cos2)
        + np.cos(th) * tensor(SIGMA_Y, sin2)
        + np.sin(2 * th) * tensor(SIGMA_X, sinsq)
    )
    h = spec.omega_c * tensor(np.eye(2), dag(a) @ a) + 0.5 * spec.omega_q * qubit
    return 0.5 * (h + dag(h))


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude component of each column made real positive
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(lead) / lead)


def _lowering_part(op: np.ndarray) -> np.ndarray:
    return np.triu(op, k=1)


def dress(spec: SubsystemSpec) -> DressedSubsystem:
    """Diagonalize the bare Hamiltonian and build dressed ``A`` and ``S``."""
    h = build_bare_hamiltonian(spec)
    values, vecs = hermitian_eigs(h)
    keep = spec.n_keep
    vecs = _fix_phases(vecs[:, :keep])
    values = values[:keep]

    n = spec.n_fock
    a = destroy(n)
    x_bare = tensor(np.eye(2), a + dag(a))
    s_bare = np.cos(spec.theta) * tensor(SIGMA_X, np.eye(n)) + np.sin(spec.theta) * tensor(SIGMA_Z, np.eye(n))

    A = _lowering_part(dag(vecs) @ x_bare @ vecs)
    S = _lowering_part(dag(vecs) @ s_bare @ vecs)
    return DressedSubsystem(spec=spec, energies=values, A=A, S=S, eigvecs=vecs)


@dataclass
class ConvergenceRow:
    n_fock: int
    energies: np.ndarray
    norm_A: float
    norm_S: float
    max_shift: float | None  # vs previous truncation
    converged: bool


def convergence_report(spec: SubsystemSpec, n_fock_list) -> list[ConvergenceRow]:
    """Kept energies and operator norms per truncation.

    ``max_shift`` is the largest energy change relative to the previous
    truncation.  A row is converged when moving to the next (finer)
    truncation shifts the energies by at most ``CONVERGENCE_TOL``; the
    finest row is judged against its predecessor.
    """
    n_fock_list = list(n_fock_list)
    if sorted(n_fock_list) != n_fock_list:
        raise ValueError("n_fock_list must be ascending")
    rows: list[ConvergenceRow] = []
    prev = None
    for n in n_fock_list:
        keep = min(spec.n_keep, 2 * n)
        d = dress(spec.with_(n_fock=n, n_keep=keep))
        shift = None
        if prev is not None:
            m = min(len(prev), len(d.energies))
            shift = float(np.max(np.abs(d.energies[:m] - prev[:m])))
        rows.append(ConvergenceRow(
            n_fock=n,
            energies=d.energies,
            norm_A=float(np.linalg.norm(d.A, 2)),
            norm_S=float(np.linalg.norm(d.S, 2)),
            max_shift=shift,
            converged=True,
        ))
        prev = d.energies
    tol = CONVERGENCE_TOL * spec.omega_q
    for i, row in enumerate(rows):
        nxt = rows[i + 1].max_shift if i + 1 < len(rows) else row.max_shift
        row.converged = nxt is None or nxt <= tol
    return rows
