"""Independent check: the photon emitted by a decaying source cavity.

A two-level source mode prepared in ``|1>`` and damped at ``kappa_s`` emits
the exponential wavepacket ``sqrt(kappa_s) exp(-kappa_s t/2)``.  Placing it
upstream of the composite system in a single cascaded master equation gives
an ordinary Lindblad problem that must reproduce the hierarchy driven by
:class:`~cascadeqed.pulse.ExponentialPulse`.

Everything here is assembled from the dressed subsystems with its own
cascade construction and a column-stacking superoperator, propagated with a
matrix exponential.  Only the operator-algebra primitives are shared with
the hierarchy code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .cascade import CompositeModel
from .correlations import delayed_C_many
from .hierarchy import TimeSeries, evolve
from .operator_algebra import dag, destroy, tensor
from .pulse import ExponentialPulse

ORACLE_RTOL = 1e-3


@dataclass(frozen=True)
class SourceModel:
    kappa_s: float
    omega_in: float
    H: np.ndarray
    jumps: tuple[np.ndarray, ...]
    ops: dict

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def initial_state(self) -> np.ndarray:
        rho = np.zeros_like(self.H)
        rho[self.dim // 2, self.dim // 2] = 1.0  # source in |1>, system in its ground state
        return rho


def cascade_chain(hamiltonians, couplings):
    """Unidirectional chain: ``sum H_k + (i/2) sum_{k<l} (c_k^dag c_l - c_l^dag c_k)``.

    ``couplings[k]`` is the (rate-weighted) operator through which stage
    ``k`` emits into the common waveguide.  Returns ``(H, L)`` with ``L`` the
    collective output jump operator.
    """
    H = sum(hamiltonians)
    for k in range(len(couplings)):
        for l in range(k + 1, len(couplings)):
            ck, cl = couplings[k], couplings[l]
            H = H + 0.5j * (dag(ck) @ cl - dag(cl) @ ck)
    return H, sum(couplings)


def build_source_model(model: CompositeModel, kappa_s: float, omega_in: float) -> SourceModel:
    if not kappa_s > 0:
        raise ValueError("kappa_s must be positive")
    d1, d2, p = model.sub1, model.sub2, model.params
    n1, n2 = d1.n_keep, d2.n_keep
    i_s, i1, i2 = np.eye(2), np.eye(n1), np.eye(n2)
    a_s = destroy(2)

    def up(op_s=None, op1=None, op2=None):
        return tensor(i_s if op_s is None else op_s, i1 if op1 is None else op1, i2 if op2 is None else op2)

    A1, A2 = up(op1=d1.A), up(op2=d2.A)
    S1, S2 = up(op1=d1.S), up(op2=d2.S)
    hams = [
        omega_in * up(op_s=dag(a_s) @ a_s),
        up(op1=np.diag(d1.energies).astype(complex)),
        up(op2=np.diag(d2.energies).astype(complex)),
    ]
    couplings = [
        np.sqrt(kappa_s) * up(op_s=a_s),
        np.sqrt(p.kappa1) * A1,
        np.sqrt(p.G * p.kappa2) * A2,
    ]
    H, L_out = cascade_chain(hams, couplings)
    jumps = [L_out, np.sqrt(p.kappa2 * (1.0 - p.G)) * A2, np.sqrt(p.gamma1) * S1, np.sqrt(p.gamma2) * S2]
    jumps = tuple(j for j in jumps if np.any(j))
    ops = {
        "S1dagS1": dag(S1) @ S1,
        "S2dagS2": dag(S2) @ S2,
        "C_equal_time": dag(S2) @ dag(S1) @ S1 @ S2,
        "source_n": up(op_s=dag(a_s) @ a_s),
        "identity": np.eye(2 * n1 * n2, dtype=complex),
        "ground_population": up(op_s=np.diag([1.0, 0.0]), op1=np.diag(np.eye(n1)[0]), op2=np.diag(np.eye(n2)[0])),
        "S1": S1,
        "S2": S2,
    }
    return SourceModel(kappa_s=kappa_s, omega_in=omega_in, H=H, jumps=jumps, ops=ops)


def column_superoperator(H: np.ndarray, jumps) -> np.ndarray:
    """Lindblad generator acting on column-stacked density matrices."""
    n = H.shape[0]
    eye = np.eye(n)
    sup = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for L in jumps:
        LdL = dag(L) @ L
        sup += np.kron(L.conj(), L) - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron(LdL.T, eye)
    return sup


def _vec(rho):
    return rho.reshape(-1, order="F")


def _unvec(v, n):
    return v.reshape(n, n, order="F")


def propagate(src: SourceModel, t_end: float, dt: float, names=("S1dagS1", "S2dagS2", "C_equal_time")) -> TimeSeries:
    step = expm(column_superoperator(src.H, src.jumps) * dt)
    steps = int(np.ceil(t_end / dt - 1e-9))
    v = _vec(src.initial_state())
    rows = {k: _vec(src.ops[k].T) for k in names}  # trace(O rho) = vec(O^T) . vec(rho)
    out = {k: np.empty(steps + 1) for k in names}
    for i in range(steps + 1):
        for k, r in rows.items():
            out[k][i] = float(np.real(r @ v))
        if i < steps:
            v = step @ v
    return TimeSeries(dt * np.arange(steps + 1), out, meta={"method": "source-cavity"})


def source_delayed_C(src: SourceModel, tau_d: float, t_end: float, dt: float) -> TimeSeries:
    """Two-time regression ``Tr[S1^dag S1 e^{L tau}(S2 rho(s) S2^dag)]`` on the chain."""
    n = src.dim
    sup = column_superoperator(src.H, src.jumps)
    step = expm(sup * dt)
    delay = expm(sup * tau_d)
    S1, S2 = src.ops["S1"], src.ops["S2"]
    row = _vec((dag(S1) @ S1).T) @ delay
    steps = int(np.ceil(t_end / dt - 1e-9))
    v = _vec(src.initial_state())
    C = np.empty(steps + 1)
    for i in range(steps + 1):
        rho = _unvec(v, n)
        C[i] = float(np.real(row @ _vec(S2 @ rho @ dag(S2))))
        if i < steps:
            v = step @ v
    return TimeSeries(dt * np.arange(steps + 1) + tau_d, {"C": C}, meta={"tau_d": tau_d})


@dataclass(frozen=True)
class Deviation:
    name: str
    peak_hierarchy: float
    peak_oracle: float
    max_abs: float
    max_rel: float  # max absolute deviation over the peak of the oracle curve

    @property
    def passed(self) -> bool:
        return self.max_rel <= ORACLE_RTOL


def _compare(name: str, a: np.ndarray, b: np.ndarray) -> Deviation:
    diff = float(np.max(np.abs(a - b)))
    peak = float(np.max(np.abs(b)))
    rel = diff / peak if peak > 0 else diff
    return Deviation(name, float(np.max(a)), float(np.max(b)), diff, rel)


def cross_validate(model: CompositeModel, kappa_s: float, omega_in: float, t_end: float | None = None,
                   dt: float | None = None, taus=(0.0,)) -> list[Deviation]:
    """Hierarchy with the exponential mode against the source-cavity chain."""
    pulse = ExponentialPulse(kappa_s=kappa_s, omega_in=omega_in)
    if dt is None:
        dt = pulse.duration / 300.0
    if t_end is None:
        t_end = 12.0 / kappa_s
    src = build_source_model(model, kappa_s, omega_in)
    names = ("S1dagS1", "S2dagS2", "C_equal_time")
    ref = propagate(src, t_end, dt, names)
    hier, _ = evolve(model, pulse, t_end, dt=dt, record=names)
    out = [_compare(k, hier[k], ref[k]) for k in names]
    taus = [float(t) for t in taus if t > 0]
    if taus:
        dense = delayed_C_many(model, pulse, taus, dt=dt, t_end=t_end)
        for tau in taus:
            oc = source_delayed_C(src, tau, t_end, dt)
            out.append(_compare(f"C(tau_d={tau:g})", dense[tau]["C"], oc["C"]))
    return out
