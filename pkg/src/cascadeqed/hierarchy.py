"""Fock-state master-equation hierarchy for a single-photon input.

The four matrices ``rho_ab`` (a, b in {0, 1}) obey::

    d rho00 = L rho00
    d rho01 = L rho01 + xi*(t) [L0, rho00]
    d rho10 = L rho10 + xi(t)  [rho00, L0^dag]
    d rho11 = L rho11 + xi(t)  [rho01, L0^dag] + xi*(t) [L0, rho10]

starting from ``rho00 = rho11 = |0><0|`` and ``rho01 = rho10 = 0``; ``rho11``
is the physical system state.

Two integrators are provided.  ``method="rk4"`` is a plain fixed-step RK4 on
the four matrices and accepts any state.  ``method="exact"`` exploits the
structure of the physical initial condition: every channel annihilates the
dressed ground state, so ``rho00`` is stationary and ``rho01 = |0><phi|``
with ``phi`` driven by a non-Hermitian Hamiltonian.  ``phi`` and ``rho11``
are then propagated in the eigenbasis of their generators, and each step is
exact for an envelope that is a polynomial over the step; the only
discretization error is the envelope interpolation.
"""

from __future__ import annotations

import logging
import weakref
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .cascade import CompositeModel, composite_ground, liouvillian_apply, liouvillian_superoperator
from .operator_algebra import dag, projector

log = logging.getLogger(__name__)

TRACE_TOL = 1e-8
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-6
SYMMETRIZE_EVERY = 1000
SYMMETRIZE_MAX_CORRECTION = 1e-9


class InvariantError(RuntimeError):
    def __init__(self, t: float, name: str, value: float):
        super().__init__(f"invariant '{name}' violated at t={t:.6g}: {value:.3e}")
        self.t = t
        self.name = name
        self.value = value


class NumericalError(RuntimeError):
    pass


@dataclass
class HierarchyState:
    rho00: np.ndarray
    rho01: np.ndarray
    rho10: np.ndarray
    rho11: np.ndarray
    t: float = 0.0

    def components(self) -> tuple[np.ndarray, ...]:
        return self.rho00, self.rho01, self.rho10, self.rho11

    @classmethod
    def from_components(cls, comps: Sequence[np.ndarray], t: float = 0.0) -> "HierarchyState":
        return cls(*[np.array(c, dtype=complex) for c in comps], t=t)

    def axpy(self, alpha: float, other: "HierarchyState") -> "HierarchyState":
        """``self + alpha * other`` componentwise (time of ``self``)."""
        return HierarchyState.from_components(
            [a + alpha * b for a, b in zip(self.components(), other.components())], t=self.t
        )


@dataclass
class TimeSeries:
    times: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        for name, values in self.channels.items():
            if len(values) != len(self.times):
                raise ValueError(f"channel {name!r} has {len(values)} samples, expected {len(self.times)}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    def peak(self, name: str) -> tuple[float, float]:
        """``(time, value)`` at the maximum of a channel."""
        values = np.real(self.channels[name])
        i = int(np.argmax(values))
        return float(self.times[i]), float(values[i])


def observable_operator(model: CompositeModel, name: str) -> np.ndarray:
    if name == "C_equal_time":
        S1, S2 = model.observables["S1"], model.observables["S2"]
        return dag(S2) @ dag(S1) @ S1 @ S2
    if name == "identity":
        return np.eye(model.dim, dtype=complex)
    try:
        return model.observables[name]
    except KeyError:
        raise KeyError(f"unknown observable {name!r}; known: {sorted(model.observables)} + C_equal_time") from None


def init_hierarchy(model: CompositeModel) -> HierarchyState:
    g = projector(composite_ground(model))
    z = np.zeros_like(g)
    return HierarchyState(g.copy(), z.copy(), z.copy(), g.copy(), t=0.0)


def _xi(pulse, t: float) -> complex:
    return 0j if pulse is None else complex(pulse.xi(t))


def hierarchy_derivative(model: CompositeModel, pulse, state: HierarchyState, t: float) -> HierarchyState:
    xi = _xi(pulse, t)
    L0 = model.L0
    L0d = dag(L0)
    r00, r01, r10, r11 = state.components()
    for r in state.components():
        if r.shape != model.H.shape:
            raise ValueError(f"dimension mismatch: {r.shape} vs model {model.H.shape}")
    d00 = liouvillian_apply(model, r00)
    d01 = liouvillian_apply(model, r01) + np.conj(xi) * (L0 @ r00 - r00 @ L0)
    d10 = liouvillian_apply(model, r10) + xi * (r00 @ L0d - L0d @ r00)
    d11 = (
        liouvillian_apply(model, r11)
        + xi * (r01 @ L0d - L0d @ r01)
        + np.conj(xi) * (L0 @ r10 - r10 @ L0)
    )
    return HierarchyState(d00, d01, d10, d11, t=t)


def invariant_violations(state: HierarchyState) -> list[tuple[str, float]]:
    """Every hierarchy invariant that the state breaks, with its size."""
    r00, r01, r10, r11 = state.components()
    out = []
    checks = [
        ("trace(rho00) = 1", abs(np.trace(r00) - 1.0), TRACE_TOL),
        ("trace(rho11) = 1", abs(np.trace(r11) - 1.0), TRACE_TOL),
        ("trace(rho01) = 0", abs(np.trace(r01)), TRACE_TOL),
        ("trace(rho10) = 0", abs(np.trace(r10)), TRACE_TOL),
        ("rho00 Hermitian", float(np.max(np.abs(r00 - dag(r00)))), HERMITIAN_TOL),
        ("rho11 Hermitian", float(np.max(np.abs(r11 - dag(r11)))), HERMITIAN_TOL),
        ("rho10 = rho01^dagger", float(np.max(np.abs(r10 - dag(r01)))), HERMITIAN_TOL),
    ]
    for name, value, tol in checks:
        if value > tol:
            out.append((name, float(value)))
    min_eig = float(np.linalg.eigvalsh(0.5 * (r11 + dag(r11)))[0])
    if min_eig < -POSITIVITY_TOL:
        out.append(("rho11 positive", min_eig))
    return out


def check_invariants(state: HierarchyState) -> None:
    bad = invariant_violations(state)
    if bad:
        name, value = bad[0]
        raise InvariantError(state.t, name, value)


def default_rk4_dt(model: CompositeModel, pulse) -> float:
    span = float(np.ptp(model.energies))
    omega_in = 0.0 if pulse is None else abs(pulse.omega_in)
    dt = 0.02 / max(span + omega_in, 1e-12)
    if pulse is not None and getattr(pulse, "duration", None):
        dt = min(dt, pulse.duration / 2000.0)
    return dt


# ---------------------------------------------------------------------------
# exact propagation in eigen-coordinates


@dataclass(frozen=True)
class LiouvillianEigen:
    values: np.ndarray
    right: np.ndarray  # columns are right eigenvectors (row-major vec of matrices)
    left: np.ndarray  # inverse of ``right``
    residual: float

    def functional(self, op: np.ndarray) -> np.ndarray:
        """Row vector ``f`` with ``trace(op @ rho) = f @ c`` for ``rho = right @ c``."""
        return op.T.ravel() @ self.right

    def to_matrix(self, coeffs: np.ndarray) -> np.ndarray:
        d = int(round(np.sqrt(self.right.shape[0])))
        return (self.right @ coeffs).reshape(d, d)

    def from_matrix(self, rho: np.ndarray) -> np.ndarray:
        return self.left @ np.asarray(rho).ravel()


_EIGEN_CACHE: "weakref.WeakKeyDictionary[CompositeModel, LiouvillianEigen]" = weakref.WeakKeyDictionary()


def liouvillian_eigen(model: CompositeModel) -> LiouvillianEigen:
    """Cached eigendecomposition of the Lindblad superoperator of ``model``."""
    cached = _EIGEN_CACHE.get(model)
    if cached is not None:
        return cached
    sup = liouvillian_superoperator(model)
    values, right = np.linalg.eig(sup)
    left = np.linalg.inv(right)
    residual = float(np.max(np.abs((right * values) @ left - sup)))
    scale = max(1.0, float(np.max(np.abs(sup))))
    if not np.isfinite(residual) or residual > 1e-8 * scale:
        raise NumericalError(
            f"Liouvillian is numerically non-diagonalizable (reconstruction error {residual:.2e}); "
            "use method='rk4'"
        )
    eig = LiouvillianEigen(values=values, right=right, left=left, residual=residual)
    _EIGEN_CACHE[model] = eig
    return eig


def delay_functional(model: CompositeModel, eig: LiouvillianEigen, observe: np.ndarray,
                     sandwich: np.ndarray, tau: float) -> np.ndarray:
    """Row ``q`` with ``q @ c = trace(observe e^{L tau}[sandwich rho sandwich^dagger])``."""
    d = model.dim
    row = (eig.functional(observe) * np.exp(eig.values * tau)) @ eig.left
    dual = row.reshape(d, d)
    pulled = dag(sandwich) @ dual.T @ sandwich
    return pulled.T.ravel() @ eig.right


def _gauss_nodes(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


class ExactPropagator:
    """Fixed-step exponential propagator for the physical single-photon hierarchy.

    State variables are ``y`` (eigen-coordinates of ``phi`` in the frame
    rotating at the carrier) and ``c`` (Liouvillian eigen-coordinates of
    ``rho11``).  Over one step the envelope is replaced by its interpolating
    polynomial of degree ``degree``; everything else is integrated exactly.
    """

    def __init__(self, model: CompositeModel, pulse, dt: float, degree: int = 3):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.model = model
        self.pulse = pulse
        self.dt = float(dt)
        self.degree = int(degree)
        self.eig = liouvillian_eigen(model)
        omega_in = 0.0 if pulse is None else float(pulse.omega_in)
        self.omega_in = omega_in
        d = model.dim
        ground = composite_ground(model)
        e0 = float(np.real(ground @ model.H @ ground))

        gen = -1j * (model.h_eff - (e0 + omega_in) * np.eye(d))
        nu, R = np.linalg.eig(gen)
        self.nu, self.R, self.Rinv = nu, R, np.linalg.inv(R)
        L0 = model.L0
        self.g = self.Rinv @ (dag(L0) @ ground)

        # rho11 source: env * (X(phi) + X(phi)^dagger), X(phi) = |0><phi|L0^dag - L0^dag|0><phi|
        # X^dagger is linear in phi (P, acting on y); X is linear in conj(phi) (Q, acting on conj(y))
        cols_p = np.empty((d * d, d), dtype=complex)
        cols_q = np.empty((d * d, d), dtype=complex)
        bra0_L0 = ground.conj() @ L0
        L0d_ket0 = dag(L0) @ ground
        for j in range(d):
            phi = R[:, j]
            xd = np.outer(L0 @ phi, ground.conj()) - np.outer(phi, bra0_L0)
            cols_p[:, j] = xd.ravel()
            x = np.outer(ground, phi.conj() @ dag(L0)) - np.outer(L0d_ket0, phi.conj())
            cols_q[:, j] = x.ravel()
        self.P = self.eig.left @ cols_p
        self.Q = self.eig.left @ cols_q
        self._build_step_matrices()

    # -- step matrices -----------------------------------------------------

    def _build_step_matrices(self) -> None:
        h, p = self.dt, self.degree
        lam, nu = self.eig.values, self.nu
        phase = h * (np.max(np.abs(lam)) + 2 * np.max(np.abs(nu)))
        n = int(np.ceil(0.6 * phase)) + 24
        u, wu = _gauss_nodes(n, 0.0, h)
        s = u / h
        pw = np.array([s ** a for a in range(p + 1)])  # (p+1, n)

        # y: int_0^h e^{nu (h-u)} s^a du
        ey = np.exp(np.outer(nu, h - u)) * wu  # (d, n)
        self.Dy = ey @ pw.T  # (d, p+1)

        # inner I_b(nu, u) = int_0^u e^{nu (u-v)} (v/h)^b dv at every outer node
        xg, wg = leggauss(n)
        inner = np.empty((p + 1, len(nu), n), dtype=complex)
        for i, ui in enumerate(u):
            v = 0.5 * ui * (xg + 1.0)
            wv = 0.5 * ui * wg
            kern = np.exp(np.outer(nu, ui - v)) * wv  # (d, n_inner)
            inner[:, :, i] = (kern @ np.array([(v / h) ** b for b in range(p + 1)]).T).T

        el = np.exp(np.outer(lam, h - u)) * wu  # (Nc, n)
        en = np.exp(np.outer(u, nu))  # (n, d)
        enc = np.exp(np.outer(u, nu.conj()))
        blocks = []
        for a in range(p + 1):
            blocks.append(self.P * ((el * pw[a]) @ en))
        for a in range(p + 1):
            blocks.append(self.Q * ((el * pw[a]) @ enc))
        self.coupling = np.hstack(blocks)  # (Nc, 2 (p+1) d)

        forced = np.empty((p + 1, p + 1, len(lam)), dtype=complex)
        for a in range(p + 1):
            ela = el * pw[a]
            for b in range(p + 1):
                tp = ela @ (inner[b] * self.g[:, None]).T  # (Nc, d)
                tq = ela @ (inner[b].conj() * self.g.conj()[:, None]).T
                forced[a, b] = -(np.sum(self.P * tp, axis=1) + np.sum(self.Q * tq, axis=1))
        self.forced = forced
        self.decay_c = np.exp(lam * h)
        self.decay_y = np.exp(nu * h)

        # Chebyshev nodes on [0, 1] for the envelope fit
        k = np.arange(p + 1)
        nodes = 0.5 * (1.0 - np.cos((2 * k + 1) * np.pi / (2 * (p + 1))))
        self.env_nodes = nodes
        self.env_fit = np.linalg.inv(np.vander(nodes, p + 1, increasing=True))

    # -- state conversion ---------------------------------------------------

    def initial(self) -> tuple[np.ndarray, np.ndarray]:
        ground = composite_ground(self.model)
        c = self.eig.from_matrix(projector(ground))
        y = np.zeros(self.model.dim, dtype=complex)
        return c, y

    def from_state(self, state: HierarchyState) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of a state in the form this propagator supports."""
        ground = composite_ground(self.model)
        g = projector(ground)
        if np.max(np.abs(state.rho00 - g)) > 1e-12:
            raise ValueError("exact propagation requires rho00 = |0><0|; use method='rk4'")
        r01 = state.rho01
        rest = r01 - np.outer(ground, ground.conj() @ r01)
        if np.max(np.abs(rest)) > 1e-12 or np.max(np.abs(state.rho10 - dag(r01))) > 1e-12:
            raise ValueError("exact propagation requires rho01 = |0><phi| and rho10 = rho01^dagger")
        phi = (ground.conj() @ r01).conj()
        phi_rot = np.exp(1j * self.omega_in * state.t) * phi
        return self.eig.from_matrix(state.rho11), self.Rinv @ phi_rot

    def to_state(self, c: np.ndarray, y: np.ndarray, t: float) -> HierarchyState:
        ground = composite_ground(self.model)
        phi = np.exp(-1j * self.omega_in * t) * (self.R @ y)
        r01 = np.outer(ground, phi.conj())
        return HierarchyState(projector(ground), r01, dag(r01), self.eig.to_matrix(c), t=t)

    def rho11(self, c: np.ndarray) -> np.ndarray:
        return self.eig.to_matrix(c)

    # -- stepping -----------------------------------------------------------

    def envelope_coefficients(self, t: float) -> np.ndarray:
        if self.pulse is None:
            return np.zeros(self.degree + 1)
        vals = self.pulse.envelope(t + self.dt * self.env_nodes)
        return self.env_fit @ vals

    def step(self, c: np.ndarray, y: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        e = self.envelope_coefficients(t)
        stacked = np.concatenate([ea * y for ea in e] + [ea * y.conj() for ea in e])
        c_new = self.decay_c * c + self.coupling @ stacked + np.einsum("a,b,abk->k", e, e, self.forced)
        y_new = self.decay_y * y - (self.Dy @ e) * self.g
        return c_new, y_new

    def phi_ground_component(self, y: np.ndarray) -> complex:
        return complex((self.R @ y)[0])


# ---------------------------------------------------------------------------
# driver


def _check_exact_sample(prop: ExactPropagator, c: np.ndarray, y: np.ndarray, t: float,
                        trace_row: np.ndarray) -> None:
    tr = complex(trace_row @ c)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvariantError(t, "trace(rho11) = 1", abs(tr - 1.0))
    tr01 = abs(prop.phi_ground_component(y))
    if tr01 > TRACE_TOL:
        raise InvariantError(t, "trace(rho01) = 0", tr01)
    rho = prop.rho11(c)
    herm = float(np.max(np.abs(rho - dag(rho))))
    if herm > HERMITIAN_TOL:
        raise InvariantError(t, "rho11 Hermitian", herm)
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + dag(rho)))[0])
    if min_eig < -POSITIVITY_TOL:
        raise InvariantError(t, "rho11 positive", min_eig)


def _pulse_channel(pulse, times: np.ndarray) -> np.ndarray:
    if pulse is None:
        return np.zeros_like(times)
    scale = np.sqrt(pulse.duration) if getattr(pulse, "duration", None) else 1.0
    return scale * np.asarray(pulse.envelope(times))


def evolve(model: CompositeModel, pulse, t_end: float, dt: float | None = None,
           record: Iterable[str] = ("S1dagS1", "S2dagS2", "C_equal_time"),
           sample_stride: int = 1, method: str = "exact", state: HierarchyState | None = None,
           degree: int = 3, check: bool = True,
           functionals: dict[str, np.ndarray] | None = None) -> tuple[TimeSeries, HierarchyState]:
    """Advance the hierarchy to ``t_end`` and record expectations in ``rho11``.

    ``dt`` defaults to ``duration/300`` for ``method="exact"`` and to
    ``min(0.02/omega_span, duration/2000)`` for ``method="rk4"``.  With
    ``check=True`` every recorded sample is tested against the hierarchy
    invariants and a breach raises :class:`InvariantError`.  ``functionals``
    (exact method only) are extra rows ``f`` recorded as ``Re(f @ c)``.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if sample_stride < 1:
        raise ValueError("sample_stride must be >= 1")
    record = list(record)
    if method == "exact":
        return _evolve_exact(model, pulse, t_end, dt, record, sample_stride, state, degree, check,
                             functionals or {})
    if method == "rk4":
        if functionals:
            raise ValueError("functionals are only supported by the exact method")
        return _evolve_rk4(model, pulse, t_end, dt, record, sample_stride, state, check)
    raise ValueError(f"unknown method {method!r}")


def _n_steps(t_span: float, dt: float) -> int:
    return max(1, int(np.ceil(t_span / dt - 1e-9)))


def _evolve_exact(model, pulse, t_end, dt, record, stride, state, degree, check, functionals):
    if dt is None:
        dt = (pulse.duration if pulse is not None else 1.0) / 300.0
    prop = ExactPropagator(model, pulse, dt, degree)
    t_start = 0.0 if state is None else float(state.t)
    c, y = prop.initial() if state is None else prop.from_state(state)
    n = _n_steps(t_end - t_start, dt)

    rows = {name: prop.eig.functional(observable_operator(model, name)) for name in record}
    rows.update(functionals)
    names = list(rows)
    F = np.array([rows[k] for k in names]) if names else np.zeros((0, c.size))
    trace_row = prop.eig.functional(np.eye(model.dim))

    times, samples = [], []
    t = t_start
    for i in range(n + 1):
        if i % stride == 0 or i == n:
            if check:
                _check_exact_sample(prop, c, y, t, trace_row)
            times.append(t)
            samples.append(F @ c)
        if i == n:
            break
        c, y = prop.step(c, y, t)
        t = t_start + (i + 1) * dt
    times = np.array(times)
    samples = np.array(samples).reshape(len(times), len(names))
    channels = {k: np.real(samples[:, j]) for j, k in enumerate(names)}
    channels["pulse_envelope"] = _pulse_channel(pulse, times)
    series = TimeSeries(times, channels, meta={"method": "exact", "dt": dt, "degree": degree})
    return series, prop.to_state(c, y, t)


def _rk4_step(model, pulse, s: HierarchyState, dt: float) -> HierarchyState:
    t = s.t
    k1 = hierarchy_derivative(model, pulse, s, t)
    k2 = hierarchy_derivative(model, pulse, s.axpy(0.5 * dt, k1), t + 0.5 * dt)
    k3 = hierarchy_derivative(model, pulse, s.axpy(0.5 * dt, k2), t + 0.5 * dt)
    k4 = hierarchy_derivative(model, pulse, s.axpy(dt, k3), t + dt)
    comps = [
        x + dt / 6.0 * (a + 2 * b + 2 * c + d)
        for x, a, b, c, d in zip(s.components(), k1.components(), k2.components(),
                                 k3.components(), k4.components())
    ]
    return HierarchyState.from_components(comps, t=t + dt)


def _symmetrize(s: HierarchyState) -> float:
    worst = 0.0
    for attr in ("rho00", "rho11"):
        r = getattr(s, attr)
        sym = 0.5 * (r + dag(r))
        worst = max(worst, float(np.max(np.abs(sym - r))))
        setattr(s, attr, sym)
    return worst


def _evolve_rk4(model, pulse, t_end, dt, record, stride, state, check):
    if dt is None:
        dt = default_rk4_dt(model, pulse)
    s = init_hierarchy(model) if state is None else HierarchyState.from_components(state.components(), state.t)
    n = _n_steps(t_end - s.t, dt)
    ops = {name: observable_operator(model, name) for name in record}
    times = []
    values = {k: [] for k in ops}
    t_start = s.t
    for i in range(n + 1):
        if i % stride == 0 or i == n:
            if check:
                check_invariants(s)
            times.append(s.t)
            for k, op in ops.items():
                values[k].append(float(np.real(np.sum(op * s.rho11.T))))
        if i == n:
            break
        s = _rk4_step(model, pulse, s, dt)
        s.t = t_start + (i + 1) * dt
        if (i + 1) % SYMMETRIZE_EVERY == 0:
            correction = _symmetrize(s)
            log.debug("re-symmetrized at t=%.6g, correction %.3e", s.t, correction)
            if correction > SYMMETRIZE_MAX_CORRECTION:
                raise InvariantError(s.t, "Hermiticity drift per symmetrization", correction)
    times = np.array(times)
    channels = {k: np.array(v) for k, v in values.items()}
    channels["pulse_envelope"] = _pulse_channel(pulse, times)
    return TimeSeries(times, channels, meta={"method": "rk4", "dt": dt}), s
