"""Equal-time and delayed two-subsystem correlations.

The delayed correlation pairs the first subsystem at time ``t`` with the
second subsystem at ``s = t - tau_d``::

    C(t) = Re Tr[ S1^dag S1  e^{L tau_d} ( S2 rho(s) S2^dag ) ]

evaluated with the quantum-regression procedure on the hierarchy: all four
components are sandwiched with ``S2`` at ``s`` and propagated, with the
hierarchy sources active, to ``s + tau_d``; the ``rho11`` entry is read out.
When the sandwiched ``rho00``, ``rho01``, ``rho10`` vanish (always the case
for the physical initial condition, because ``S2`` annihilates the dressed
ground state) the sources drop out and the sandwich evolves under ``L``
alone.  This reduction is detected, not assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cascade import CompositeModel
from .hierarchy import (
    HierarchyState,
    InvariantError,
    TimeSeries,
    delay_functional,
    evolve,
    liouvillian_eigen,
)
from .operator_algebra import dag

IMAG_TOL = 1e-10
SOURCE_FREE_TOL = 1e-13


def equal_time_C(model: CompositeModel, state: HierarchyState) -> float:
    S1, S2 = model.observables["S1"], model.observables["S2"]
    value = np.trace(dag(S1) @ S1 @ S2 @ state.rho11 @ dag(S2))
    scale = max(1.0, abs(value))
    if abs(value.imag) > IMAG_TOL * scale:
        raise InvariantError(state.t, "Im C(t) = 0", abs(value.imag))
    return float(value.real)


def sandwich(state: HierarchyState, op: np.ndarray) -> HierarchyState:
    """Apply ``op . op^dag`` to every hierarchy component."""
    opd = dag(op)
    return HierarchyState.from_components([op @ r @ opd for r in state.components()], t=state.t)


def sources_vanish(state: HierarchyState) -> bool:
    return all(np.max(np.abs(r)) <= SOURCE_FREE_TOL for r in (state.rho00, state.rho01, state.rho10))


def regress(model: CompositeModel, pulse, state: HierarchyState, tau_d: float,
            dt: float | None = None, full: bool = False) -> float:
    """``C(s + tau_d)`` from the full hierarchy state at ``s = state.t``.

    Reference implementation used to validate the one-sweep functional in
    :func:`delayed_C`.  Falls back to RK4 propagation of all four sandwiched
    components when the reduction to free evolution does not apply, or
    always with ``full=True``.
    """
    S1, S2 = model.observables["S1"], model.observables["S2"]
    sand = sandwich(state, S2)
    if tau_d == 0:
        value = np.trace(dag(S1) @ S1 @ sand.rho11)
    elif sources_vanish(sand) and not full:
        eig = liouvillian_eigen(model)
        coeffs = eig.from_matrix(sand.rho11) * np.exp(eig.values * tau_d)
        value = np.trace(dag(S1) @ S1 @ eig.to_matrix(coeffs))
    else:
        _, final = evolve(model, pulse, state.t + tau_d, dt=dt, record=(), method="rk4",
                          state=sand, check=False)
        value = np.trace(dag(S1) @ S1 @ final.rho11)
    return float(np.real(value))


@dataclass(frozen=True)
class CorrelationRequest:
    tau_d: float
    t_grid: np.ndarray | None = None


def default_t_grid(pulse, tau_d: float, points: int = 200) -> np.ndarray:
    lo = max(0.0, pulse.t0 - pulse.T)
    return np.linspace(lo, pulse.t0 + 4.0 * pulse.T + tau_d, points)


def delayed_C_many(model: CompositeModel, pulse, taus: Sequence[float], dt: float | None = None,
                   t_end: float | None = None, degree: int = 3, check: bool = True) -> dict[float, TimeSeries]:
    """Dense ``C(t)`` series for several delays from one forward sweep.

    Returns, per delay, a series on ``t = s + tau_d`` where ``s`` runs over
    the integrator step grid.  ``C`` is zero for ``t < tau_d``.
    """
    taus = [float(x) for x in taus]
    if any(x < 0 for x in taus):
        raise ValueError("tau_d must be non-negative")
    if pulse is None and (dt is None or t_end is None):
        raise ValueError("dt and t_end are required without a pulse")
    if dt is None:
        dt = pulse.duration / 300.0
    if t_end is None:
        t_end = pulse.support_end()
    eig = liouvillian_eigen(model)
    S1, S2 = model.observables["S1"], model.observables["S2"]
    observe = dag(S1) @ S1
    funcs = {f"C[{k}]": delay_functional(model, eig, observe, S2, tau) for k, tau in enumerate(taus)}
    series, _ = evolve(model, pulse, t_end, dt=dt, record=(), functionals=funcs, degree=degree, check=check)
    out = {}
    s = series.times
    for k, tau in enumerate(taus):
        out[tau] = TimeSeries(s + tau, {"C": series.channels[f"C[{k}]"]},
                              meta={"tau_d": tau, "dt": dt, "method": "exact"})
    return out


def delayed_C(model: CompositeModel, pulse, tau_d: float, t_grid: np.ndarray | None = None,
              dt: float | None = None, degree: int = 3) -> TimeSeries:
    """``C(t)`` sampled on ``t_grid``, snapped to the integrator step grid.

    Grid points with ``t - tau_d < 0`` are returned as zero with ``flag = 1``.
    """
    if dt is None:
        dt = pulse.duration / 300.0
    if t_grid is None:
        t_grid = default_t_grid(pulse, tau_d)
    t_grid = np.asarray(t_grid, dtype=float)
    s_grid = t_grid - tau_d
    t_end = max(float(np.max(s_grid)) + dt, dt)
    dense = delayed_C_many(model, pulse, [tau_d], dt=dt, t_end=t_end, degree=degree)[float(tau_d)]
    idx = np.clip(np.rint(s_grid / dt).astype(int), 0, len(dense.times) - 1)
    flag = (s_grid < -0.5 * dt).astype(float)
    values = np.where(flag > 0, 0.0, dense["C"][idx])
    times = np.where(flag > 0, t_grid, dense.times[idx])
    return TimeSeries(times, {"C": values, "flag": flag}, meta={"tau_d": tau_d, "dt": dt})


def c_max(series: TimeSeries) -> float:
    return float(np.max(series["C"]))
