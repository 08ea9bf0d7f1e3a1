"""End-to-end experiments: spectrum, dynamics, correlations, sweeps, validation.

Each ``run_*`` function returns plain arrays plus metadata; :func:`write_csv`
persists them with a ``#`` header.  Everything is deterministic.
"""

from __future__ import annotations

import hashlib
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .cascade import CascadeParams, CompositeModel
from .config import RunConfig
from .correlations import delayed_C_many
from .hierarchy import TimeSeries, evolve
from .operator_algebra import hermitian_eigs
from .oracle import cross_validate
from .pulse import carrier_from_spectrum, make_gaussian_pulse
from .rabi import SubsystemSpec
from .spectrum import (
    Crossing,
    composite_model,
    detect_crossings,
    ee00_weight,
    locate_crossing,
    scan_spectrum,
)

DEFAULT_SWEEP_GRIDS = {
    "gamma": (0.0, 0.004, 5),
    "delay": (0.0, 2.0, 5),  # tau_d / T
    "gain": (0.2, 1.0, 5),
    "omega_c": (-20.0, 20.0, 9),  # detuning in units of the crossing gap
}
ORACLE_N_KEEP = 4


# ---------------------------------------------------------------------------
# model construction


def subsystem_spec(config: RunConfig, n_keep: int | None = None, omega_c: float | None = None) -> SubsystemSpec:
    s = config.subsystem
    return SubsystemSpec(
        omega_c=s.omega_c if omega_c is None else float(omega_c),
        eta=s.eta,
        theta=s.theta,
        omega_q=s.omega_q,
        n_fock=s.n_fock,
        n_keep=s.n_keep if n_keep is None else int(n_keep),
    )


def cascade_params(config: RunConfig) -> CascadeParams:
    c = config.cascade
    return CascadeParams(kappa1=c.kappa1, kappa2=c.kappa2, gamma1=c.gamma1, gamma2=c.gamma2, G=c.G)


def spectrum_grid(config: RunConfig) -> np.ndarray:
    s = config.sweep
    return np.linspace(s.grid_min, s.grid_max, s.grid_points)


@dataclass(frozen=True)
class OperatingPoint:
    omega_c: float
    gap: float
    omega_in: float


def level_energies(model: CompositeModel, count: int) -> np.ndarray:
    return hermitian_eigs(model.H)[0][:count]


def crossing_carrier(model: CompositeModel) -> float:
    e = level_energies(model, 6)
    return float(carrier_from_spectrum(e[0], e[4], e[5]))


def photon_pair_carrier(model: CompositeModel, dominance: float = 2.0) -> float:
    """Carrier aimed at the two photon-like levels among 3, 4, 5.

    The level with the largest ``|ee00>`` weight is treated as the
    two-qubit state and the carrier sits midway between the other two.  When
    no level dominates by ``dominance`` (the states are hybridized near a
    crossing) this falls back to :func:`crossing_carrier`.
    """
    values, vecs = hermitian_eigs(model.H)
    ee = np.array([ee00_weight(model, vecs[:, k]) for k in (3, 4, 5)])
    order = np.argsort(ee)[::-1]
    if ee[order[0]] < dominance * ee[order[1]]:
        return float(carrier_from_spectrum(values[0], values[4], values[5]))
    others = [3 + k for k in range(3) if k != order[0]]
    return float(0.5 * (values[others[0]] + values[others[1]]) - values[0])


def dynamics_model(config: RunConfig, omega_c: float, params: CascadeParams | None = None,
                   n_keep: int | None = None) -> CompositeModel:
    n_keep = config.integrator.n_keep if n_keep is None else n_keep
    spec = subsystem_spec(config, n_keep=n_keep)
    return composite_model(spec, spec, params or cascade_params(config), omega_c)


def locate_operating_point(config: RunConfig, params: CascadeParams | None = None,
                           n_keep: int | None = None) -> OperatingPoint:
    """Located 4-5 crossing (at the dynamics truncation) and its carrier."""
    params = params or cascade_params(config)
    n_keep = config.integrator.n_keep if n_keep is None else n_keep
    spec = subsystem_spec(config, n_keep=n_keep)
    cross = locate_crossing(spec, spec, params, config.sweep.lower, config.sweep.upper, spectrum_grid(config))
    model = composite_model(spec, spec, params, cross.omega_c)
    omega_in = config.pulse.omega_in or crossing_carrier(model)
    return OperatingPoint(omega_c=float(cross.omega_c), gap=float(cross.gap), omega_in=float(omega_in))


def make_pulse(config: RunConfig, omega_in: float):
    p = config.pulse
    return make_gaussian_pulse(p.T, t0=p.t0 or None, omega_in=omega_in)


def _dt(config: RunConfig):
    return config.integrator.dt or None


def _t_end(config: RunConfig, pulse) -> float:
    return config.integrator.t_end or pulse.support_end()


# ---------------------------------------------------------------------------
# experiments


def run_spectrum(config: RunConfig, workers: int = 1):
    spec = subsystem_spec(config)
    params = cascade_params(config)
    grid = spectrum_grid(config)
    table = scan_spectrum(spec, spec, params, grid, K=config.sweep.levels, workers=workers)
    crossings = detect_crossings(spec, spec, params, table)
    return table, crossings


def run_dynamics(config: RunConfig, point: OperatingPoint | None = None) -> tuple[TimeSeries, OperatingPoint]:
    point = point or locate_operating_point(config)
    model = dynamics_model(config, point.omega_c)
    pulse = make_pulse(config, point.omega_in)
    drive = None if config.pulse.vacuum else pulse
    series, _ = evolve(model, drive, _t_end(config, pulse), dt=_dt(config) or _default_dt(config, pulse),
                       method=config.integrator.method, degree=config.integrator.degree,
                       sample_stride=config.integrator.sample_stride)
    series.channels["pulse_envelope"] = np.sqrt(pulse.T) * np.asarray(pulse.envelope(series.times))
    if config.pulse.vacuum:
        series.channels["pulse_envelope"][:] = 0.0
    return series, point


def _default_dt(config: RunConfig, pulse) -> float | None:
    if config.integrator.method == "exact":
        return pulse.duration / 300.0
    return None


def run_correlation(config: RunConfig, tau_d: float | None = None,
                    point: OperatingPoint | None = None) -> tuple[TimeSeries, OperatingPoint]:
    tau_d = config.pulse.tau_d if tau_d is None else float(tau_d)
    point = point or locate_operating_point(config)
    model = dynamics_model(config, point.omega_c)
    pulse = make_pulse(config, point.omega_in)
    dense = delayed_C_many(model, pulse, [tau_d], dt=_dt(config) or pulse.duration / 300.0,
                           t_end=_t_end(config, pulse), degree=config.integrator.degree)[tau_d]
    return dense, point


@dataclass(frozen=True)
class SweepRow:
    value: float
    omega_c: float
    omega_in: float
    tau_d: float
    c_max: float
    S1_max: float
    S2_max: float

    COLUMNS = ("value", "omega_c", "omega_in", "tau_d", "c_max", "S1dagS1_max", "S2dagS2_max")

    def as_tuple(self):
        return (self.value, self.omega_c, self.omega_in, self.tau_d, self.c_max, self.S1_max, self.S2_max)


def _peak_run(config: RunConfig, model: CompositeModel, omega_in: float, tau_d: float):
    pulse = make_pulse(config, omega_in)
    dt = _dt(config) or pulse.duration / 300.0
    t_end = _t_end(config, pulse)
    series, _ = evolve(model, pulse, t_end, dt=dt, record=("S1dagS1", "S2dagS2", "C_equal_time"),
                       degree=config.integrator.degree)
    if tau_d > 0:
        c = delayed_C_many(model, pulse, [tau_d], dt=dt, t_end=t_end, degree=config.integrator.degree)[tau_d]["C"]
    else:
        c = series["C_equal_time"]
    return float(np.max(c)), float(np.max(series["S1dagS1"])), float(np.max(series["S2dagS2"]))


def sweep_row(config: RunConfig, axis: str, value: float, ref: OperatingPoint) -> SweepRow:
    """One sweep point; depends only on its arguments."""
    params = cascade_params(config)
    omega_c, omega_in, tau_d = ref.omega_c, ref.omega_in, config.pulse.tau_d
    if axis == "gamma":
        params = CascadeParams(params.kappa1, params.kappa2, value, value, params.G)
    elif axis == "gain":
        params = CascadeParams(params.kappa1, params.kappa2, params.gamma1, params.gamma2, value)
    elif axis == "delay":
        tau_d = value * config.pulse.T
    elif axis == "omega_c":
        omega_c = ref.omega_c + value * ref.gap
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    model = dynamics_model(config, omega_c, params)
    if axis == "omega_c" and not config.pulse.omega_in:
        omega_in = photon_pair_carrier(model)
    c, s1, s2 = _peak_run(config, model, omega_in, tau_d)
    return SweepRow(float(value), omega_c, omega_in, tau_d, c, s1, s2)


def _sweep_job(args):
    return sweep_row(*args)


def run_sweep(config: RunConfig, axis: str, grid, workers: int = 1) -> tuple[list[SweepRow], OperatingPoint]:
    ref = locate_operating_point(config)
    jobs = [(config, axis, float(v), ref) for v in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]
    return rows, ref


def validation_kappas(config: RunConfig) -> list[float]:
    raw = config.sweep.kappa_s.strip()
    if raw:
        return [float(x) for x in raw.split(",")]
    return [1.0 / config.pulse.T, 2.0 / config.pulse.T]


def run_validate(config: RunConfig, n_keep: int = ORACLE_N_KEEP):
    point = locate_operating_point(config, n_keep=n_keep)
    model = dynamics_model(config, point.omega_c, n_keep=n_keep)
    reports = []
    for kappa_s in validation_kappas(config):
        taus = (config.pulse.tau_d,) if config.pulse.tau_d > 0 else ()
        reports.append((kappa_s, cross_validate(model, kappa_s, point.omega_in, taus=taus)))
    return reports, point


# ---------------------------------------------------------------------------
# output


def grid_hash(values) -> str:
    return hashlib.sha256(np.ascontiguousarray(np.asarray(values, dtype=float)).tobytes()).hexdigest()


def _fmt(x) -> str:
    if isinstance(x, (str, bool)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".15g")


def csv_text(columns, rows, meta: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# cascadeqed {__version__}\n")
    for k in sorted(meta):
        buf.write(f"# {k} = {_fmt(meta[k]) if not isinstance(meta[k], str) else meta[k]}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path, columns, rows, meta: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(columns, rows, meta))


def config_meta(config: RunConfig) -> dict:
    return {f"param.{k}": v for k, v in config.flat().items()}


def series_table(series: TimeSeries, names) -> tuple[list[str], list[tuple]]:
    cols = ["t", *names]
    data = np.column_stack([series.times] + [np.real(series[n]) for n in names])
    return cols, [tuple(r) for r in data]


def spectrum_table_rows(table):
    K = table.K
    cols = ["omega_c"] + [f"level_{k}" for k in range(K)] + [f"label_{k}" for k in range(K)] + \
        [f"weight_{k}" for k in range(K)]
    rel = table.relative_levels()
    rows = []
    for i, w in enumerate(table.grid):
        rows.append((w, *rel[i], *table.labels[i], *table.weights[i]))
    return cols, rows


def crossing_rows(crossings: list[Crossing]):
    return ["lower", "upper", "omega_c", "gap"], [(c.lower, c.upper, c.omega_c, c.gap) for c in crossings]
