"""Command line entry point.

Exit codes: 0 success, 1 validation mismatch, 2 configuration error,
3 invariant breach during integration, 4 crossing-location failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import ConfigError, load_config
from .hierarchy import InvariantError, NumericalError
from .pulse import PulseClippingError
from .spectrum import CrossingError

log = logging.getLogger("cascadeqed")

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_INVARIANT, EXIT_CROSSING = 0, 1, 2, 3, 4


def parse_grid(text: str) -> tuple[float, float, int]:
    try:
        a, b, n = text.split(":")
        lo, hi, count = float(a), float(b), int(n)
    except ValueError:
        raise ConfigError(f"--grid expects a:b:n, got {text!r}") from None
    if count < 1 or (count > 1 and not hi > lo):
        raise ConfigError(f"--grid needs b > a and n >= 1, got {text!r}")
    return lo, hi, count


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cascadeqed", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["spectrum", "dynamics", "correlation", "sweep", "validate"])
    p.add_argument("--config", help="INI file; see README for keys")
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.add_argument("--workers", type=int, default=None, help="worker processes for scans and sweeps")
    p.add_argument("--grid", help="a:b:n grid (spectrum: omega_c; sweep: axis values)")
    p.add_argument("--axis", choices=["gamma", "delay", "gain", "omega_c"], help="sweep axis")
    p.add_argument("--levels", type=int, help="number of tracked levels K for spectrum")
    p.add_argument("--tau-d", type=float, help="delay for the correlation command")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _emit(args, columns, rows, meta) -> None:
    text = ex.csv_text(columns, rows, meta)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _sidecar(out: str | None, suffix: str) -> Path | None:
    if not out:
        return None
    path = Path(out)
    return path.with_name(path.stem + suffix + path.suffix)


def cmd_spectrum(args, config) -> int:
    if args.grid:
        lo, hi, n = parse_grid(args.grid)
        config = config.with_values("sweep", grid_min=lo, grid_max=hi, grid_points=n)
    if args.levels:
        config = config.with_values("sweep", levels=args.levels)
    table, crossings = ex.run_spectrum(config, workers=args.workers or config.sweep.workers)
    meta = ex.config_meta(config) | {"grid_sha256": ex.grid_hash(table.grid), "kind": "spectrum",
                                     "levels": "excitation energies relative to level 0"}
    cols, rows = ex.spectrum_table_rows(table)
    _emit(args, cols, rows, meta)
    ccols, crows = ex.crossing_rows(crossings)
    side = _sidecar(args.out, "_crossings")
    if side is not None:
        ex.write_csv(side, ccols, crows, meta | {"kind": "crossings"})
    else:
        sys.stdout.write(ex.csv_text(ccols, crows, {"kind": "crossings"}))
    return EXIT_OK


def cmd_dynamics(args, config) -> int:
    series, point = ex.run_dynamics(config)
    names = ["S1dagS1", "S2dagS2", "C_equal_time", "pulse_envelope"]
    cols, rows = ex.series_table(series, names)
    meta = ex.config_meta(config) | {
        "kind": "dynamics", "omega_c_star": point.omega_c, "gap": point.gap, "omega_in": point.omega_in,
        "grid_sha256": ex.grid_hash(series.times),
    }
    _emit(args, cols, rows, meta)
    return EXIT_OK


def cmd_correlation(args, config) -> int:
    tau_d = config.pulse.tau_d if args.tau_d is None else args.tau_d
    if tau_d < 0:
        raise ConfigError("tau_d must be non-negative")
    series, point = ex.run_correlation(config, tau_d)
    cols, rows = ex.series_table(series, ["C"])
    meta = ex.config_meta(config) | {
        "kind": "correlation", "tau_d": tau_d, "G": config.cascade.G, "gamma1": config.cascade.gamma1,
        "gamma2": config.cascade.gamma2, "omega_c_star": point.omega_c, "omega_in": point.omega_in,
        "c_max": float(np.max(series["C"])), "grid_sha256": ex.grid_hash(series.times),
    }
    _emit(args, cols, rows, meta)
    return EXIT_OK


def cmd_sweep(args, config) -> int:
    axis = args.axis or config.sweep.axis
    lo, hi, n = parse_grid(args.grid) if args.grid else ex.DEFAULT_SWEEP_GRIDS[axis]
    grid = np.linspace(lo, hi, n)
    rows, ref = ex.run_sweep(config, axis, grid, workers=args.workers or config.sweep.workers)
    units = {"gamma": "gamma1 = gamma2", "delay": "tau_d / T", "gain": "G",
             "omega_c": "(omega_c - omega_c_star) / gap"}[axis]
    meta = ex.config_meta(config) | {
        "kind": "sweep", "axis": axis, "value": units, "omega_c_star": ref.omega_c, "gap": ref.gap,
        "omega_in_ref": ref.omega_in, "grid_sha256": ex.grid_hash(grid),
    }
    _emit(args, ex.SweepRow.COLUMNS, [r.as_tuple() for r in rows], meta)
    return EXIT_OK


def cmd_validate(args, config) -> int:
    reports, point = ex.run_validate(config)
    cols = ["kappa_s", "observable", "peak_hierarchy", "peak_oracle", "max_abs", "max_rel", "pass"]
    rows, ok = [], True
    for kappa_s, devs in reports:
        for d in devs:
            rows.append((kappa_s, d.name, d.peak_hierarchy, d.peak_oracle, d.max_abs, d.max_rel,
                         "PASS" if d.passed else "FAIL"))
            ok &= d.passed
    meta = ex.config_meta(config) | {"kind": "validate", "omega_c_star": point.omega_c,
                                     "omega_in": point.omega_in, "oracle_n_keep": ex.ORACLE_N_KEEP,
                                     "result": "PASS" if ok else "FAIL"}
    _emit(args, cols, rows, meta)
    return EXIT_OK if ok else EXIT_VALIDATION


COMMANDS = {
    "spectrum": cmd_spectrum,
    "dynamics": cmd_dynamics,
    "correlation": cmd_correlation,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        return COMMANDS[args.command](args, config)
    except (ConfigError, PulseClippingError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (InvariantError, NumericalError) as exc:
        log.error("integration aborted: %s", exc)
        return EXIT_INVARIANT
    except CrossingError as exc:
        log.error("crossing location failed: %s", exc)
        return EXIT_CROSSING


if __name__ == "__main__":
    sys.exit(main())
