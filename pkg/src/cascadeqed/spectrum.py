"""Composite spectrum versus cavity frequency, avoided crossings, labels.

Both cavities share the scanned ``omega_c``.  Eigenstates are labelled by
their dominant bare product state ``|q1 q2 n1 n2>`` (qubits g/e, cavity Fock
numbers), obtained by mapping the kept dressed basis back through the
stored subsystem eigenvectors.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cascade import CascadeParams, CompositeModel, assemble
from .operator_algebra import hermitian_eigs
from .rabi import SubsystemSpec, dress

SQRT_HALF = np.sqrt(0.5)


class CrossingError(RuntimeError):
    """An avoided crossing could not be located on the supplied grid."""


@dataclass
class SpectrumTable:
    grid: np.ndarray  # (N,)
    levels: np.ndarray  # (N, K) ascending eigenvalues of H
    vectors: np.ndarray  # (N, dim, K) eigenvectors in the kept product basis
    labels: list[list[str]]  # (N, K) dominant bare tag
    weights: np.ndarray  # (N, K) weight of that tag
    ee00: np.ndarray  # (N, K) weight on |ee00>
    photon_plus: np.ndarray  # (N, K) overlap with the lower photon combination
    photon_minus: np.ndarray  # (N, K) overlap with the upper photon combination
    single: np.ndarray  # (N, K) weight on the bare single-excitation states

    @property
    def K(self) -> int:
        return self.levels.shape[1]

    def relative_levels(self) -> np.ndarray:
        return self.levels - self.levels[:, :1]


@dataclass(frozen=True)
class Crossing:
    lower: int
    upper: int
    omega_c: float
    gap: float


def composite_model(spec1: SubsystemSpec, spec2: SubsystemSpec, params: CascadeParams,
                    omega_c: float | None = None) -> CompositeModel:
    if omega_c is not None:
        spec1 = spec1.with_(omega_c=float(omega_c))
        spec2 = spec2.with_(omega_c=float(omega_c))
    return assemble(dress(spec1), dress(spec2), params)


def bare_amplitudes(model: CompositeModel, vec: np.ndarray) -> np.ndarray:
    """Amplitudes of a composite kept-basis vector on the bare product basis.

    Returns an array indexed ``[q1, n1, q2, n2]``.
    """
    u1, u2 = model.sub1.eigvecs, model.sub2.eigvecs
    nf1, nf2 = model.sub1.spec.n_fock, model.sub2.spec.n_fock
    coeff = np.asarray(vec).reshape(model.sub1.n_keep, model.sub2.n_keep)
    bare = u1 @ coeff @ u2.T
    return bare.reshape(2, nf1, 2, nf2)


def bare_tag(q1: int, q2: int, n1: int, n2: int) -> str:
    g = "ge"
    return f"{g[q1]}{g[q2]}{n1}{n2}"


def label_state(model: CompositeModel, vec: np.ndarray) -> tuple[str, float]:
    """Dominant bare tag ``"q1q2n1n2"`` and its squared overlap."""
    w = np.abs(bare_amplitudes(model, vec)) ** 2
    q1, n1, q2, n2 = np.unravel_index(int(np.argmax(w)), w.shape)
    return bare_tag(q1, q2, n1, n2), float(w[q1, n1, q2, n2])


def photon_pair_overlaps(model: CompositeModel, vec: np.ndarray) -> tuple[float, float]:
    """Overlaps with ``(|gg10> +/- i|gg01>)/sqrt(2)``.

    The cascade coupling is purely imaginary in the product basis, so the
    symmetric/antisymmetric single-photon states carry relative phase +/- i;
    the ``+`` combination is the lower-energy one.
    """
    b = bare_amplitudes(model, vec)
    c10, c01 = b[0, 1, 0, 0], b[0, 0, 0, 1]
    plus = abs(SQRT_HALF * (c10 - 1j * c01)) ** 2
    minus = abs(SQRT_HALF * (c10 + 1j * c01)) ** 2
    return float(plus), float(minus)


def ee00_weight(model: CompositeModel, vec: np.ndarray) -> float:
    return float(abs(bare_amplitudes(model, vec)[1, 0, 1, 0]) ** 2)


def single_excitation_weight(model: CompositeModel, vec: np.ndarray) -> float:
    """Weight on ``|eg00>, |ge00>, |gg10>, |gg01>``."""
    b = np.abs(bare_amplitudes(model, vec)) ** 2
    return float(b[1, 0, 0, 0] + b[0, 0, 1, 0] + b[0, 1, 0, 0] + b[0, 0, 0, 1])


def _scan_point(args):
    spec1, spec2, params, omega_c, K = args
    model = composite_model(spec1, spec2, params, omega_c)
    values, vecs = hermitian_eigs(model.H)
    values, vecs = values[:K], vecs[:, :K]
    labels, weights, ee, plus, minus, single = [], [], [], [], [], []
    for k in range(K):
        tag, w = label_state(model, vecs[:, k])
        labels.append(tag)
        weights.append(w)
        ee.append(ee00_weight(model, vecs[:, k]))
        p, m = photon_pair_overlaps(model, vecs[:, k])
        plus.append(p)
        minus.append(m)
        single.append(single_excitation_weight(model, vecs[:, k]))
    return values, vecs, labels, weights, ee, plus, minus, single


def scan_spectrum(spec1: SubsystemSpec, spec2: SubsystemSpec, params: CascadeParams,
                  omega_c_grid, K: int = 8, workers: int = 1) -> SpectrumTable:
    grid = np.asarray(omega_c_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0):
        raise ValueError("omega_c grid must be strictly ascending with at least 3 points")
    dim = spec1.n_keep * spec2.n_keep
    if K < 6 or K > dim:
        raise ValueError(f"K must satisfy 6 <= K <= {dim}, got {K}")
    jobs = [(spec1, spec2, params, w, K) for w in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_scan_point(j) for j in jobs]
    return SpectrumTable(
        grid=grid,
        levels=np.array([r[0] for r in results]),
        vectors=np.array([r[1] for r in results]),
        labels=[r[2] for r in results],
        weights=np.array([r[3] for r in results]),
        ee00=np.array([r[4] for r in results]),
        photon_plus=np.array([r[5] for r in results]),
        photon_minus=np.array([r[6] for r in results]),
        single=np.array([r[7] for r in results]),
    )


def _parabolic_vertex(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    c2, c1, c0 = np.polyfit(x - x[1], y, 2)
    if c2 <= 0:
        return float(x[1]), float(y[1])
    xv = -c1 / (2 * c2)
    xv = float(np.clip(xv, x[0] - x[1], x[2] - x[1]))
    return float(xv + x[1]), float(c0 - c1 * c1 / (4 * c2))


def find_avoided_crossing(table: SpectrumTable, lower: int, upper: int) -> tuple[float, float]:
    """Grid minimizer of ``levels[upper] - levels[lower]`` with parabolic refinement."""
    if upper != lower + 1:
        raise ValueError("crossings are tracked between adjacent levels only")
    gap = table.levels[:, upper] - table.levels[:, lower]
    i = int(np.argmin(gap))
    if i == 0 or i == len(gap) - 1:
        raise CrossingError(
            f"gap between levels {lower} and {upper} is smallest at the grid boundary "
            f"omega_c={table.grid[i]:.6g}; widen the grid"
        )
    return _parabolic_vertex(table.grid[i - 1:i + 2], gap[i - 1:i + 2])


def gap_function(spec1: SubsystemSpec, spec2: SubsystemSpec, params: CascadeParams,
                 lower: int, upper: int):
    def gap(omega_c: float) -> float:
        e = composite_model(spec1, spec2, params, omega_c).energies
        return float(e[upper] - e[lower])
    return gap


def refine_crossing(spec1: SubsystemSpec, spec2: SubsystemSpec, params: CascadeParams,
                    lower: int, upper: int, bracket: tuple[float, float],
                    points: int = 21, max_iter: int = 12, rel_width: float = 0.02) -> Crossing:
    """Zoom into a bracketed gap minimum until the bracket is much narrower than the gap."""
    gap = gap_function(spec1, spec2, params, lower, upper)
    a, b = map(float, bracket)
    for _ in range(max_iter):
        xs = np.linspace(a, b, points)
        gs = np.array([gap(x) for x in xs])
        i = int(np.argmin(gs))
        if i == 0 or i == points - 1:
            raise CrossingError(
                f"levels {lower}-{upper}: minimum left the bracket [{a:.8g}, {b:.8g}]"
            )
        x_star, g_star = _parabolic_vertex(xs[i - 1:i + 2], gs[i - 1:i + 2])
        step = xs[1] - xs[0]
        if step < rel_width * max(g_star, 1e-14) or step < 1e-12:
            break
        a, b = xs[i - 1], xs[i + 1]
    g_true = gap(x_star)
    return Crossing(lower=lower, upper=upper, omega_c=x_star, gap=min(g_true, g_star) if g_star > 0 else g_true)


def detect_crossings(spec1: SubsystemSpec, spec2: SubsystemSpec, params: CascadeParams,
                     table: SpectrumTable, pairs=((3, 4), (4, 5)),
                     contrast: float = 2.0, min_gap: float = 1e-8) -> list[Crossing]:
    """Avoided crossings among the given adjacent level pairs.

    Candidates are interior local minima of the tabulated gap.  Each is
    refined by recomputation and kept if the tabulated gap exceeds
    ``contrast`` times the refined minimum somewhere on both sides; true
    (unavoided) crossings collapse below ``min_gap`` and are discarded.
    """
    found = []
    for lower, upper in pairs:
        gap = table.levels[:, upper] - table.levels[:, lower]
        for i in range(1, len(gap) - 1):
            if not (gap[i] <= gap[i - 1] and gap[i] < gap[i + 1]):
                continue
            try:
                c = refine_crossing(spec1, spec2, params, lower, upper,
                                    (table.grid[i - 1], table.grid[i + 1]))
            except CrossingError:
                continue
            if c.gap <= min_gap:
                continue
            if gap[:i].max() < contrast * c.gap or gap[i + 1:].max() < contrast * c.gap:
                continue
            found.append(c)
    return sorted(found, key=lambda c: (c.omega_c, c.lower))


def locate_crossing(spec1: SubsystemSpec, spec2: SubsystemSpec, params: CascadeParams,
                    lower: int, upper: int, grid) -> Crossing:
    """Coarse scan over ``grid`` followed by zoom refinement of one gap minimum."""
    grid = np.asarray(grid, dtype=float)
    gap = gap_function(spec1, spec2, params, lower, upper)
    gs = np.array([gap(x) for x in grid])
    i = int(np.argmin(gs))
    if i == 0 or i == len(gs) - 1:
        raise CrossingError(
            f"gap between levels {lower} and {upper} is smallest at the grid boundary "
            f"omega_c={grid[i]:.6g}; widen the grid"
        )
    return refine_crossing(spec1, spec2, params, lower, upper, (grid[i - 1], grid[i + 1]))


def single_excitation_gap(table: SpectrumTable, min_weight: float = 0.25) -> tuple[float, float]:
    """Splitting between the lower and upper single-excitation branches.

    The lower branch is the pair of levels 1, 2.  The upper branch is the
    lowest level above them whose bare single-excitation weight reaches
    ``min_weight``; at strong coupling this weight is shared with
    two-excitation states, hence the threshold.  Grid points without such a
    level among the tracked ``K`` are skipped.  Returns ``(omega_c, gap)`` at
    the grid minimum.
    """
    best = (np.nan, np.inf)
    for i, w in enumerate(table.grid):
        upper = [k for k in range(3, table.K) if table.single[i, k] >= min_weight]
        if not upper:
            continue
        gap = float(table.levels[i, upper[0]] - table.levels[i, 2])
        if gap < best[1]:
            best = (float(w), gap)
    if not np.isfinite(best[1]):
        raise CrossingError("no upper single-excitation branch among the tracked levels")
    return best
