"""Reproducible data series behind the reference plots.

Each builder returns {table name: FigureTable}; the CLI only serializes the
tables, so library calls and ``latticeprobe figure`` agree bit for bit.
Default register sizes follow the source material (n = 10 for the profile
gallery, n = 15 for the phase/noise/variance sweeps, n = 4 spatially).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import channels, network, variance
from .purity import avpur_profile, all_subset_purities, average_purity, reduced_purity
from .states import (
    apply_dephasing,
    make_classical_correlated,
    make_cluster,
    make_ghz,
    make_phi_state,
)

FIGURE_INDICES = tuple(range(1, 9))


@dataclass(frozen=True)
class FigureTable:
    columns: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.columns):
            raise ValueError("rows do not match columns")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)


def _phi_grid(num: int) -> np.ndarray:
    return np.linspace(0.0, 2.0 * math.pi, num)


def figure1(n: int = 6, num_phi: int = 64) -> dict[str, FigureTable]:
    """Subset-class purities of the phase states against the entangling phase.

    The four classes (interior atom, separated interior pair, interior run,
    run touching one end) do not depend on n for n >= 6; their ordering
    breaks the nested-subset monotonicity at every phi not a multiple of
    2*pi.
    """
    if n < 6:
        raise ValueError("the four subset classes need n >= 6")
    subsets = ([2], [2, 5], [2, 3, 4, 5], [1, 2, 3, 4, 5])
    rows = []
    for phi in _phi_grid(num_phi):
        state = make_phi_state(n, phi)
        rows.append([phi] + [reduced_purity(state, s) for s in subsets])
    cols = ("phi", "one_interior", "two_separated", "interior_run", "end_run")
    return {"fig1": FigureTable(cols, np.array(rows))}


def figure2(n: int = 10, dephase: float = 0.1) -> dict[str, FigureTable]:
    """Average purities and singles-count laws for four reference states."""
    panels = {
        "a": make_classical_correlated(n) if n <= 10 else None,
        "b": make_ghz(n),
        "c": make_cluster(n),
        "d": apply_dephasing(make_cluster(n), dephase),
    }
    out: dict[str, FigureTable] = {}
    for label, state in panels.items():
        if state is None:
            continue
        profile = avpur_profile(state)
        pj = network.singles_distribution(profile)
        out[f"fig2{label}_avpur"] = FigureTable(
            ("k", "avpur"),
            np.column_stack([np.arange(n + 1), profile.avpur]),
        )
        out[f"fig2{label}_pj"] = FigureTable(
            ("j", "probability"),
            np.column_stack([np.arange(n + 1), np.asarray(pj.probs)]),
        )
    return out


def figure3(n: int = 15, num_phi: int = 33, ks=(1, 2, 3, 7)) -> dict[str, FigureTable]:
    """Average purities of the phase family against phi."""
    rows = []
    for phi in _phi_grid(num_phi):
        state = make_phi_state(n, phi)
        rows.append([phi] + [average_purity(state, k) for k in ks])
    cols = ("phi",) + tuple(f"avpur_k{k}" for k in ks)
    return {"fig3": FigureTable(cols, np.array(rows))}


def figure4(
    n: int = 15, num_d: int = 41, ks=(1, 2, 8, 14, 15)
) -> dict[str, FigureTable]:
    """Dephasing damping of the cluster-state average purities."""
    rows = []
    for d in np.linspace(0.0, 1.0, num_d):
        state = apply_dephasing(make_cluster(n), float(d))
        rows.append([d] + [average_purity(state, k) for k in ks])
    cols = ("d",) + tuple(f"avpur_k{k}" for k in ks)
    return {"fig4": FigureTable(cols, np.array(rows))}


def figure5(
    n: int = 15,
    ks=(1, 4, 7, 11, 15),
    q_grid=None,
    which: str = "both",
) -> dict[str, FigureTable]:
    """Pair-error variance V_k against q: worst case and the cluster state."""
    if q_grid is None:
        q_grid = np.arange(0.0, 0.301, 0.02)
    q_grid = np.asarray(q_grid, dtype=float)
    cols = ("q",) + tuple(f"V_k{k}" for k in ks)
    out: dict[str, FigureTable] = {}
    if which in ("both", "worst"):
        rows = []
        for q in q_grid:
            row = [q]
            for k in ks:
                row.append(variance.worst_case_variance(n, k, q=float(q), mode="bs").value)
            rows.append(row)
        out["fig5_worst"] = FigureTable(cols, np.array(rows))
    if which in ("both", "cluster"):
        profile = avpur_profile(make_cluster(n))
        rows = []
        for q in q_grid:
            reports = variance.state_variances(profile, 0.0, float(q), mode="bs")
            rows.append([q] + [reports[k].value for k in ks])
        out["fig5_cluster"] = FigureTable(cols, np.array(rows))
    return out


def figure6(n_max: int = 15, ks=(2, 4, 7)) -> dict[str, FigureTable]:
    """Worst-case V_k against n at q = 1/k, including k = n, with the
    analytic ceiling exp(4kq) = e**4."""
    cols = ("n",) + tuple(f"V_k{k}" for k in ks) + ("V_kn", "bound_exp4")
    rows = []
    for n in range(2, n_max + 1):
        row = [n]
        for k in ks:
            if k > n:
                row.append(math.nan)
            else:
                row.append(variance.worst_case_variance(n, k, q=1.0 / k, mode="bs").value)
        row.append(variance.worst_case_variance(n, n, q=1.0 / n, mode="bs").value)
        row.append(math.exp(4.0))
        rows.append(row)
    return {"fig6": FigureTable(cols, np.array(rows))}


def figure7(n_max: int = 15, ks=(1, 2, 3)) -> dict[str, FigureTable]:
    """Least-squares detector worst case against n at p = 1/(2k)."""
    cols = ("n",) + tuple(f"V_k{k}" for k in ks) + ("V_kn",)
    rows = []
    for n in range(2, n_max + 1):
        row = [n]
        for k in ks:
            if k > n:
                row.append(math.nan)
            else:
                row.append(
                    variance.worst_case_variance(
                        n, k, p=1.0 / (2 * k), mode="detector", method="least-squares"
                    ).value
                )
        row.append(
            variance.worst_case_variance(
                n, n, p=1.0 / (2 * n), mode="detector", method="least-squares"
            ).value
        )
        rows.append(row)
    return {"fig7": FigureTable(cols, np.array(rows))}


def figure8(
    n: int = 4,
    sigma_grid=None,
    wavelength: float = 1.0,
) -> dict[str, FigureTable]:
    """Blur-corrected block-purity variances against the position spread.

    Four tables: worst case and maximally entangled state, each under the
    explicit inverse and least squares.
    """
    if sigma_grid is None:
        sigma_grid = np.arange(0.1, 1.51, 0.1) * wavelength
    sigma_grid = np.asarray(sigma_grid, dtype=float)
    blocks = ([2], [2, 3], [1, 3], [1, 2, 3])
    from .bitops import mask_from_qubits

    masks = [mask_from_qubits(n, b) for b in blocks]
    cols = ("sigma",) + tuple("V_B" + "".join(map(str, b)) for b in blocks)
    ghz_map = {
        b: float(p)
        for b, p in enumerate(
            np.asarray(
                network.sign_pattern_distribution(
                    all_subset_purities(make_ghz(n)), n
                ).probs
            )
        )
    }
    out: dict[str, FigureTable] = {}
    for method, tag in (("explicit", "explicit"), ("least-squares", "ls")):
        worst_rows = []
        ghz_rows = []
        for sigma in sigma_grid:
            kernel = channels.gaussian_position_kernel(float(sigma), wavelength, n)
            wrow = [sigma]
            grow = [sigma]
            for bits in masks:
                val, _ = variance.worst_case_spatial_variance(kernel, n, bits, method)
                wrow.append(val)
                grow.append(
                    variance.spatial_subset_variance(ghz_map, kernel, n, bits, method)
                )
            worst_rows.append(wrow)
            ghz_rows.append(grow)
        out[f"fig8_worst_{tag}"] = FigureTable(cols, np.array(worst_rows))
        out[f"fig8_maxent_{tag}"] = FigureTable(cols, np.array(ghz_rows))
    return out


_BUILDERS = {
    1: figure1,
    2: figure2,
    3: figure3,
    4: figure4,
    5: figure5,
    6: figure6,
    7: figure7,
    8: figure8,
}


def figure_data(index: int, **overrides) -> dict[str, FigureTable]:
    """Data series of one reference figure with optional parameter overrides."""
    if index not in _BUILDERS:
        raise ValueError(f"unknown figure index {index}; valid: 1..8")
    return _BUILDERS[index](**overrides)
