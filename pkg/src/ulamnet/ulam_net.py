"""Phase-space discretization and the sparse column-stochastic transition matrix.

The region [0, 2*pi) x [-pi, pi) is cut into n_x * n_y cells; n_c start
points per cell are propagated through one map period and their endpoint
cells counted, giving S_ij = counts(i <- j) / n_c. Columns are the source
nodes, so S is column-stochastic by construction. Effective coarse-graining
noise is sigma ~ 2*pi/sqrt(N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .typical_map import TWO_PI, PhaseSet

COLUMN_SUM_TOL = 1e-12


@dataclass(frozen=True)
class CellGrid:
    """n_x * n_y cells over [0, 2*pi) x [-pi, pi); node j = n_y * x_bin + y_bin."""

    n_x: int
    n_y: int | None = None

    def __post_init__(self) -> None:
        if self.n_y is None:
            object.__setattr__(self, "n_y", self.n_x)
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError(f"grid must have at least one cell per axis, got {self.n_x}x{self.n_y}")

    @property
    def N(self) -> int:
        return self.n_x * self.n_y

    @property
    def cell_width_x(self) -> float:
        return TWO_PI / self.n_x

    @property
    def cell_width_y(self) -> float:
        return TWO_PI / self.n_y

    @property
    def sigma(self) -> float:
        """Effective one-period noise amplitude of the discretization."""
        return TWO_PI / math.sqrt(self.N)


def cell_of(x: float, y: float, grid: CellGrid) -> int:
    """Node index of the cell containing (x, y); floor binning, half-open cells."""
    if not 0.0 <= x < TWO_PI:
        raise ValueError(f"x={x} outside [0, 2*pi)")
    if not -math.pi <= y < math.pi:
        raise ValueError(f"y={y} outside [-pi, pi)")
    cx = int(x * grid.n_x / TWO_PI)
    if cx >= grid.n_x:
        cx = grid.n_x - 1
    ry = int((y + math.pi) * grid.n_y / TWO_PI)
    if ry >= grid.n_y:
        ry = grid.n_y - 1
    return grid.n_y * cx + ry


def cell_center(j: int, grid: CellGrid) -> tuple[float, float]:
    if not 0 <= j < grid.N:
        raise ValueError(f"node {j} outside [0, {grid.N})")
    cx, ry = divmod(j, grid.n_y)
    x = (cx + 0.5) * grid.cell_width_x
    y = -math.pi + (ry + 0.5) * grid.cell_width_y
    return x, y


@dataclass(frozen=True, eq=False)
class UlamMatrix:
    """Column-stochastic transition matrix with its build provenance.

    S is CSC with sorted row indices; grid/phase_set/seed are None for
    matrices whose provenance is unknown (e.g. imported from plain files
    with a non-square node count).
    """

    S: sp.csc_matrix
    n_c: int
    grid: CellGrid | None = None
    phase_set: PhaseSet | None = None
    seed: int = 0

    @property
    def N(self) -> int:
        return self.S.shape[0]

    def validate(self) -> None:
        """Raise unless column sums are 1 within tolerance and entries are sane."""
        sums = np.asarray(self.S.sum(axis=0)).ravel()
        worst = float(np.max(np.abs(sums - 1.0))) if sums.size else 0.0
        if worst > COLUMN_SUM_TOL:
            raise ValueError(f"column sums deviate from 1 by {worst:.3e}")
        if self.S.nnz:
            lo = float(self.S.data.min())
            hi = float(self.S.data.max())
            if lo < 0.0 or hi > 1.0:
                raise ValueError(f"entries outside [0, 1]: min={lo}, max={hi}")
        per_col = np.diff(self.S.indptr)
        if per_col.size and int(per_col.max()) > self.n_c:
            raise ValueError("a column holds more entries than trajectories per cell")


def build_ulam_matrix(ps: PhaseSet, grid: CellGrid, n_c: int, seed: int = 0) -> UlamMatrix:
    """Propagate n_c start points per cell for one period and count endpoints.

    Start points sit on a deterministic sqrt(n_c) x sqrt(n_c) sub-cell-center
    lattice when n_c is a perfect square (the seed is then irrelevant);
    otherwise they are drawn uniformly per cell from streams derived from
    the seed, so identical inputs always give identical matrices.
    """
    if n_c < 1:
        raise ValueError(f"n_c must be >= 1, got {n_c}")
    if grid.N < 1:
        raise ValueError("grid has no cells")
    m = math.isqrt(n_c)
    stratified = m * m == n_c
    indptr, indices, data = _kernels.build_columns(
        grid.n_x,
        grid.n_y,
        ps.theta_array,
        ps.k,
        ps.eta,
        n_c,
        np.uint64(seed % 2**64),
        stratified,
        m,
    )
    S = sp.csc_matrix((data, indices, indptr), shape=(grid.N, grid.N))
    out = UlamMatrix(S=S, n_c=n_c, grid=grid, phase_set=ps, seed=seed)
    out.validate()
    return out


def normalize_adjacency(A) -> sp.csc_matrix:
    """Column-normalize a nonnegative adjacency; all-zero columns become 1/N."""
    A = sp.csc_matrix(A, dtype=np.float64)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be square, got {A.shape}")
    if A.nnz and A.data.min() < 0.0:
        raise ValueError("adjacency entries must be nonnegative")
    N = A.shape[0]
    sums = np.asarray(A.sum(axis=0)).ravel()
    dangling = np.flatnonzero(sums == 0.0)
    scale = np.ones_like(sums)
    nonzero = sums != 0.0
    scale[nonzero] = 1.0 / sums[nonzero]
    S = A @ sp.diags(scale, format="csc")
    if dangling.size:
        rows = np.tile(np.arange(N), dangling.size)
        cols = np.repeat(dangling, N)
        fill = sp.csc_matrix(
            (np.full(N * dangling.size, 1.0 / N), (rows, cols)), shape=(N, N)
        )
        S = (S + fill).tocsc()
    S.sort_indices()
    return S


@dataclass(frozen=True)
class LinkStats:
    """Integer-degree histograms: kappa -> number of nodes with that degree."""

    in_degree_histogram: dict[int, int]
    out_degree_histogram: dict[int, int]
    n_zero_in: int
    N: int


def link_stats(M: UlamMatrix | sp.spmatrix) -> LinkStats:
    """Count in/out link degrees from the sparsity pattern."""
    S = M.S if isinstance(M, UlamMatrix) else sp.csc_matrix(M)
    N = S.shape[0]
    out_deg = np.diff(S.indptr)
    in_deg = np.bincount(S.indices, minlength=N)

    def hist(deg: np.ndarray) -> dict[int, int]:
        counts = np.bincount(deg)
        return {int(kappa): int(c) for kappa, c in enumerate(counts) if c > 0}

    return LinkStats(
        in_degree_histogram=hist(in_deg),
        out_degree_histogram=hist(out_deg),
        n_zero_in=int(np.count_nonzero(in_deg == 0)),
        N=N,
    )


@dataclass(frozen=True)
class PowerLawFit:
    mu: float
    prefactor: float
    fit_range: tuple[int, int]
    residual: float
    n_bins_used: int


def fit_power_law(histogram: Mapping[int, int], fit_range: tuple[int, int] = (2, 50)) -> PowerLawFit:
    """Least-squares line in log10-log10 over nonzero bins; mu = -slope.

    The default range suits weak-kick link distributions; pass a wider one
    when the scale-free stretch extends further.
    """
    lo, hi = fit_range
    kappas = np.array(
        sorted(k for k, c in histogram.items() if lo <= k <= hi and k > 0 and c > 0),
        dtype=np.float64,
    )
    if kappas.size < 5:
        raise ValueError(
            f"insufficient data: {kappas.size} nonzero bins in range {fit_range}, need >= 5"
        )
    counts = np.array([histogram[int(k)] for k in kappas], dtype=np.float64)
    lx = np.log10(kappas)
    ly = np.log10(counts)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return PowerLawFit(
        mu=float(-slope),
        prefactor=float(10.0 ** intercept),
        fit_range=(lo, hi),
        residual=resid,
        n_bins_used=int(kappas.size),
    )


def export_matrix(M: UlamMatrix, path: str) -> None:
    """Text form: header 'ulam N n_c seed', then one 'i j value' line per nonzero."""
    S = M.S
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"ulam {M.N} {M.n_c} {M.seed}\n")
        indptr, indices, data = S.indptr, S.indices, S.data
        for j in range(M.N):
            for p in range(indptr[j], indptr[j + 1]):
                fh.write(f"{indices[p]} {j} {float(data[p])!r}\n")


def import_matrix(path: str) -> UlamMatrix:
    """Parse an exported matrix; malformed lines and bad column sums raise."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "ulam":
            raise ValueError(f"{path}:1: expected header 'ulam N n_c seed'")
        try:
            N, n_c, seed = int(header[1]), int(header[2]), int(header[3])
        except ValueError:
            raise ValueError(f"{path}:1: non-integer header fields") from None
        rows: list[int] = []
        cols: list[int] = []
        vals: list[float] = []
        for lineno, raw in enumerate(fh, start=2):
            parts = raw.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'i j value', got {raw.strip()!r}")
            try:
                i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: unparseable entry {raw.strip()!r}") from None
            if not (0 <= i < N and 0 <= j < N):
                raise ValueError(f"{path}:{lineno}: index ({i}, {j}) outside matrix of size {N}")
            rows.append(i)
            cols.append(j)
            vals.append(v)
    S = sp.csc_matrix((vals, (rows, cols)), shape=(N, N))
    S.sort_indices()
    n = math.isqrt(N)
    grid = CellGrid(n, n) if n * n == N else None
    M = UlamMatrix(S=S, n_c=n_c, grid=grid, phase_set=None, seed=seed)
    M.validate()
    return M
