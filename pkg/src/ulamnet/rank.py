"""Damped transition operator, PageRank, localization measures, and scans.

The operator is G = alpha*S + (1-alpha)*E/N with E the all-ones matrix;
E never materializes since E@v = sum(v) * ones. PageRank is the power
iteration fixed point at eigenvalue 1. Localization is quantified by the
participation ratio xi; the delocalization verdict compares xi across
matrix sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .typical_map import PhaseSet
from .ulam_net import CellGrid, UlamMatrix, build_ulam_matrix

D_SIGMA = (2.0 * math.pi) ** 2  # sigma^2 * N of the cell discretization

# scans run many power iterations; xi is insensitive to the last digits,
# so they default to a looser tolerance than single pagerank() calls
SCAN_TOL = 1e-8


class GoogleOperator:
    """Matrix-free G = alpha*S + (1-alpha)*E/N over a column-stochastic S."""

    def __init__(self, S: UlamMatrix | sp.spmatrix | np.ndarray, alpha: float):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {alpha}")
        self.source = S
        mat = S.S if isinstance(S, UlamMatrix) else sp.csc_matrix(S, dtype=np.float64)
        sums = np.asarray(mat.sum(axis=0)).ravel()
        worst = float(np.max(np.abs(sums - 1.0))) if sums.size else 0.0
        if worst > 1e-9:
            raise ValueError(f"matrix is not column-stochastic: sums off by {worst:.3e}")
        self.alpha = float(alpha)
        self.N = mat.shape[0]
        self._csr = mat.tocsr()  # row storage multiplies faster

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.N,):
            raise ValueError(f"vector has shape {v.shape}, operator needs ({self.N},)")
        out = self._csr @ v
        if self.alpha != 1.0:
            out *= self.alpha
            out += (1.0 - self.alpha) * (v.sum() / self.N)
        return out


def participation_ratio(v: np.ndarray) -> float:
    """(sum |v|^2)^2 / sum |v|^4: effective number of supporting nodes."""
    v = np.asarray(v)
    a2 = (v * v.conj()).real if np.iscomplexobj(v) else v * v
    s2 = float(a2.sum())
    if s2 == 0.0:
        raise ValueError("participation ratio of the zero vector is undefined")
    s4 = float((a2 * a2).sum())
    return s2 * s2 / s4


@dataclass(frozen=True)
class RankVector:
    """A probability vector with its descending ordering and localization data."""

    p: np.ndarray
    order: np.ndarray  # permutation: p[order] is non-increasing, ties by node index
    xi: float
    alpha: float
    N: int
    iterations_used: int
    residual: float  # last L1 change between iterates
    converged: bool

    def sorted_p(self) -> np.ndarray:
        return self.p[self.order]


def pagerank(
    G: GoogleOperator,
    tol: float = 1e-12,
    max_iter: int = 200_000,
    v0: np.ndarray | None = None,
) -> RankVector:
    """Power iteration v <- G v until the L1 change drops below tol.

    The iterate is renormalized to sum 1 every step to suppress rounding
    drift. Non-convergence (expected near alpha=1 where the spectral gap
    closes) is reported through the converged flag and final residual,
    never raised.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    N = G.N
    if v0 is None:
        v = np.full(N, 1.0 / N)
    else:
        v = np.asarray(v0, dtype=np.float64).copy()
        if v.shape != (N,):
            raise ValueError(f"v0 has shape {v.shape}, expected ({N},)")
        if v.min() < 0.0 or v.sum() <= 0.0:
            raise ValueError("v0 must be a nonnegative vector with positive sum")
        v /= v.sum()

    delta = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        w = G.apply(v)
        w /= w.sum()
        delta = float(np.abs(w - v).sum())
        v = w
        if delta < tol:
            break

    order = np.argsort(-v, kind="stable")
    return RankVector(
        p=v,
        order=order,
        xi=participation_ratio(v),
        alpha=G.alpha,
        N=N,
        iterations_used=iterations,
        residual=delta,
        converged=delta < tol,
    )


@dataclass(frozen=True)
class DecayFit:
    """Fit of the sorted PageRank tail: algebraic p_j ~ 1/j^beta or
    exponential p_j ~ exp(-b*gamma_c*j/D_sigma)."""

    kind: str
    beta: float | None
    b: float | None
    slope: float  # raw least-squares slope in the fit's own coordinates
    fit_range: tuple[int, int]
    residual: float  # RMS residual of ln p, comparable across kinds


def _ln_p_points(p_sorted: np.ndarray, fit_range: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = fit_range
    lo = max(1, int(lo))
    hi = min(len(p_sorted), int(hi))
    j = np.arange(lo, hi + 1, dtype=np.float64)
    p = p_sorted[lo - 1 : hi]
    keep = p > 0.0
    return j[keep], p[keep]


def _fit_algebraic(p_sorted: np.ndarray, fit_range: tuple[int, int]) -> DecayFit:
    j, p = _ln_p_points(p_sorted, fit_range)
    if j.size < 10:
        raise ValueError(f"insufficient points for a fit in range {fit_range}: {j.size} < 10")
    slope, intercept = np.polyfit(np.log(j), np.log(p), 1)
    resid = float(np.sqrt(np.mean((np.log(p) - (slope * np.log(j) + intercept)) ** 2)))
    return DecayFit(
        kind="algebraic",
        beta=float(-slope),
        b=None,
        slope=float(slope),
        fit_range=fit_range,
        residual=resid,
    )


def _fit_exponential(
    p_sorted: np.ndarray, fit_range: tuple[int, int], gamma_c: float | None
) -> DecayFit:
    j, p = _ln_p_points(p_sorted, fit_range)
    if j.size < 10:
        raise ValueError(f"insufficient points for a fit in range {fit_range}: {j.size} < 10")
    slope, intercept = np.polyfit(j, np.log(p), 1)
    resid = float(np.sqrt(np.mean((np.log(p) - (slope * j + intercept)) ** 2)))
    b = None if gamma_c is None or gamma_c == 0.0 else float(-slope * D_SIGMA / gamma_c)
    return DecayFit(
        kind="exponential",
        beta=None,
        b=b,
        slope=float(slope),
        fit_range=fit_range,
        residual=resid,
    )


def default_fit_range(N: int, kind: str, gamma_c: float | None = None) -> tuple[int, int]:
    """Default rank windows.

    Algebraic: the leading decades above the localized core, stopping at
    N/45 before the teleportation background bends the tail. Exponential:
    from the top rank through 8 e-folds of the theoretical decay
    exp(-gamma_c*j/D_sigma) when gamma_c is known, capped at N/36; beyond
    that the curve is background, not decay.
    """
    if kind == "algebraic":
        return (10, max(100, N // 45))
    hi = max(100, N // 36)
    if gamma_c:
        hi = max(100, min(hi, round(8.0 * D_SIGMA / gamma_c)))
    return (1, hi)


def fit_pagerank_decay(
    r: RankVector,
    kind: str = "auto",
    fit_range: tuple[int, int] | None = None,
    gamma_c: float | None = None,
) -> DecayFit:
    """Fit the sorted PageRank against rank index j.

    kind "auto" fits both forms over their (or the given) ranges and keeps
    the one with the smaller RMS residual in ln p. Reporting the Boltzmann
    constant b requires gamma_c of the generating map; without it only the
    raw slope is filled in.
    """
    if kind not in ("algebraic", "exponential", "auto"):
        raise ValueError(f"kind must be algebraic|exponential|auto, got {kind!r}")
    p_sorted = r.sorted_p()
    if kind == "algebraic":
        return _fit_algebraic(p_sorted, fit_range or default_fit_range(r.N, kind))
    if kind == "exponential":
        return _fit_exponential(
            p_sorted, fit_range or default_fit_range(r.N, kind, gamma_c), gamma_c
        )
    alg = _fit_algebraic(p_sorted, fit_range or default_fit_range(r.N, "algebraic"))
    exp = _fit_exponential(
        p_sorted, fit_range or default_fit_range(r.N, "exponential", gamma_c), gamma_c
    )
    return alg if alg.residual <= exp.residual else exp


@dataclass(frozen=True)
class ScanRow:
    param: float  # alpha for alpha-scans, k for k-scans
    N: int
    xi: float
    iterations_used: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class ScanResult:
    param_name: str
    rows: list[ScanRow]
    verdicts: dict[float, str]  # param -> localized | delocalized | indeterminate


def _verdict(xi_by_N: dict[int, float]) -> str:
    sizes = sorted(xi_by_N)
    if len(sizes) < 2 or sizes[-1] < 16 * sizes[0]:
        return "indeterminate"
    return "delocalized" if xi_by_N[sizes[-1]] > 2.0 * xi_by_N[sizes[0]] else "localized"


BuildCache = dict
# cache key: (T, k, eta, grid, n_c, seed); callers may pre-seed it with
# matrices built elsewhere to avoid repeating the dominant build cost


def _cached_build(
    cache: BuildCache | None, ps: PhaseSet, grid: int, n_c: int, seed: int
) -> UlamMatrix:
    if cache is None:
        return build_ulam_matrix(ps, CellGrid(grid), n_c=n_c, seed=seed)
    key = (ps.T, float(ps.k), float(ps.eta), grid, n_c, seed)
    M = cache.get(key)
    if M is None:
        M = cache[key] = build_ulam_matrix(ps, CellGrid(grid), n_c=n_c, seed=seed)
    return M


def delocalization_scan(
    ps: PhaseSet,
    alphas: Sequence[float],
    grid_sizes: Sequence[int],
    n_c: int,
    seed: int = 0,
    tol: float = SCAN_TOL,
    max_iter: int = 200_000,
    cache: BuildCache | None = None,
) -> ScanResult:
    """xi(alpha, N) table over the matrices of the requested sizes.

    Per alpha, the verdict says whether xi grows with N (delocalized:
    ratio > 2 across a >= 16x span in N) or saturates (localized).
    Matrices are built once per size; passing a cache dict allows reuse
    across scans (see _cached_build for the key layout).
    """
    if not alphas or not grid_sizes:
        raise ValueError("alphas and grid_sizes must be nonempty")
    rows: list[ScanRow] = []
    xi_table: dict[float, dict[int, float]] = {float(a): {} for a in alphas}
    for g in grid_sizes:
        M = _cached_build(cache, ps, int(g), n_c, seed)
        for a in alphas:
            r = pagerank(GoogleOperator(M, float(a)), tol=tol, max_iter=max_iter)
            rows.append(ScanRow(float(a), M.N, r.xi, r.iterations_used, r.residual, r.converged))
            xi_table[float(a)][M.N] = r.xi
    verdicts = {a: _verdict(t) for a, t in xi_table.items()}
    return ScanResult(param_name="alpha", rows=rows, verdicts=verdicts)


def k_scan_xi(
    ps_template: PhaseSet,
    k_values: Sequence[float],
    alpha: float,
    grid_sizes: Sequence[int],
    n_c: int,
    seed: int = 0,
    tol: float = SCAN_TOL,
    max_iter: int = 200_000,
    cache: BuildCache | None = None,
) -> ScanResult:
    """xi(k, N) at fixed alpha, with the same per-k verdict rule as the alpha scan."""
    if not k_values or not grid_sizes:
        raise ValueError("k_values and grid_sizes must be nonempty")
    rows: list[ScanRow] = []
    xi_table: dict[float, dict[int, float]] = {float(k): {} for k in k_values}
    for k in k_values:
        ps = ps_template.with_params(k=float(k))
        for g in grid_sizes:
            M = _cached_build(cache, ps, int(g), n_c, seed)
            r = pagerank(GoogleOperator(M, float(alpha)), tol=tol, max_iter=max_iter)
            rows.append(ScanRow(float(k), M.N, r.xi, r.iterations_used, r.residual, r.converged))
            xi_table[float(k)][M.N] = r.xi
    verdicts = {k: _verdict(t) for k, t in xi_table.items()}
    return ScanResult(param_name="k", rows=rows, verdicts=verdicts)


@dataclass(frozen=True)
class ContractionResult:
    q: float
    N_Gamma: int
    Gamma: float
    Gamma_c_reference: float | None


def contraction_factor(
    S: UlamMatrix | sp.spmatrix, q_values: Sequence[float]
) -> list[ContractionResult]:
    """Fraction of nodes keeping more than q/N probability after one step
    from the homogeneous state: Gamma(q) = |{i : (S u)_i > q/N}| / N."""
    for q in q_values:
        if not 0.0 < q < 1.0:
            raise ValueError(f"q values must lie in (0, 1), got {q}")
    mat = S.S if isinstance(S, UlamMatrix) else sp.csc_matrix(S)
    N = mat.shape[0]
    p_bar = mat.tocsr() @ np.full(N, 1.0 / N)
    gamma_ref = None
    if isinstance(S, UlamMatrix) and S.phase_set is not None:
        gamma_ref = S.phase_set.Gamma_c
    out = []
    for q in q_values:
        n_above = int(np.count_nonzero(p_bar > q / N))
        out.append(
            ContractionResult(
                q=float(q), N_Gamma=n_above, Gamma=n_above / N, Gamma_c_reference=gamma_ref
            )
        )
    return out
