"""Dense eigendecomposition of G and the complex-spectrum analytics.

Small enough G (the dense cap defaults to the N = 22500 diagonalization
ceiling) are decomposed fully: eigenvalues sorted by |lambda| descending,
unit right eigenvectors with a fixed phase convention, decay rates
gamma = -2 ln|lambda|, per-vector participation ratios and residuals.
On top of that: spectral density histograms, the slow-mode count scaling
N_gamma = A * N^nu across sizes, and leading-gap tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .typical_map import PhaseSet, lyapunov_entropy
from .ulam_net import CellGrid, UlamMatrix, build_ulam_matrix

DENSE_CAP_DEFAULT = 22500
DEGENERATE_ABS_TOL = 1e-8  # |lambda| below this counts as the degenerate cluster


def _as_csc(S: UlamMatrix | sp.spmatrix | np.ndarray) -> sp.csc_matrix:
    return S.S if isinstance(S, UlamMatrix) else sp.csc_matrix(S, dtype=np.float64)


def materialize_dense(
    S: UlamMatrix | sp.spmatrix | np.ndarray, alpha: float, cap: int = DENSE_CAP_DEFAULT
) -> np.ndarray:
    """Dense G = alpha*S + (1-alpha)/N as a row-major array.

    Refuses to allocate beyond the cap; the error names the memory an
    N x N double matrix would need.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    mat = _as_csc(S)
    N = mat.shape[0]
    if N > cap:
        gib = N * N * 8 / 2** 30
        raise ValueError(
            f"dense form of N={N} needs {gib:.1f} GiB (cap is N<={cap}); "
            f"raise the cap explicitly if you have the memory"
        )
    G = mat.toarray()
    if alpha != 1.0:
        G *= alpha
        G += (1.0 - alpha) / N
    return G


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Sorted complex spectrum; vector-dependent fields are None when only
    eigenvalues were requested."""

    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray | None
    gammas: np.ndarray  # -2 ln|lambda|, +inf sentinel at lambda = 0
    pars: np.ndarray | None
    residuals: np.ndarray | None

    @property
    def N(self) -> int:
        return len(self.eigenvalues)


def _mul_real_matrix(M: np.ndarray, X: np.ndarray) -> np.ndarray:
    # keep the big real matrix real: split complex multiplies
    if np.iscomplexobj(X):
        return (M @ X.real) + 1j * (M @ X.imag)
    return M @ X


def google_apply_block(
    S: UlamMatrix | sp.spmatrix | np.ndarray, alpha: float
) -> Callable[[np.ndarray], np.ndarray]:
    """Column-block application X -> G @ X backed by the sparse S; used to
    verify eigenpairs without holding a second dense copy of G."""
    csr = _as_csc(S).tocsr()
    N = csr.shape[0]

    def apply_block(X: np.ndarray) -> np.ndarray:
        out = csr @ X
        if alpha != 1.0:
            out *= alpha
            out += (1.0 - alpha) / N * X.sum(axis=0, keepdims=True)
        return out

    return apply_block


def eigendecompose(
    M: np.ndarray,
    compute_vectors: bool = True,
    overwrite: bool = False,
    residual_operator: Callable[[np.ndarray], np.ndarray] | None = None,
) -> SpectrumResult:
    """Full dense nonsymmetric decomposition (LAPACK geev path).

    Eigenvalues are sorted by |lambda| descending, ties by real part
    descending then imaginary part ascending. Eigenvectors come back with
    unit 2-norm and the largest-magnitude component rotated real-positive.
    residual_operator, when given, supplies G @ X in column blocks so M
    itself may be overwritten (overwrite=True) to halve peak memory;
    without it residuals are computed against M, which is then kept intact
    regardless of the overwrite flag.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"need a square matrix, got shape {M.shape}")
    if not np.isfinite(M).all():
        raise ValueError("matrix has non-finite entries")
    N = M.shape[0]
    can_overwrite = overwrite and (residual_operator is not None or not compute_vectors)

    if compute_vectors:
        w, V = sla.eig(M, overwrite_a=can_overwrite, check_finite=False)
    else:
        w = sla.eigvals(M, overwrite_a=can_overwrite, check_finite=False)
        V = None

    idx = np.lexsort((w.imag, -w.real, -np.abs(w)))
    w = np.ascontiguousarray(w[idx])
    with np.errstate(divide="ignore"):
        gammas = -2.0 * np.log(np.abs(w))

    if V is None:
        return SpectrumResult(
            eigenvalues=w, right_eigenvectors=None, gammas=gammas, pars=None, residuals=None
        )

    V = V[:, idx]
    apply_block = residual_operator if residual_operator is not None else (
        lambda X: _mul_real_matrix(M, X)
    )
    pars = np.empty(N)
    residuals = np.empty(N)
    block = max(1, min(N, 2_500_000 // max(N, 1)))
    for lo in range(0, N, block):
        hi = min(lo + block, N)
        Vb = V[:, lo:hi]
        # unit norm, then phase-fix the largest component
        norms = np.sqrt((Vb.real**2 + Vb.imag**2).sum(axis=0))
        Vb /= norms
        lead = np.argmax(np.abs(Vb), axis=0)
        lead_vals = Vb[lead, np.arange(hi - lo)]
        phases = lead_vals / np.abs(lead_vals)
        Vb /= phases
        V[:, lo:hi] = Vb
        a2 = Vb.real**2 + Vb.imag**2
        s2 = a2.sum(axis=0)
        pars[lo:hi] = s2 * s2 / (a2 * a2).sum(axis=0)
        R = apply_block(Vb) - Vb * w[lo:hi]
        residuals[lo:hi] = np.sqrt((R.real**2 + R.imag**2).sum(axis=0))

    return SpectrumResult(
        eigenvalues=w, right_eigenvectors=V, gammas=gammas, pars=pars, residuals=residuals
    )


def decompose_google(
    S: UlamMatrix | sp.spmatrix | np.ndarray,
    alpha: float,
    compute_vectors: bool = True,
    cap: int = DENSE_CAP_DEFAULT,
) -> SpectrumResult:
    """materialize_dense + eigendecompose, with the dense copy released as
    soon as LAPACK is done (residuals go through the sparse operator)."""
    G = materialize_dense(S, alpha, cap=cap)
    return eigendecompose(
        G,
        compute_vectors=compute_vectors,
        overwrite=True,
        residual_operator=google_apply_block(S, alpha) if compute_vectors else None,
    )


def spectral_density(
    res: SpectrumResult, bins: int = 60, gamma_cut: float = 6.0
) -> tuple[np.ndarray, np.ndarray, int]:
    """Histogram of decay rates below gamma_cut, normalized to unit integral.

    Returns (bin_edges, density, n_gamma) where n_gamma is the number of
    states entering the histogram.
    """
    if gamma_cut <= 0.0:
        raise ValueError(f"gamma_cut must be positive, got {gamma_cut}")
    g = res.gammas
    sel = g[np.isfinite(g) & (g < gamma_cut)]
    if sel.size == 0:
        raise ValueError(f"no states with gamma < {gamma_cut}")
    counts, edges = np.histogram(sel, bins=bins, range=(0.0, gamma_cut))
    width = edges[1] - edges[0]
    density = counts / (sel.size * width)
    return edges, density, int(sel.size)


@dataclass(frozen=True)
class WeylFit:
    """Power-law fit N_gamma = A * N^nu of the slow-mode count vs matrix size."""

    gamma_b: float
    counts: list[tuple[int, int]]
    A: float
    nu: float
    nu_theory: float


def slow_mode_count(res: SpectrumResult, gamma_b: float) -> int:
    g = res.gammas
    return int(np.count_nonzero(np.isfinite(g) & (g < gamma_b)))


def fit_weyl(counts: Sequence[tuple[int, int]]) -> tuple[float, float]:
    """Log-log fit of (N, N_gamma) pairs; returns (A, nu)."""
    if len(counts) < 3:
        raise ValueError("need at least 3 sizes to fit a power law")
    ns = np.array([n for n, _ in counts], dtype=np.float64)
    cs = np.array([c for _, c in counts], dtype=np.float64)
    if np.any(cs <= 0):
        raise ValueError(f"zero slow-mode count in {list(counts)}")
    nu, ln_a = np.polyfit(np.log(ns), np.log(cs), 1)
    return float(math.exp(ln_a)), float(nu)


def weyl_scan(
    ps: PhaseSet,
    grid_sizes: Sequence[int],
    alpha: float = 1.0,
    gamma_b: float = 6.0,
    n_c: int = 10_000,
    seed: int = 0,
    cap: int = DENSE_CAP_DEFAULT,
    h_numeric: float | None = None,
) -> WeylFit:
    """Count states with gamma < gamma_b at each size and fit the scaling.

    nu_theory = 1 - gamma_c/(T*h) uses the numerically measured entropy of
    the eta=1 map (pass h_numeric to reuse a previous measurement).
    """
    if len(grid_sizes) < 3:
        raise ValueError("need at least 3 sizes to fit a power law")
    counts: list[tuple[int, int]] = []
    for g in grid_sizes:
        M = build_ulam_matrix(ps, CellGrid(int(g)), n_c=n_c, seed=seed)
        res = decompose_google(M, alpha, compute_vectors=False, cap=cap)
        counts.append((M.N, slow_mode_count(res, gamma_b)))
    A, nu = fit_weyl(counts)
    if h_numeric is None:
        h_numeric = lyapunov_entropy(
            ps.with_params(eta=1.0), n_iterations=1_000_000, seed=0
        ).h
    nu_theory = 1.0 - ps.gamma_c / (ps.T * h_numeric)
    return WeylFit(
        gamma_b=float(gamma_b), counts=counts, A=A, nu=nu, nu_theory=float(nu_theory)
    )


@dataclass(frozen=True)
class GapRow:
    N: int
    i: int  # 0-based position in the |lambda|-descending order
    gap: float  # 1 - |lambda_i|


def gap_scan(
    ps: PhaseSet,
    grid_sizes: Sequence[int],
    n_top: int = 5,
    alpha: float = 1.0,
    n_c: int = 10_000,
    seed: int = 0,
    cap: int = DENSE_CAP_DEFAULT,
) -> list[GapRow]:
    """Gaps 1 - |lambda| of the n_top leading eigenvalues per size."""
    rows: list[GapRow] = []
    for g in grid_sizes:
        M = build_ulam_matrix(ps, CellGrid(int(g)), n_c=n_c, seed=seed)
        res = decompose_google(M, alpha, compute_vectors=False, cap=cap)
        lam = np.abs(res.eigenvalues[:n_top])
        rows.extend(GapRow(N=M.N, i=i, gap=float(1.0 - a)) for i, a in enumerate(lam))
    return rows


def eigenvector_pars(
    res: SpectrumResult, degenerate_tol: float = DEGENERATE_ABS_TOL
) -> list[tuple[complex, float]]:
    """(lambda_i, xi_i) pairs, skipping the degenerate |lambda| ~ 0 cluster.

    Pass degenerate_tol=0 to keep everything.
    """
    if res.right_eigenvectors is None:
        raise ValueError("decomposition was computed without eigenvectors")
    out = []
    for lam, xi in zip(res.eigenvalues, res.pars):
        if abs(lam) >= degenerate_tol:
            out.append((complex(lam), float(xi)))
    return out
