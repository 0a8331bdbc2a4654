"""TSV writers for every pipeline result, plus JSON sidecar metadata.

Data files are tab-separated with `#`-prefixed header (and occasionally
footer) lines; floats are written with repr so files round-trip exactly and
rerunning a config reproduces them byte for byte. Each writer gets a
matching `<path>.meta` sidecar via write_sidecar: the resolved run config
and the tool version, deliberately without timestamps.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Mapping, Sequence

from . import __version__
from .rank import ContractionResult, DecayFit, RankVector, ScanResult
from .spectrum import SpectrumResult, WeylFit
from .typical_map import BifurcationSample, LyapunovResult
from .ulam_net import CellGrid, LinkStats, PowerLawFit, cell_center


def fnum(x: float) -> str:
    """Shortest round-trip decimal for a float; inf/nan spelled plainly."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _write_lines(path: str, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def write_tsv(
    path: str,
    columns: Sequence[str],
    rows: Iterable[Sequence[str]],
    head_comments: Sequence[str] = (),
    foot_comments: Sequence[str] = (),
) -> int:
    """Generic writer: '# <comment>' lines, '# col1<TAB>col2...' header,
    then data rows. Returns the number of data rows written."""
    n = 0

    def gen():
        nonlocal n
        for c in head_comments:
            yield f"# {c}"
        yield "# " + "\t".join(columns)
        for row in rows:
            yield "\t".join(row)
            n += 1
        for c in foot_comments:
            yield f"# {c}"

    _write_lines(path, gen())
    return n


def write_sidecar(path: str, command: str, config: Mapping[str, object],
                  results: Mapping[str, object] | None = None) -> str:
    """JSON metadata next to a data file: resolved config + tool version."""
    meta_path = path + ".meta"
    doc = {
        "tool": "ulamnet",
        "version": __version__,
        "command": command,
        "config": dict(config),
    }
    if results:
        doc["results"] = dict(results)
    with open(meta_path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return meta_path


def write_pagerank_tsv(path: str, r: RankVector, grid: CellGrid | None) -> int:
    """Rows sorted by p descending; rank_index is 1-based, node_index is the
    flat cell id. Cell centers are nan without grid geometry."""

    def rows():
        for rank_index, node in enumerate(r.order, start=1):
            if grid is not None:
                xc, yc = cell_center(int(node), grid)
            else:
                xc, yc = math.nan, math.nan
            yield (str(rank_index), str(int(node)), fnum(xc), fnum(yc), fnum(r.p[node]))

    return write_tsv(
        path,
        ("rank_index", "node_index", "x_center", "y_center", "p"),
        rows(),
        head_comments=(
            f"alpha={fnum(r.alpha)} N={r.N} xi={fnum(r.xi)} "
            f"iterations={r.iterations_used} residual={fnum(r.residual)} "
            f"converged={r.converged}",
        ),
    )


def write_linkstats_tsv(path: str, stats: LinkStats) -> int:
    def rows():
        for direction, hist in (("in", stats.in_degree_histogram),
                                ("out", stats.out_degree_histogram)):
            for kappa in sorted(hist):
                yield (direction, str(kappa), str(hist[kappa]))

    return write_tsv(
        path,
        ("direction", "kappa", "count"),
        rows(),
        head_comments=(f"N={stats.N} n_zero_in={stats.n_zero_in}",),
    )


def write_linkfit_tsv(path: str, fits: Sequence[tuple[str, PowerLawFit]]) -> int:
    def rows():
        for direction, f in fits:
            lo, hi = f.fit_range
            yield (direction, fnum(f.mu), fnum(f.prefactor), f"{lo}:{hi}",
                   fnum(f.residual))

    return write_tsv(path, ("direction", "mu", "prefactor", "range", "residual"), rows())


def write_spectrum_tsv(path: str, res: SpectrumResult) -> int:
    def rows():
        for i, lam in enumerate(res.eigenvalues):
            g = res.gammas[i]
            yield (
                str(i),
                fnum(lam.real),
                fnum(lam.imag),
                fnum(abs(lam)),
                "inf" if math.isinf(g) else fnum(g),
                fnum(res.pars[i]) if res.pars is not None else "nan",
                fnum(res.residuals[i]) if res.residuals is not None else "nan",
            )

    return write_tsv(
        path,
        ("index", "re_lambda", "im_lambda", "abs_lambda", "gamma", "xi", "residual"),
        rows(),
    )


def write_density_tsv(path: str, edges, density, n_gamma: int) -> int:
    def rows():
        for i in range(len(density)):
            yield (fnum(edges[i]), fnum(edges[i + 1]), fnum(density[i]))

    return write_tsv(
        path,
        ("gamma_lo", "gamma_hi", "density"),
        rows(),
        head_comments=(f"N_gamma={n_gamma}",),
    )


def write_weyl_tsv(path: str, fit: WeylFit) -> int:
    return write_tsv(
        path,
        ("N", "N_gamma"),
        ((str(n), str(c)) for n, c in fit.counts),
        head_comments=(f"gamma_b={fnum(fit.gamma_b)}",),
        foot_comments=(
            f"A={fnum(fit.A)} nu={fnum(fit.nu)} nu_theory={fnum(fit.nu_theory)}",
        ),
    )


def write_gap_tsv(path: str, rows_in) -> int:
    return write_tsv(
        path,
        ("N", "index", "gap"),
        ((str(r.N), str(r.i), fnum(r.gap)) for r in rows_in),
    )


def write_contraction_tsv(path: str, results: Sequence[ContractionResult]) -> int:
    def rows():
        for r in results:
            ref = fnum(r.Gamma_c_reference) if r.Gamma_c_reference is not None else "nan"
            yield (fnum(r.q), str(r.N_Gamma), fnum(r.Gamma), ref)

    return write_tsv(path, ("q", "N_Gamma", "Gamma", "Gamma_c"), rows())


def write_scan_tsv(path: str, scan: ScanResult) -> int:
    def rows():
        for r in scan.rows:
            verdict = scan.verdicts.get(r.param, "indeterminate")
            yield (fnum(r.param), str(r.N), fnum(r.xi), str(r.iterations_used),
                   fnum(r.residual), str(r.converged), verdict)

    return write_tsv(
        path,
        (scan.param_name, "N", "xi", "iterations", "residual", "converged", "verdict"),
        rows(),
    )


def write_bifurcation_tsv(path: str, samples: Sequence[BifurcationSample]) -> int:
    def rows():
        for s in samples:
            w = s.window
            n_traj, n_per = s.y_values.shape
            for t in range(n_traj):
                for j in range(n_per):
                    yield (fnum(s.k), w.label, str(t), str(w.start + 1 + j),
                           fnum(s.y_values[t, j]))

    return write_tsv(path, ("k", "window", "trajectory_id", "period_index", "y"), rows())


def write_lyapunov_tsv(path: str, res: LyapunovResult) -> int:
    pairs = (
        ("h", fnum(res.h)),
        ("h_theory", fnum(res.h_theory)),
        ("d_estimate", fnum(res.d_estimate)),
        ("n_iterations", str(res.n_iterations)),
        ("n_transient", str(res.n_transient)),
        ("converged", str(res.converged)),
        ("drift", fnum(res.drift)),
    )
    return write_tsv(path, ("quantity", "value"), pairs)


def write_decayfit_comment(fit: DecayFit) -> str:
    """One-line '#' comment summarizing a PageRank decay fit."""
    lo, hi = fit.fit_range
    parts = [f"kind={fit.kind}"]
    if fit.beta is not None:
        parts.append(f"beta={fnum(fit.beta)}")
    if fit.b is not None:
        parts.append(f"b={fnum(fit.b)}")
    parts.append(f"slope={fnum(fit.slope)}")
    parts.append(f"range={lo}:{hi}")
    parts.append(f"residual={fnum(fit.residual)}")
    return " ".join(parts)
