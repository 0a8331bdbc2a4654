"""Command-line interface: one executable, every pipeline as a subcommand.

Each run writes a TSV data file plus a `.meta` JSON sidecar with the fully
resolved configuration, so identical flags reproduce identical bytes. Exit
codes: 0 success, 2 usage error, 3 numerical non-convergence (outputs are
still written in that case).
"""

from __future__ import annotations

import argparse
import os
import sys

from threadpoolctl import threadpool_limits

from . import __version__, output
from .rank import (
    GoogleOperator,
    contraction_factor,
    delocalization_scan,
    fit_pagerank_decay,
    k_scan_xi,
    pagerank,
)
from .spectrum import (
    DENSE_CAP_DEFAULT,
    decompose_google,
    gap_scan,
    spectral_density,
    weyl_scan,
)
from .typical_map import (
    PhaseSet,
    bifurcation_scan,
    load_phase_set,
    lyapunov_entropy,
    phase_set_t10,
    phase_set_t20,
)
from .ulam_net import (
    CellGrid,
    UlamMatrix,
    build_ulam_matrix,
    export_matrix,
    fit_power_law,
    import_matrix,
    link_stats,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


# ------------------------------------------------------------- flag parsing


def _float_in(lo: float, hi: float):
    def parse(s: str) -> float:
        try:
            x = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {s!r}")
        if not lo <= x <= hi:
            raise argparse.ArgumentTypeError(f"must be in [{lo:g}, {hi:g}], got {s}")
        return x

    return parse


def _positive_int(s: str) -> int:
    try:
        n = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {s}")
    return n


def _positive_float(s: str) -> float:
    try:
        x = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {s!r}")
    if x <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {s}")
    return x


def _nonneg_float(s: str) -> float:
    try:
        x = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {s!r}")
    if x < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {s}")
    return x


def _q_threshold(s: str) -> float:
    x = float(s)
    if not 0.0 < x < 1.0:
        raise argparse.ArgumentTypeError(f"must be in (0, 1), got {s}")
    return x


def _csv_of(item_type, what: str):
    def parse(s: str):
        vals = []
        for part in s.split(","):
            part = part.strip()
            if not part:
                continue
            try:
                vals.append(item_type(part))
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise argparse.ArgumentTypeError(f"bad {what} {part!r}: {exc}")
        if not vals:
            raise argparse.ArgumentTypeError(f"expected a comma-separated {what} list")
        return vals

    return parse


def _window(s: str) -> tuple[int, int]:
    lo, sep, hi = s.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected START:STOP, got {s!r}")
    a, b = int(lo), int(hi)
    if not 0 <= a < b:
        raise argparse.ArgumentTypeError(f"need 0 <= start < stop, got {s}")
    return a, b


_alpha = _float_in(0.0, 1.0)


# ------------------------------------------------------------ shared wiring


def _add_set_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--set", default="t10", metavar="t10|t20|PATH",
                   help="phase set: built-in name or config file (default t10)")
    p.add_argument("--k", type=_nonneg_float, default=None,
                   help="override kick amplitude")
    p.add_argument("--eta", type=_float_in(0.0, 1.0), default=None,
                   help="override dissipation factor")


def _add_build_args(p: argparse.ArgumentParser, with_matrix: bool = True) -> None:
    p.add_argument("--grid", type=_positive_int, default=None,
                   help="cells per axis (N = grid^2)")
    p.add_argument("--nc", type=_positive_int, default=10_000,
                   help="trajectory points per cell (default 10000)")
    if with_matrix:
        p.add_argument("--matrix", default=None, metavar="PATH",
                       help="reuse a matrix exported by `build` instead of rebuilding")


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="cap the BLAS/LAPACK worker pool (default: all cores)")
    p.add_argument("-o", "--output", default=None, help="output data file")


def _resolve_set(args, parser) -> tuple[PhaseSet, str]:
    if args.set == "t10":
        ps, label = phase_set_t10(), "t10"
    elif args.set == "t20":
        ps, label = phase_set_t20(), "t20"
    else:
        try:
            ps = load_phase_set(args.set)
        except (OSError, ValueError) as exc:
            parser.error(f"--set {args.set}: {exc}")
        label = os.path.splitext(os.path.basename(args.set))[0]
    return ps.with_params(k=getattr(args, "k", None), eta=getattr(args, "eta", None)), label


def _resolve_output(args, default_name: str) -> str:
    if args.output:
        path = args.output
    else:
        path = os.path.join(os.environ.get("ULAMNET_OUTDIR", "."), default_name)
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return path


def _obtain_matrix(args, parser, ps: PhaseSet) -> UlamMatrix:
    if getattr(args, "matrix", None):
        try:
            return import_matrix(args.matrix)
        except (OSError, ValueError) as exc:
            parser.error(f"--matrix {args.matrix}: {exc}")
    if args.grid is None:
        parser.error("--grid is required unless --matrix is given")
    return build_ulam_matrix(ps, CellGrid(args.grid), n_c=args.nc, seed=args.seed)


def _set_config(ps: PhaseSet, label: str) -> dict:
    return {"set": label, "T": ps.T, "k": ps.k, "eta": ps.eta}


def _build_config(args) -> dict:
    return {"grid": args.grid, "n_c": args.nc, "seed": args.seed,
            "matrix": getattr(args, "matrix", None)}


# ----------------------------------------------------------------- commands


def _cmd_build(args, parser) -> int:
    ps, label = _resolve_set(args, parser)
    if args.grid is None:
        parser.error("--grid is required")
    M = build_ulam_matrix(ps, CellGrid(args.grid), n_c=args.nc, seed=args.seed)
    path = _resolve_output(args, f"ulam_{label}_g{args.grid}_nc{args.nc}_s{args.seed}.mat")
    export_matrix(M, path)
    output.write_sidecar(path, "build", _set_config(ps, label) | _build_config(args),
                         {"N": M.N, "nnz": int(M.S.nnz)})
    print(f"wrote {path} (N={M.N}, nnz={M.S.nnz})")
    return EXIT_OK


def _cmd_linkstats(args, parser) -> int:
    ps, label = _resolve_set(args, parser)
    M = _obtain_matrix(args, parser, ps)
    stats = link_stats(M)
    path = _resolve_output(args, f"linkstats_{label}.tsv")
    n = output.write_linkstats_tsv(path, stats)
    fit_range = (args.fit_lo, args.fit_hi)
    fits = []
    for direction, hist in (("in", stats.in_degree_histogram),
                            ("out", stats.out_degree_histogram)):
        try:
            fits.append((direction, fit_power_law(hist, fit_range)))
        except ValueError as exc:
            print(f"warning: {direction}-degree fit skipped: {exc}", file=sys.stderr)
    stem, _ = os.path.splitext(path)
    fit_path = stem + "_fit.tsv"
    output.write_linkfit_tsv(fit_path, fits)
    results = {f"mu_{d}": f.mu for d, f in fits}
    output.write_sidecar(
        path, "linkstats",
        _set_config(ps, label) | _build_config(args) | {"fit_range": list(fit_range)},
        results | {"n_zero_in": stats.n_zero_in},
    )
    print(f"wrote {path} ({n} rows) and {fit_path}")
    for d, f in fits:
        print(f"mu_{d} = {f.mu:.4f} over kappa in [{fit_range[0]}, {fit_range[1]}]")
    return EXIT_OK


def _cmd_pagerank(args, parser) -> int:
    ps, label = _resolve_set(args, parser)
    M = _obtain_matrix(args, parser, ps)
    r = pagerank(GoogleOperator(M, args.alpha), tol=args.tol, max_iter=args.max_iter)
    path = _resolve_output(args, f"pagerank_{label}_a{args.alpha:g}.tsv")
    n = output.write_pagerank_tsv(path, r, M.grid)
    results = {"xi": r.xi, "iterations": r.iterations_used,
               "residual": r.residual, "converged": r.converged}
    if args.fit != "none":
        fit = fit_pagerank_decay(r, kind=args.fit, gamma_c=ps.gamma_c)
        results["decay_fit"] = output.write_decayfit_comment(fit)
        print(f"decay fit: {results['decay_fit']}")
    output.write_sidecar(
        path, "pagerank",
        _set_config(ps, label) | _build_config(args)
        | {"alpha": args.alpha, "tol": args.tol, "max_iter": args.max_iter},
        results,
    )
    print(f"wrote {path} ({n} rows), xi={r.xi:.4f}")
    if not r.converged:
        print(f"warning: PageRank not converged after {r.iterations_used} iterations "
              f"(residual {r.residual:.3e})", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _scan_common(args, parser, scan, path: str, config: dict) -> int:
    n = output.write_scan_tsv(path, scan)
    output.write_sidecar(path, scan.param_name + "-scan", config,
                         {str(k): v for k, v in scan.verdicts.items()})
    print(f"wrote {path} ({n} rows)")
    for param in sorted(scan.verdicts):
        print(f"{scan.param_name}={param:g}: {scan.verdicts[param]}")
    if not all(r.converged for r in scan.rows):
        print("warning: some scan points did not converge", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_scan_alpha(args, parser) -> int:
    ps, label = _resolve_set(args, parser)
    scan = delocalization_scan(ps, args.alphas, args.grids, n_c=args.nc,
                               seed=args.seed, tol=args.tol, max_iter=args.max_iter)
    path = _resolve_output(args, f"scan_alpha_{label}.tsv")
    config = _set_config(ps, label) | {
        "alphas": args.alphas, "grids": args.grids, "n_c": args.nc,
        "seed": args.seed, "tol": args.tol, "max_iter": args.max_iter,
    }
    return _scan_common(args, parser, scan, path, config)


def _cmd_scan_k(args, parser) -> int:
    ps, label = _resolve_set(args, parser)
    scan = k_scan_xi(ps, args.ks, alpha=args.alpha, grid_sizes=args.grids,
                     n_c=args.nc, seed=args.seed, tol=args.tol, max_iter=args.max_iter)
    path = _resolve_output(args, f"scan_k_{label}_a{args.alpha:g}.tsv")
    config = _set_config(ps, label) | {
        "ks": args.ks, "alpha": args.alpha, "grids": args.grids, "n_c": args.nc,
        "seed": args.seed, "tol": args.tol, "max_iter": args.max_iter,
    }
    return _scan_common(args, parser, scan, path, config)


def _cmd_spectrum(args, parser) -> int:
    ps, label = _resolve_set(args, parser)
    M = _obtain_matrix(args, parser, ps)
    res = decompose_google(M, args.alpha, compute_vectors=not args.no_vectors,
                           cap=args.cap)
    path = _resolve_output(args, f"spectrum_{label}_a{args.alpha:g}.tsv")
    n = output.write_spectrum_tsv(path, res)
    results = {"N": res.N, "abs_lambda_1": abs(res.eigenvalues[0])}
    if args.density:
        edges, density, n_gamma = spectral_density(res, bins=args.bins,
                                                   gamma_cut=args.gamma_cut)
        stem, _ = os.path.splitext(path)
        dpath = stem + "_density.tsv"
        output.write_density_tsv(dpath, edges, density, n_gamma)
        results["N_gamma"] = n_gamma
        print(f"wrote {dpath} ({args.bins} bins, N_gamma={n_gamma})")
    output.write_sidecar(
        path, "spectrum",
        _set_config(ps, label) | _build_config(args)
        | {"alpha": args.alpha, "cap": args.cap, "vectors": not args.no_vectors},
        results,
    )
    print(f"wrote {path} ({n} rows)")
    return EXIT_OK


def _cmd_weyl(args, parser) -> int:
    ps, label = _resolve_set(args, parser)
    if len(args.grids) < 3:
        parser.error("--grids needs at least 3 sizes for the power-law fit")
    fit = weyl_scan(ps, args.grids, alpha=args.alpha, gamma_b=args.gamma_b,
                    n_c=args.nc, seed=args.seed, cap=args.cap,
                    h_numeric=args.h_numeric)
    path = _resolve_output(args, f"weyl_{label}.tsv")
    output.write_weyl_tsv(path, fit)
    output.write_sidecar(
        path, "weyl",
        _set_config(ps, label) | {
            "grids": args.grids, "alpha": args.alpha, "gamma_b": args.gamma_b,
            "n_c": args.nc, "seed": args.seed, "cap": args.cap,
        },
        {"A": fit.A, "nu": fit.nu, "nu_theory": fit.nu_theory},
    )
    print(f"wrote {path}")
    print(f"N_gamma = A*N^nu with A={fit.A:.4f}, nu={fit.nu:.4f} "
          f"(nu_theory={fit.nu_theory:.4f})")
    return EXIT_OK


def _cmd_gap(args, parser) -> int:
    ps, label = _resolve_set(args, parser)
    rows = gap_scan(ps, args.grids, n_top=args.n_top, alpha=args.alpha,
                    n_c=args.nc, seed=args.seed, cap=args.cap)
    path = _resolve_output(args, f"gap_{label}_a{args.alpha:g}.tsv")
    n = output.write_gap_tsv(path, rows)
    output.write_sidecar(
        path, "gap",
        _set_config(ps, label) | {
            "grids": args.grids, "n_top": args.n_top, "alpha": args.alpha,
            "n_c": args.nc, "seed": args.seed, "cap": args.cap,
        },
    )
    print(f"wrote {path} ({n} rows)")
    return EXIT_OK


def _cmd_contraction(args, parser) -> int:
    ps, label = _resolve_set(args, parser)
    M = _obtain_matrix(args, parser, ps)
    results = contraction_factor(M, args.qs)
    path = _resolve_output(args, f"contraction_{label}.tsv")
    n = output.write_contraction_tsv(path, results)
    output.write_sidecar(
        path, "contraction",
        _set_config(ps, label) | _build_config(args) | {"qs": args.qs},
        {"Gamma_c": ps.Gamma_c},
    )
    print(f"wrote {path} ({n} rows); Gamma_c reference = {ps.Gamma_c:.4f}")
    return EXIT_OK


def _cmd_bifurcation(args, parser) -> int:
    ps, label = _resolve_set(args, parser)
    samples = bifurcation_scan(ps, args.ks, n_traj=args.ntraj,
                               early_window=args.early, late_window=args.late,
                               seed=args.seed)
    path = _resolve_output(args, f"bifurcation_{label}.tsv")
    n = output.write_bifurcation_tsv(path, samples)
    output.write_sidecar(
        path, "bifurcation",
        _set_config(ps, label) | {
            "ks": args.ks, "n_traj": args.ntraj, "early": list(args.early),
            "late": list(args.late), "seed": args.seed,
        },
    )
    print(f"wrote {path} ({n} rows)")
    return EXIT_OK


def _cmd_lyapunov(args, parser) -> int:
    ps, label = _resolve_set(args, parser)
    res = lyapunov_entropy(ps, n_iterations=args.iters, n_transient=args.transient,
                           seed=args.seed, drift_tol=args.drift_tol)
    path = _resolve_output(args, f"lyapunov_{label}.tsv")
    output.write_lyapunov_tsv(path, res)
    output.write_sidecar(
        path, "lyapunov",
        _set_config(ps, label) | {
            "iters": args.iters, "transient": res.n_transient, "seed": args.seed,
            "drift_tol": args.drift_tol,
        },
        {"h": res.h, "h_theory": res.h_theory, "d_estimate": res.d_estimate,
         "converged": res.converged},
    )
    print(f"wrote {path}")
    print(f"h = {res.h:.5f} (h_theory = {res.h_theory:.5f}, d = {res.d_estimate:.4f})")
    if not res.converged:
        print(f"warning: entropy estimate drifting (drift {res.drift:.3e} "
              f"> {args.drift_tol:g})", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ulamnet",
        description="Ulam networks of the dissipative kicked map: build the "
                    "coarse-grained transfer matrix, rank it, diagonalize it.",
    )
    parser.add_argument("--version", action="version", version=f"ulamnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(handler=func)
        _add_set_args(p)
        _add_common_args(p)
        return p

    p = add("build", _cmd_build, "build the transfer matrix and export it")
    _add_build_args(p, with_matrix=False)

    p = add("linkstats", _cmd_linkstats, "degree histograms and power-law fits")
    _add_build_args(p)
    p.add_argument("--fit-lo", type=_positive_int, default=2, help="fit range low edge")
    p.add_argument("--fit-hi", type=_positive_int, default=50, help="fit range high edge")

    p = add("pagerank", _cmd_pagerank, "PageRank vector, sorted")
    _add_build_args(p)
    p.add_argument("--alpha", type=_alpha, default=0.85, help="damping in [0, 1]")
    p.add_argument("--tol", type=_positive_float, default=1e-12, help="L1 stop")
    p.add_argument("--max-iter", type=_positive_int, default=200_000)
    p.add_argument("--fit", choices=("none", "auto", "algebraic", "exponential"),
                   default="none", help="also fit the rank-decay law")

    p = add("scan-alpha", _cmd_scan_alpha, "PAR of PageRank across alpha and N")
    p.add_argument("--alphas", type=_csv_of(_alpha, "alpha"), required=True)
    p.add_argument("--grids", type=_csv_of(_positive_int, "grid"), required=True)
    p.add_argument("--nc", type=_positive_int, default=10_000)
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.add_argument("--max-iter", type=_positive_int, default=200_000)

    p = add("scan-k", _cmd_scan_k, "PAR of PageRank across kick amplitude")
    p.add_argument("--ks", type=_csv_of(_positive_float, "k"), required=True)
    p.add_argument("--grids", type=_csv_of(_positive_int, "grid"), required=True)
    p.add_argument("--alpha", type=_alpha, default=0.99)
    p.add_argument("--nc", type=_positive_int, default=10_000)
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.add_argument("--max-iter", type=_positive_int, default=200_000)

    p = add("spectrum", _cmd_spectrum, "dense eigendecomposition")
    _add_build_args(p)
    p.add_argument("--alpha", type=_alpha, default=1.0)
    p.add_argument("--cap", type=_positive_int, default=DENSE_CAP_DEFAULT,
                   help="largest N allowed dense")
    p.add_argument("--no-vectors", action="store_true",
                   help="eigenvalues only (xi/residual columns become nan)")
    p.add_argument("--density", action="store_true",
                   help="also write the normalized decay-rate histogram")
    p.add_argument("--bins", type=_positive_int, default=60)
    p.add_argument("--gamma-cut", type=_positive_float, default=6.0)

    p = add("weyl", _cmd_weyl, "slow-mode count scaling N_gamma = A*N^nu")
    p.add_argument("--grids", type=_csv_of(_positive_int, "grid"), required=True)
    p.add_argument("--alpha", type=_alpha, default=1.0)
    p.add_argument("--gamma-b", type=_positive_float, default=6.0)
    p.add_argument("--nc", type=_positive_int, default=10_000)
    p.add_argument("--cap", type=_positive_int, default=DENSE_CAP_DEFAULT)
    p.add_argument("--h-numeric", type=_positive_float, default=None,
                   help="reuse a measured eta=1 entropy instead of recomputing")

    p = add("gap", _cmd_gap, "leading spectral gaps 1-|lambda| vs N")
    p.add_argument("--grids", type=_csv_of(_positive_int, "grid"), required=True)
    p.add_argument("--n-top", type=_positive_int, default=5)
    p.add_argument("--alpha", type=_alpha, default=1.0)
    p.add_argument("--nc", type=_positive_int, default=10_000)
    p.add_argument("--cap", type=_positive_int, default=DENSE_CAP_DEFAULT)

    p = add("contraction", _cmd_contraction, "phase-space contraction factor Gamma(q)")
    _add_build_args(p)
    p.add_argument("--qs", type=_csv_of(_q_threshold, "q"),
                   default=[1e-4, 1e-3, 1e-2, 1e-1],
                   help="thresholds, default 1e-4,1e-3,1e-2,0.1")

    p = add("bifurcation", _cmd_bifurcation, "attractor y-values vs k")
    p.add_argument("--ks", type=_csv_of(_positive_float, "k"), required=True)
    p.add_argument("--ntraj", type=_positive_int, default=10)
    p.add_argument("--early", type=_window, default=(100, 110), metavar="START:STOP")
    p.add_argument("--late", type=_window, default=(10_000, 10_100),
                   metavar="START:STOP")

    p = add("lyapunov", _cmd_lyapunov, "Lyapunov exponent / KS entropy of the map")
    p.add_argument("--iters", type=_positive_int, default=10_000_000,
                   help="map iterations (default 1e7)")
    p.add_argument("--transient", type=_positive_int, default=None)
    p.add_argument("--drift-tol", type=_positive_float, default=1e-3)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    with threadpool_limits(limits=args.threads):
        try:
            return args.handler(args, parser)
        except (ValueError, OSError) as exc:
            # contract violations and unwritable paths are configuration
            # errors at this level, not crashes
            parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
