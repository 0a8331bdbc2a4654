"""End-to-end CLI behavior: flag validation, exit codes, TSV schemas,
sidecar metadata, and byte-identical reproducibility."""

import filecmp
import json
import math

import numpy as np
import pytest

from ulamnet.cli import main
from ulamnet.typical_map import phase_set_t10, save_phase_set


def run(argv, expect=0):
    rc = main(argv)
    assert rc == expect, f"exit {rc} != {expect} for {argv}"


def read_rows(path):
    rows = []
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                rows.append(line.rstrip("\n").split("\t"))
    return rows


def header_columns(path):
    last_comment = None
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                last_comment = line
            else:
                break
    return last_comment[2:].strip().split("\t")


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "COMMAND" in capsys.readouterr().out


def test_alpha_out_of_range_names_flag_and_interval(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["pagerank", "--alpha", "1.5", "--grid", "4"])
    assert exc.value.code == 2
    err = capsys.readouterr().err
    assert "--alpha" in err and "[0, 1]" in err


def test_unknown_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_grid_required_without_matrix(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["pagerank", "--set", "t10"])
    assert exc.value.code == 2
    assert "--grid" in capsys.readouterr().err


def test_library_contract_violation_is_usage_error(capsys):
    # iters <= default transient (1000*T): clean exit 2, no traceback
    with pytest.raises(SystemExit) as exc:
        main(["lyapunov", "--set", "t10", "--iters", "10000"])
    assert exc.value.code == 2
    assert "n_transient" in capsys.readouterr().err


def test_output_into_missing_directory_is_created(tmp_path):
    out = tmp_path / "a" / "b" / "pr.tsv"
    rc = main(["pagerank", "--set", "t10", "--grid", "6", "--nc", "64",
               "-o", str(out)])
    assert rc == 0
    assert out.exists() and (tmp_path / "a" / "b" / "pr.tsv.meta").exists()


def test_build_then_reuse_matches_fresh_run(tmp_path):
    m = tmp_path / "m.mat"
    run(["build", "--set", "t10", "--grid", "6", "--nc", "100", "--seed", "3",
         "-o", str(m)])
    assert m.read_text().startswith("ulam 36 100 3")
    a = tmp_path / "a.tsv"
    b = tmp_path / "b.tsv"
    run(["pagerank", "--matrix", str(m), "--alpha", "0.85", "-o", str(a)])
    run(["pagerank", "--set", "t10", "--grid", "6", "--nc", "100", "--seed", "3",
         "--alpha", "0.85", "-o", str(b)])
    assert filecmp.cmp(a, b, shallow=False)


def test_repeat_runs_byte_identical(tmp_path):
    a = tmp_path / "a.tsv"
    b = tmp_path / "b.tsv"
    args = ["pagerank", "--set", "t20", "--grid", "6", "--nc", "81",
            "--alpha", "0.9"]
    run(args + ["-o", str(a)])
    run(args + ["-o", str(b)])
    assert filecmp.cmp(a, b, shallow=False)
    assert json.loads((tmp_path / "a.tsv.meta").read_text()) == json.loads(
        (tmp_path / "b.tsv.meta").read_text())


def test_pagerank_rows_sorted_and_counted(tmp_path):
    out = tmp_path / "pr.tsv"
    run(["pagerank", "--set", "t10", "--grid", "8", "--nc", "100", "-o", str(out)])
    rows = read_rows(out)
    assert len(rows) == 64
    assert header_columns(out) == ["rank_index", "node_index", "x_center",
                                   "y_center", "p"]
    ranks = [int(r[0]) for r in rows]
    assert ranks == list(range(1, 65))
    ps = [float(r[4]) for r in rows]
    assert all(ps[i] >= ps[i + 1] for i in range(len(ps) - 1))
    assert sum(ps) == pytest.approx(1.0, abs=1e-9)
    meta = json.loads((tmp_path / "pr.tsv.meta").read_text())
    assert meta["tool"] == "ulamnet"
    assert meta["config"]["alpha"] == 0.85
    assert meta["results"]["converged"] is True


def test_pagerank_nonconvergence_exits_3_but_writes(tmp_path):
    out = tmp_path / "pr.tsv"
    rc = main(["pagerank", "--set", "t10", "--grid", "6", "--nc", "64",
               "--alpha", "1.0", "--max-iter", "3", "-o", str(out)])
    assert rc == 3
    assert out.exists() and len(read_rows(out)) == 36


def test_linkstats_schema_and_fit_file(tmp_path):
    out = tmp_path / "ls.tsv"
    run(["linkstats", "--set", "t10", "--grid", "8", "--nc", "100",
         "--fit-lo", "1", "--fit-hi", "30", "-o", str(out)])
    assert header_columns(out) == ["direction", "kappa", "count"]
    rows = read_rows(out)
    assert {r[0] for r in rows} == {"in", "out"}
    # total node count per direction equals N
    for d in ("in", "out"):
        assert sum(int(r[2]) for r in rows if r[0] == d) == 64
    fit = tmp_path / "ls_fit.tsv"
    assert header_columns(fit) == ["direction", "mu", "prefactor", "range",
                                   "residual"]
    frows = read_rows(fit)
    assert [r[0] for r in frows] == ["in", "out"]
    assert all(r[3] == "1:30" for r in frows)


def test_spectrum_schema_and_density(tmp_path):
    out = tmp_path / "sp.tsv"
    run(["spectrum", "--set", "t10", "--grid", "6", "--nc", "100",
         "--alpha", "1.0", "--density", "--bins", "30", "-o", str(out)])
    assert header_columns(out) == ["index", "re_lambda", "im_lambda",
                                   "abs_lambda", "gamma", "xi", "residual"]
    rows = read_rows(out)
    assert len(rows) == 36
    assert float(rows[0][3]) == pytest.approx(1.0, abs=1e-10)
    assert float(rows[0][1]) == pytest.approx(1.0, abs=1e-10)
    mags = [float(r[3]) for r in rows]
    assert all(mags[i] >= mags[i + 1] - 1e-14 for i in range(len(mags) - 1))
    dens = read_rows(tmp_path / "sp_density.tsv")
    assert len(dens) == 30
    total = sum((float(hi) - float(lo)) * float(d) for lo, hi, d in dens)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_spectrum_no_vectors_writes_nan_columns(tmp_path):
    out = tmp_path / "sp.tsv"
    run(["spectrum", "--set", "t10", "--grid", "5", "--nc", "64",
         "--no-vectors", "-o", str(out)])
    rows = read_rows(out)
    assert all(r[5] == "nan" and r[6] == "nan" for r in rows)


def test_weyl_needs_three_grids(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["weyl", "--grids", "6,9", "-o", str(tmp_path / "w.tsv")])
    assert exc.value.code == 2
    assert "--grids" in capsys.readouterr().err


def test_weyl_footer_reports_fit(tmp_path):
    out = tmp_path / "w.tsv"
    run(["weyl", "--set", "t10", "--grids", "5,7,9", "--nc", "100",
         "--gamma-b", "6", "--h-numeric", "0.0851", "-o", str(out)])
    text = out.read_text()
    footer = [l for l in text.splitlines() if l.startswith("# A=")]
    assert len(footer) == 1 and "nu=" in footer[0] and "nu_theory=" in footer[0]
    assert len(read_rows(out)) == 3
    meta = json.loads((out.with_suffix(".tsv.meta")).read_text())
    assert meta["results"]["nu_theory"] == pytest.approx(
        1.0 - phase_set_t10().gamma_c / (10 * 0.0851), abs=1e-12)


def test_gap_table_spans_requested_top(tmp_path):
    out = tmp_path / "g.tsv"
    run(["gap", "--set", "t10", "--grids", "6,8", "--n-top", "3",
         "--alpha", "0.85", "--nc", "100", "-o", str(out)])
    rows = read_rows(out)
    assert [(int(r[0]), int(r[1])) for r in rows] == [
        (36, 0), (36, 1), (36, 2), (64, 0), (64, 1), (64, 2)]
    for r in rows:
        if int(r[1]) > 0:
            assert float(r[2]) >= 0.15 - 1e-9  # non-leading |lambda| <= alpha


def test_contraction_schema_and_reference(tmp_path):
    out = tmp_path / "c.tsv"
    run(["contraction", "--set", "t10", "--grid", "8", "--nc", "100",
         "--qs", "0.001,0.01,0.1", "-o", str(out)])
    assert header_columns(out) == ["q", "N_Gamma", "Gamma", "Gamma_c"]
    rows = read_rows(out)
    assert len(rows) == 3
    for q, n_gamma, gamma, gamma_c in rows:
        assert 0.0 <= float(gamma) <= 1.0
        assert float(gamma_c) == pytest.approx(0.99**10, abs=1e-12)
    gammas = [float(r[2]) for r in rows]
    assert all(gammas[i] >= gammas[i + 1] for i in range(len(gammas) - 1))


def test_contraction_rejects_q_outside_unit_interval(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["contraction", "--set", "t10", "--grid", "6", "--qs", "0,0.1"])
    assert exc.value.code == 2
    assert "--qs" in capsys.readouterr().err


def test_scan_alpha_writes_verdict_per_row(tmp_path):
    out = tmp_path / "sa.tsv"
    run(["scan-alpha", "--set", "t10", "--alphas", "0.85", "--grids", "6,24",
         "--nc", "100", "-o", str(out)])
    assert header_columns(out) == ["alpha", "N", "xi", "iterations", "residual",
                                   "converged", "verdict"]
    rows = read_rows(out)
    assert len(rows) == 2
    assert {r[6] for r in rows} <= {"localized", "delocalized", "indeterminate"}
    meta = json.loads((out.with_suffix(".tsv.meta")).read_text())
    assert meta["results"]["0.85"] in {"localized", "delocalized", "indeterminate"}


def test_scan_k_column_named_k(tmp_path):
    out = tmp_path / "sk.tsv"
    run(["scan-k", "--set", "t10", "--ks", "0.22,0.6", "--grids", "6,24",
         "--nc", "64", "--alpha", "0.99", "-o", str(out)])
    assert header_columns(out)[0] == "k"
    assert len(read_rows(out)) == 4


def test_bifurcation_row_accounting(tmp_path):
    out = tmp_path / "b.tsv"
    run(["bifurcation", "--set", "t10", "--ks", "0.5,0.6", "--ntraj", "2",
         "--early", "5:7", "--late", "20:22", "-o", str(out)])
    rows = read_rows(out)
    assert len(rows) == 2 * 2 * (2 + 2)
    early = [r for r in rows if r[1] == "early"]
    assert {int(r[3]) for r in early} == {6, 7}
    late = [r for r in rows if r[1] == "late"]
    assert {int(r[3]) for r in late} == {21, 22}
    for r in rows:
        assert -math.pi <= float(r[4]) < math.pi


def test_lyapunov_key_value_output(tmp_path):
    out = tmp_path / "ly.tsv"
    run(["lyapunov", "--set", "t10", "--eta", "1.0", "--iters", "200000",
         "-o", str(out)])
    rows = dict(read_rows(out))
    assert 0.05 < float(rows["h"]) < 0.12
    assert rows["converged"] == "True"
    assert int(rows["n_iterations"]) == 200000


def test_outdir_env_var_sets_default_location(tmp_path, monkeypatch):
    monkeypatch.setenv("ULAMNET_OUTDIR", str(tmp_path))
    run(["lyapunov", "--set", "t10", "--iters", "50000", "--drift-tol", "1"])
    assert (tmp_path / "lyapunov_t10.tsv").exists()
    assert (tmp_path / "lyapunov_t10.tsv.meta").exists()


def test_explicit_output_beats_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("ULAMNET_OUTDIR", str(tmp_path / "unused"))
    out = tmp_path / "here.tsv"
    run(["lyapunov", "--set", "t10", "--iters", "50000", "--drift-tol", "1",
         "-o", str(out)])
    assert out.exists()
    assert not (tmp_path / "unused").exists()


def test_set_accepts_config_file(tmp_path):
    cfg = tmp_path / "custom.cfg"
    save_phase_set(phase_set_t10(k=0.31), str(cfg))
    out = tmp_path / "pr.tsv"
    run(["pagerank", "--set", str(cfg), "--grid", "6", "--nc", "64",
         "-o", str(out)])
    meta = json.loads((tmp_path / "pr.tsv.meta").read_text())
    assert meta["config"]["set"] == "custom"
    assert meta["config"]["k"] == 0.31


def test_set_file_errors_are_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["pagerank", "--set", str(tmp_path / "missing.cfg"), "--grid", "4"])
    assert exc.value.code == 2
    assert "--set" in capsys.readouterr().err


def test_threads_flag_accepted(tmp_path):
    out = tmp_path / "pr.tsv"
    run(["pagerank", "--set", "t10", "--grid", "6", "--nc", "64",
         "--threads", "1", "-o", str(out)])
    assert out.exists()
