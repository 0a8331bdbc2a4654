import math

import numpy as np
import pytest
import scipy.sparse as sp

from ulamnet.typical_map import (
    MapState,
    PhaseSet,
    TWO_PI,
    iterate_period,
    phase_set_t10,
)
from ulamnet.ulam_net import (
    CellGrid,
    UlamMatrix,
    build_ulam_matrix,
    cell_center,
    cell_of,
    export_matrix,
    fit_power_law,
    import_matrix,
    link_stats,
    normalize_adjacency,
)


def test_grid_basics():
    g = CellGrid(600)
    assert g.n_y == 600
    assert g.N == 360_000
    assert g.cell_width_x == pytest.approx(TWO_PI / 600)
    assert g.sigma == pytest.approx(TWO_PI / 600)
    with pytest.raises(ValueError):
        CellGrid(0)


def test_cell_of_corner_cell():
    g = CellGrid(2, 2)
    assert cell_of(0.1, -3.0, g) == 0
    assert cell_center(0, g) == pytest.approx((math.pi / 2, -math.pi / 2))


def test_cell_round_trip_full_grid():
    g = CellGrid(600)
    for j in range(0, g.N, 7):
        x, y = cell_center(j, g)
        assert cell_of(x, y, g) == j
    # and densely on a smaller grid
    g = CellGrid(13, 7)
    for j in range(g.N):
        x, y = cell_center(j, g)
        assert cell_of(x, y, g) == j


def test_cell_of_boundaries():
    g = CellGrid(10, 10)
    eps = 1e-12
    assert cell_of(0.0, -math.pi, g) == 0
    assert cell_of(TWO_PI - eps, -math.pi, g) == g.n_y * 9
    assert cell_of(0.0, math.pi - eps, g) == 9
    with pytest.raises(ValueError):
        cell_of(TWO_PI, 0.0, g)
    with pytest.raises(ValueError):
        cell_of(-0.1, 0.0, g)
    with pytest.raises(ValueError):
        cell_of(1.0, math.pi, g)
    with pytest.raises(ValueError):
        cell_center(g.N, g)


def test_build_columns_sum_to_one():
    M = build_ulam_matrix(phase_set_t10(), CellGrid(20), n_c=49, seed=3)
    sums = np.asarray(M.S.sum(axis=0)).ravel()
    assert np.max(np.abs(sums - 1.0)) < 1e-12
    assert M.S.data.min() > 0.0
    assert M.S.data.max() <= 1.0


def test_build_matches_brute_force_enumeration():
    # k=0, T=1 free rotation: endpoints enumerable exactly with the
    # pure-Python map; matrices must agree bit for bit
    ps = PhaseSet(T=1, theta=(0.0,), k=0.0, eta=1.0)
    g = CellGrid(4, 4)
    n_c = 10_000
    m = 100
    M = build_ulam_matrix(ps, g, n_c=n_c, seed=0)

    counts: dict[tuple[int, int], int] = {}
    for j in range(g.N):
        cx, ry = divmod(j, g.n_y)
        x0 = cx * g.cell_width_x
        y0 = -math.pi + ry * g.cell_width_y
        for a in range(m):
            for b in range(m):
                x = x0 + (a + 0.5) * g.cell_width_x / m
                y = y0 + (b + 0.5) * g.cell_width_y / m
                s = iterate_period(MapState(x, y), ps)
                i = cell_of(s.x, s.y, g)
                counts[(i, j)] = counts.get((i, j), 0) + 1
    rows, cols, vals = zip(*(((i, j, c / n_c)) for (i, j), c in counts.items()))
    expected = sp.csc_matrix((vals, (rows, cols)), shape=(g.N, g.N))
    expected.sort_indices()

    assert M.S.nnz == expected.nnz
    assert np.array_equal(M.S.indptr, expected.indptr)
    assert np.array_equal(M.S.indices, expected.indices)
    assert np.array_equal(M.S.data, expected.data)


def test_build_deterministic():
    ps = phase_set_t10()
    g = CellGrid(15)
    for n_c in (49, 30):  # stratified and seeded-random placement
        a = build_ulam_matrix(ps, g, n_c=n_c, seed=5)
        b = build_ulam_matrix(ps, g, n_c=n_c, seed=5)
        assert np.array_equal(a.S.indptr, b.S.indptr)
        assert np.array_equal(a.S.indices, b.S.indices)
        assert np.array_equal(a.S.data, b.S.data)


def test_build_stratified_ignores_seed_random_does_not():
    ps = phase_set_t10()
    g = CellGrid(12)
    a = build_ulam_matrix(ps, g, n_c=25, seed=0)
    b = build_ulam_matrix(ps, g, n_c=25, seed=123)
    assert np.array_equal(a.S.data, b.S.data)
    c = build_ulam_matrix(ps, g, n_c=26, seed=0)
    d = build_ulam_matrix(ps, g, n_c=26, seed=123)
    assert (c.S != d.S).nnz > 0


def test_build_out_degree_bounds():
    M = build_ulam_matrix(phase_set_t10(k=0.6), CellGrid(25), n_c=36, seed=1)
    out_deg = np.diff(M.S.indptr)
    assert out_deg.max() <= min(M.n_c, M.N)
    assert out_deg.min() >= 1


def test_build_rejects_bad_inputs():
    with pytest.raises(ValueError):
        build_ulam_matrix(phase_set_t10(), CellGrid(4), n_c=0)


def test_normalize_adjacency_identity():
    S = normalize_adjacency(sp.identity(3, format="csc"))
    assert np.allclose(S.toarray(), np.eye(3))


def test_normalize_adjacency_dangling_column():
    A = np.ones((4, 4))
    A[:, 2] = 0.0
    S = normalize_adjacency(A)
    assert np.allclose(np.asarray(S.sum(axis=0)).ravel(), 1.0)
    assert np.allclose(S.toarray()[:, 2], 0.25)


def test_normalize_adjacency_hand_case():
    S = normalize_adjacency(np.array([[0.0, 1.0], [1.0, 1.0]]))
    assert np.allclose(S.toarray(), [[0.0, 0.5], [1.0, 0.5]])


def test_normalize_adjacency_rejects_negative():
    with pytest.raises(ValueError):
        normalize_adjacency(np.array([[1.0, -1.0], [0.0, 1.0]]))


def test_link_stats_identity():
    stats = link_stats(sp.identity(5, format="csc"))
    assert stats.in_degree_histogram == {1: 5}
    assert stats.out_degree_histogram == {1: 5}
    assert stats.n_zero_in == 0


def test_link_stats_histogram_sums_to_n():
    M = build_ulam_matrix(phase_set_t10(), CellGrid(30), n_c=100, seed=0)
    stats = link_stats(M)
    assert sum(stats.in_degree_histogram.values()) == M.N
    assert sum(stats.out_degree_histogram.values()) == M.N
    zero = stats.in_degree_histogram.get(0, 0)
    assert stats.n_zero_in == zero


def test_fit_power_law_exact_line():
    hist = {k: int(round(1e6 * k ** -2.0)) for k in range(1, 101)}
    fit = fit_power_law(hist, fit_range=(1, 100))
    assert fit.mu == pytest.approx(2.0, abs=2e-3)
    assert fit.n_bins_used == 100


def test_fit_power_law_insufficient_data():
    with pytest.raises(ValueError, match="insufficient"):
        fit_power_law({1: 10, 2: 5, 3: 2}, fit_range=(1, 10))


def test_export_import_round_trip(tmp_path):
    M = build_ulam_matrix(phase_set_t10(), CellGrid(9), n_c=30, seed=7)
    path = str(tmp_path / "m.txt")
    export_matrix(M, path)
    back = import_matrix(path)
    assert back.N == M.N
    assert back.n_c == M.n_c
    assert back.seed == M.seed
    assert back.grid == M.grid
    assert np.array_equal(back.S.indptr, M.S.indptr)
    assert np.array_equal(back.S.indices, M.S.indices)
    assert np.array_equal(back.S.data, M.S.data)


def test_import_hand_written_fixture(tmp_path):
    path = tmp_path / "small.txt"
    path.write_text("ulam 2 4 0\n0 0 0.25\n1 0 0.75\n0 1 1.0\n")
    M = import_matrix(str(path))
    assert M.N == 2
    assert M.S.nnz == 3
    assert np.allclose(M.S.toarray(), [[0.25, 1.0], [0.75, 0.0]])


def test_import_errors(tmp_path):
    bad_header = tmp_path / "a.txt"
    bad_header.write_text("matrix 2 4 0\n")
    with pytest.raises(ValueError, match="header"):
        import_matrix(str(bad_header))

    bad_line = tmp_path / "b.txt"
    bad_line.write_text("ulam 2 4 0\n0 0 1.0\nnope\n")
    with pytest.raises(ValueError, match="3"):
        import_matrix(str(bad_line))

    bad_index = tmp_path / "c.txt"
    bad_index.write_text("ulam 2 4 0\n0 5 1.0\n")
    with pytest.raises(ValueError, match="outside"):
        import_matrix(str(bad_index))

    bad_sum = tmp_path / "d.txt"
    bad_sum.write_text("ulam 2 4 0\n0 0 0.25\n1 0 0.25\n0 1 1.0\n")
    with pytest.raises(ValueError, match="column sums"):
        import_matrix(str(bad_sum))


def test_ulam_matrix_validate_catches_overfull_column():
    S = sp.csc_matrix(np.array([[0.5, 0.0], [0.5, 1.0]]))
    M = UlamMatrix(S=S, n_c=1)
    with pytest.raises(ValueError, match="entries than trajectories"):
        M.validate()
