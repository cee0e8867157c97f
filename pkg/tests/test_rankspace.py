import math

import numpy as np
import pytest

from rankfield import (
    EmptyInput,
    Grid,
    GridMismatch,
    PersistenceDiagram,
    RankFunction,
    WeightFunction,
    alpha_filtration,
    compute_persistence,
    distance,
    inner_product,
    mean,
    monotonicity_defect,
    rank_from_diagram,
)
from rankfield.rankspace import format_rank, format_rank_matrix, read_rank

from conftest import seeded_pattern
from oracles import betti_oracle, exhaustive_rectangle_defect, naive_rank_values

PHI = WeightFunction("indicator")


def seeded_diagram(seed, n=60):
    return compute_persistence(alpha_filtration(seeded_pattern(seed, n)))


def seeded_rank(seed, k=1, grid=Grid(0.0, 0.5, 40), n=60):
    return rank_from_diagram(seeded_diagram(seed, n), k, grid)


# -----------------------------------------------------------------------------
# Grid and weights
# -----------------------------------------------------------------------------
def test_grid_node_count():
    g = Grid(0.0, 1.0, 7)
    x, y = g.nodes()
    assert len(x) == 7 * 8 // 2 == g.size
    assert np.all(x <= y)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(0.5, 0.5, 10)
    with pytest.raises(ValueError):
        Grid(0.0, 1.0, 1)


def test_weight_functions():
    ind = WeightFunction("indicator")
    assert np.all(ind(np.linspace(0, 2, 5)) == 1.0)
    exp = WeightFunction.parse("exp:2.0")
    assert exp(np.array([0.0, 1.0])) == pytest.approx([1.0, math.exp(-2.0)])
    assert WeightFunction.parse(exp.descriptor()) == exp
    with pytest.raises(ValueError):
        WeightFunction.parse("gaussian")
    with pytest.raises(ValueError):
        WeightFunction("exp", 0.0)


# -----------------------------------------------------------------------------
# rank_from_diagram
# -----------------------------------------------------------------------------
def test_rank_of_empty_diagram_is_zero():
    f = rank_from_diagram(PersistenceDiagram(), 1, Grid(0.0, 0.5, 10))
    assert np.all(f.values == 0.0)


def test_rank_single_point_indicator_triangle():
    grid = Grid(0.0, 2.0, 21)
    death = 2.0 / math.sqrt(3.0)
    f = rank_from_diagram(PersistenceDiagram(np.array([[1, 1.0, death]])), 1, grid)
    x, y = grid.nodes()
    assert np.array_equal(f.values, ((x >= 1.0) & (y < death)).astype(float))


@pytest.mark.parametrize("seed", [70, 71, 72])
@pytest.mark.parametrize("k", [0, 1])
def test_rank_matches_naive_counting(seed, k):
    grid = Grid(0.0, 0.5, 25)
    diagram = seeded_diagram(seed, n=50)
    f = rank_from_diagram(diagram, k, grid)
    assert np.array_equal(f.values, naive_rank_values(diagram, k, grid))
    assert np.all(f.values == np.round(f.values))  # integer-valued for single diagrams


def test_rank_additive_over_diagram_union():
    grid = Grid(0.0, 0.5, 30)
    d1, d2 = seeded_diagram(73), seeded_diagram(74)
    merged = PersistenceDiagram(np.vstack([d1.points, d2.points]))
    total = rank_from_diagram(merged, 1, grid)
    parts = rank_from_diagram(d1, 1, grid).values + rank_from_diagram(d2, 1, grid).values
    assert np.array_equal(total.values, parts)


@pytest.mark.parametrize("seed", [80, 81, 82])
def test_diagonal_equals_betti_number(seed):
    pattern = seeded_pattern(seed, 12)
    fc = alpha_filtration(pattern)
    diagram = compute_persistence(fc)
    grid = Grid(0.0, 0.4, 9)
    for k in (0, 1):
        f = rank_from_diagram(diagram, k, grid)
        x, y = grid.nodes()
        for a in grid.axis:
            node = int(np.nonzero((x == a) & (y == a))[0][0])
            assert f.values[node] == betti_oracle(fc, k, a), f"k={k}, a={a}"


# -----------------------------------------------------------------------------
# distance / inner product
# -----------------------------------------------------------------------------
def test_distance_to_self_is_zero():
    f = seeded_rank(90)
    assert distance(f, f, PHI) == 0.0


def test_distance_single_cell_weight():
    grid = Grid(0.0, 2.0, 21)
    zero = RankFunction(grid, 0, np.zeros(grid.size))
    values = np.zeros(grid.size)
    off_diag = int(np.nonzero(~grid.diagonal_mask())[0][0])
    values[off_diag] = 1.0
    cell = RankFunction(grid, 0, values)
    assert distance(cell, zero, PHI) ** 2 == pytest.approx(grid.spacing ** 2, rel=1e-12)


def test_distance_refined_quadrature_agreement():
    # same two diagrams discretized at M and 10x finer must agree within 2%
    coarse, fine = Grid(0.0, 0.5, 201), Grid(0.0, 0.5, 2001)
    d1, d2 = seeded_diagram(11, n=40), seeded_diagram(12, n=40)
    for k in (0, 1):
        a = distance(rank_from_diagram(d1, k, coarse), rank_from_diagram(d2, k, coarse), PHI)
        b = distance(rank_from_diagram(d1, k, fine), rank_from_diagram(d2, k, fine), PHI)
        assert abs(a - b) / b < 0.02, f"k={k}: {a} vs {b}"


def test_distance_symmetry_and_triangle_inequality():
    f, g, h = seeded_rank(91), seeded_rank(92), seeded_rank(93)
    assert distance(f, g, PHI) == pytest.approx(distance(g, f, PHI), abs=1e-15)
    assert distance(f, h, PHI) <= distance(f, g, PHI) + distance(g, h, PHI) + 1e-9


def test_distance_grid_mismatch():
    f = seeded_rank(94, grid=Grid(0.0, 0.5, 40))
    h = seeded_rank(94, grid=Grid(0.0, 0.5, 41))
    with pytest.raises(GridMismatch):
        distance(f, h, PHI)
    h2 = seeded_rank(94, k=0)
    with pytest.raises(GridMismatch):
        distance(f, h2, PHI)


def test_inner_product_identities():
    grid = Grid(0.0, 0.5, 40)
    zero = RankFunction(grid, 1, np.zeros(grid.size))
    u, h = seeded_rank(95), seeded_rank(96)
    assert inner_product(u, zero, PHI) == 0.0
    # <u, u> equals squared distance of u + h to h
    shifted = RankFunction(grid, 1, u.values + h.values)
    assert inner_product(u, u, PHI) == pytest.approx(distance(shifted, h, PHI) ** 2, rel=1e-12)


@pytest.mark.parametrize("phi", [PHI, WeightFunction("exp", 3.0)])
def test_cauchy_schwarz_on_seeded_pairs(phi):
    for seed in range(100, 150):
        u, v = seeded_rank(seed, n=30), seeded_rank(seed + 1000, n=30)
        lhs = abs(inner_product(u, v, phi))
        rhs = math.sqrt(inner_product(u, u, phi) * inner_product(v, v, phi))
        assert lhs <= rhs + 1e-12


@pytest.mark.parametrize("phi", [PHI, WeightFunction("exp", 1.0)])
def test_distances_finite_on_seeded_pairs(phi):
    # finite-distance guarantee: patterns in a shared window, both weights
    for seed in range(200, 250):
        d = distance(seeded_rank(seed, n=25), seeded_rank(seed + 500, n=25), phi)
        assert math.isfinite(d) and d >= 0


# -----------------------------------------------------------------------------
# mean and monotonicity
# -----------------------------------------------------------------------------
def test_mean_of_single_function_is_identity():
    f = seeded_rank(97)
    assert np.array_equal(mean([f]).values, f.values)


def test_mean_with_zero_halves():
    f = seeded_rank(98)
    zero = RankFunction(f.grid, f.dim, np.zeros(f.grid.size))
    assert np.array_equal(mean([f, zero]).values, f.values / 2.0)


def test_mean_requires_input():
    with pytest.raises(EmptyInput):
        mean([])


def test_mean_monotonicity_unit_cells_and_exhaustive():
    fs = [seeded_rank(300 + s, grid=Grid(0.0, 0.5, 12), n=40) for s in range(10)]
    mu = mean(fs)
    assert monotonicity_defect(mu) >= -1e-9
    # literal scan over every rectangle agrees with the unit-cell reduction
    assert exhaustive_rectangle_defect(mu) >= -1e-9


def test_rank_function_monotonicity_defect_detects_violation():
    grid = Grid(0.0, 1.0, 3)
    values = np.zeros(grid.size)
    values[1] = 1.0  # isolated bump at (x0, y1): no diagram measure allows it
    bad = RankFunction(grid, 0, values)
    assert monotonicity_defect(bad) < -1e-9


# -----------------------------------------------------------------------------
# File format
# -----------------------------------------------------------------------------
def test_rank_csv_roundtrip(tmp_path):
    f = seeded_rank(99)
    path = tmp_path / "f.rank.csv"
    path.write_text(format_rank(f, WeightFunction("exp", 2.5), {"source": "test"}))
    back, phi = read_rank(path)
    assert back.grid == f.grid
    assert back.dim == f.dim
    assert np.array_equal(back.values, f.values)
    assert phi == WeightFunction("exp", 2.5)


def test_rank_matrix_shape():
    f = seeded_rank(99, grid=Grid(0.0, 0.5, 8))
    lines = format_rank_matrix(f).strip().splitlines()
    assert len(lines) == 8
    assert all(len(line.split()) == 8 for line in lines)


def test_rank_csv_reports_bad_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# grid 0.0 0.5 3\n# dim 0\n# phi indicator\nx,y,value\n0,0,oops\n")
    with pytest.raises(ValueError, match=r"bad\.csv:5"):
        read_rank(path)
