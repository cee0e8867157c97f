import numpy as np
import pytest
import scipy.stats

from rankfield import (
    ConditioningTimeout,
    ProcessSpec,
    derive_seed,
    gen_baddeley_silverman,
    gen_binomial,
    gen_matern,
    gen_poisson,
    gen_strauss,
    sample,
)
from rankfield.pointproc import (
    _baddeley_silverman_attempt,
    _matern_attempt,
    _strauss_chain,
    close_pair_count,
)
import rankfield.pointproc as pointproc


def pair_probability_unit_square(r):
    """Exact P(|U - V| < r) for two uniform points in the unit square."""
    return np.pi * r ** 2 - 8.0 * r ** 3 / 3.0 + r ** 4 / 2.0


# -----------------------------------------------------------------------------
# binomial
# -----------------------------------------------------------------------------
def test_binomial_single_point():
    pattern = gen_binomial(1, seed=0)
    assert pattern.points.shape == (1, 2)
    assert np.all((pattern.points >= 0) & (pattern.points <= 1))


def test_binomial_large_sample_mean():
    pts = gen_binomial(10_000, seed=1).points
    assert np.all(np.abs(pts.mean(axis=0) - 0.5) < 0.01)


def test_binomial_quadrant_uniformity():
    pts = gen_binomial(10_000, seed=2).points
    counts = [
        np.sum((pts[:, 0] < 0.5) & (pts[:, 1] < 0.5)),
        np.sum((pts[:, 0] < 0.5) & (pts[:, 1] >= 0.5)),
        np.sum((pts[:, 0] >= 0.5) & (pts[:, 1] < 0.5)),
        np.sum((pts[:, 0] >= 0.5) & (pts[:, 1] >= 0.5)),
    ]
    chi2 = scipy.stats.chisquare(counts).statistic
    assert chi2 < scipy.stats.chi2.ppf(0.999, df=3)


def test_binomial_determinism():
    assert np.array_equal(gen_binomial(50, seed=9).points, gen_binomial(50, seed=9).points)
    assert not np.array_equal(gen_binomial(50, seed=9).points, gen_binomial(50, seed=10).points)


# -----------------------------------------------------------------------------
# poisson
# -----------------------------------------------------------------------------
def test_poisson_count_moments():
    counts = [len(gen_poisson(100.0, seed=s)) for s in range(2000)]
    assert abs(np.mean(counts) - 100.0) < 3.0
    assert abs(np.var(counts) / np.mean(counts) - 1.0) < 0.10


def test_poisson_tiny_intensity_empty():
    pattern = gen_poisson(1e-9, seed=3)
    assert len(pattern) == 0


# -----------------------------------------------------------------------------
# strauss
# -----------------------------------------------------------------------------
def test_strauss_single_point_matches_binomial():
    assert np.array_equal(gen_strauss(0.05, 0.5, 1, seed=4).points, gen_binomial(1, seed=4).points)


def test_strauss_gamma_one_pair_counts_match_binomial_expectation():
    # gamma = 1 accepts every move, so the chain stays exactly uniform
    r = 0.05
    expected = 100 * 99 / 2 * pair_probability_unit_square(r)
    counts = [close_pair_count(gen_strauss(r, 1.0, 100, seed=1000 + s).points, r) for s in range(500)]
    assert abs(np.mean(counts) - expected) / expected < 0.05


def test_strauss_gamma_one_is_csr_two_sample():
    r = 0.05
    strauss = [close_pair_count(gen_strauss(r, 1.0, 100, seed=1000 + s).points, r) for s in range(500)]
    binom = [close_pair_count(gen_binomial(100, seed=3000 + s).points, r) for s in range(500)]
    assert scipy.stats.mannwhitneyu(strauss, binom).pvalue > 0.01


def test_strauss_repulsion_lowers_pair_counts():
    r = 0.05
    repulsive = [close_pair_count(gen_strauss(r, 0.5, 100, seed=2000 + s).points, r) for s in range(500)]
    free = [close_pair_count(gen_strauss(r, 1.0, 100, seed=1000 + s).points, r) for s in range(500)]
    assert np.mean(repulsive) < np.mean(free)


def test_strauss_python_and_compiled_chains_agree():
    compiled = pointproc._strauss_chain_fast
    if compiled is _strauss_chain:
        pytest.skip("numba not installed; only one chain implementation")
    a = gen_strauss(0.05, 0.5, 60, seed=8)
    pointproc._strauss_chain_fast = _strauss_chain
    try:
        b = gen_strauss(0.05, 0.5, 60, seed=8)
    finally:
        pointproc._strauss_chain_fast = compiled
    assert np.array_equal(a.points, b.points)


def test_strauss_parameter_validation():
    with pytest.raises(ValueError):
        gen_strauss(0.05, 0.0, 10)
    with pytest.raises(ValueError):
        gen_strauss(0.0, 0.5, 10)


# -----------------------------------------------------------------------------
# matern
# -----------------------------------------------------------------------------
def test_matern_conditioning_exact_count():
    for s in range(5):
        assert len(gen_matern(10, 10, 0.02, 100, seed=s)) == 100


def test_matern_offspring_collapse_at_tiny_radius():
    rng = np.random.default_rng(0)
    parents, pts = _matern_attempt(rng, 10, 10, 1e-9)
    dists = np.linalg.norm(pts[:, None, :] - parents[None, :, :], axis=2)
    assert np.all(dists.min(axis=1) <= 1e-9)


def test_matern_clustering_shortens_nearest_neighbor_distances():
    def mean_nn(pts):
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        np.fill_diagonal(d, np.inf)
        return d.min(axis=1).mean()

    matern = np.mean([mean_nn(gen_matern(10, 10, 0.02, 100, seed=s).points) for s in range(200)])
    binom = np.mean([mean_nn(gen_binomial(100, seed=5000 + s).points) for s in range(200)])
    assert matern < binom


def test_matern_conditioning_timeout():
    with pytest.raises(ConditioningTimeout):
        gen_matern(0.1, 0.1, 0.02, 100, seed=0, max_attempts=50)


# -----------------------------------------------------------------------------
# baddeley-silverman
# -----------------------------------------------------------------------------
def test_bs_tile_counts_take_allowed_values():
    for s in range(20):
        counts, pts = _baddeley_silverman_attempt(np.random.default_rng(s))
        assert set(np.unique(counts)) <= {0, 1, 10}
        assert len(pts) == counts.sum()


def test_bs_unconditioned_total_mean():
    # per-tile mean is 0/10 + 1*(8/9) + 10/90 = 1 exactly, so totals average 100
    totals = [int(_baddeley_silverman_attempt(np.random.default_rng(10_000 + s))[0].sum())
              for s in range(2000)]
    assert abs(np.mean(totals) - 100.0) < 3.0


def test_bs_conditioned_points_inside_their_tiles():
    pattern = gen_baddeley_silverman(100, seed=6)
    assert len(pattern) == 100
    counts, pts = _baddeley_silverman_attempt(np.random.default_rng(6))
    assert counts.sum() == 100  # first accepted attempt for this seed
    tiles = np.floor(pts * 10).astype(int)
    flat = tiles[:, 1] * 10 + tiles[:, 0]
    got = np.bincount(flat, minlength=100)
    assert np.array_equal(np.sort(got), np.sort(counts))


def test_bs_conditioning_timeout():
    with pytest.raises(ConditioningTimeout):
        gen_baddeley_silverman(999, seed=0, max_attempts=10)


# -----------------------------------------------------------------------------
# specs and seed streams
# -----------------------------------------------------------------------------
def test_derive_seed_wraps():
    assert derive_seed(2 ** 64 - 1, 2) == 1


def test_spec_roundtrip_and_sampling():
    spec = ProcessSpec("strauss", n=30, interaction_radius=0.05, gamma=0.5)
    assert ProcessSpec.from_dict(spec.to_dict()) == spec
    a = sample(spec, seed=11)
    b = gen_strauss(0.05, 0.5, 30, seed=11)
    assert np.array_equal(a.points, b.points)


def test_spec_validation():
    with pytest.raises(ValueError, match="requires"):
        ProcessSpec("strauss", n=30)
    with pytest.raises(ValueError, match="unknown process kind"):
        ProcessSpec("thomas", n=30)
    with pytest.raises(ValueError, match="unknown process spec keys"):
        ProcessSpec.from_dict({"kind": "binomial", "n": 5, "oops": 1})


def test_conditioned_poisson_matches_count():
    pattern = sample(ProcessSpec("poisson", rho=50.0, n=50), seed=2)
    assert len(pattern) == 50
