"""Monte-Carlo test of complete spatial randomness via rank functions.

The null model is fitted empirically: a mean rank function from one batch
of binomial patterns, a rejection cutoff from the squared distances of an
independent batch.  New patterns are rejected when their squared distance
to the mean exceeds the cutoff.  A power study runs the test over a list
of process models.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from .geometry import PointPattern, alpha_filtration
from .persistence import PersistenceDiagram, compute_persistence
from .pointproc import ProcessSpec, derive_seed, gen_binomial, sample
from .rankspace import (
    Grid,
    RankFunction,
    WeightFunction,
    distance,
    format_rank,
    mean,
    rank_from_diagram,
    read_rank,
)


@dataclass
class CSRModel:
    """Fitted null model for one homology dimension."""

    mean_rank: RankFunction
    phi: WeightFunction
    null_distances: np.ndarray  # sorted squared distances of held-out CSR patterns
    cutoff: float
    p_level: float
    n_points: int
    fit_seed: int

    @property
    def grid(self) -> Grid:
        return self.mean_rank.grid

    @property
    def dim(self) -> int:
        return self.mean_rank.dim


@dataclass
class TestResult:
    distance_squared: float
    reject: bool


@dataclass
class PowerTable:
    """Rejection counts: one row per tested dimension, one column per model."""

    dims: list[int]
    labels: list[str]
    counts: np.ndarray  # (len(dims), len(labels)) ints
    n_test: int

    def to_csv_text(self) -> str:
        lines = ["test," + ",".join(self.labels)]
        for dim, row in zip(self.dims, self.counts):
            lines.append(f"dim{dim}," + ",".join(str(int(c)) for c in row))
        return "\n".join(lines) + "\n"

    def to_aligned_text(self) -> str:
        head = ["test"] + self.labels
        rows = [[f"dim {d}"] + [str(int(c)) for c in row] for d, row in zip(self.dims, self.counts)]
        widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
        out = ["  ".join(h.ljust(w) for h, w in zip(head, widths))]
        for r in rows:
            out.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
        out.append(f"(rejections out of {self.n_test} patterns per model)")
        return "\n".join(out) + "\n"


def pattern_diagram(pattern: PointPattern) -> PersistenceDiagram:
    """Full per-pattern pipeline: filtration then persistence."""
    return compute_persistence(alpha_filtration(pattern))


def _binomial_diagram(seed: int, n_points: int) -> PersistenceDiagram:
    return pattern_diagram(gen_binomial(n_points, seed=seed))


def _spec_diagram(seed: int, spec_dict: dict) -> PersistenceDiagram:
    return pattern_diagram(sample(ProcessSpec.from_dict(spec_dict), seed))


def _map_ordered(fn, items, jobs: int) -> list:
    if jobs <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        chunk = max(1, len(items) // (4 * jobs))
        return list(ex.map(fn, items, chunksize=chunk))


def empirical_cutoff(null_distances: np.ndarray, p_level: float) -> float:
    """(1 - p) empirical quantile with 'higher' interpolation (conservative)."""
    return float(np.quantile(np.asarray(null_distances), 1.0 - p_level, method="higher"))


def fit_csr(
    n_mean: int,
    n_null: int,
    n_points: int,
    k: int,
    grid: Grid,
    phi: WeightFunction,
    seed: int,
    p_level: float = 0.05,
    jobs: int = 1,
) -> CSRModel:
    """Fit the null model from binomial patterns.

    Seeds run seed..seed+n_mean-1 for the mean batch and the following
    n_null values for the held-out distance batch, so a fit is fully
    reproducible from (arguments, seed).
    """
    if n_mean < 2 or n_null < 2:
        raise ValueError("need at least 2 patterns in each batch")
    work = partial(_binomial_diagram, n_points=n_points)
    mean_seeds = [derive_seed(seed, i) for i in range(n_mean)]
    null_seeds = [derive_seed(seed, n_mean + i) for i in range(n_null)]
    mean_diagrams = _map_ordered(work, mean_seeds, jobs)
    mean_rank = mean([rank_from_diagram(d, k, grid) for d in mean_diagrams])
    null_diagrams = _map_ordered(work, null_seeds, jobs)
    dists = np.sort(
        [distance(rank_from_diagram(d, k, grid), mean_rank, phi) ** 2 for d in null_diagrams]
    )
    return CSRModel(
        mean_rank=mean_rank,
        phi=phi,
        null_distances=dists,
        cutoff=empirical_cutoff(dists, p_level),
        p_level=p_level,
        n_points=n_points,
        fit_seed=seed,
    )


def test_rank_function(model: CSRModel, rank: RankFunction) -> TestResult:
    """Decide on a precomputed rank function (must live on the model grid)."""
    d2 = distance(rank, model.mean_rank, model.phi) ** 2
    return TestResult(distance_squared=d2, reject=bool(d2 > model.cutoff))


def test_pattern(model: CSRModel, pattern: PointPattern) -> TestResult:
    """Squared distance of the pattern's rank function to the null mean,
    rejected when above the fitted cutoff."""
    rank = rank_from_diagram(pattern_diagram(pattern), model.dim, model.grid)
    return test_rank_function(model, rank)


def power_study(
    specs: list[ProcessSpec],
    n_test: int,
    models: dict[int, CSRModel],
    seed: int,
    jobs: int = 1,
) -> PowerTable:
    """Rejection counts of every model's test over every process spec.

    Pattern s of spec number i uses seed + i * n_test + s; each pattern is
    pushed through persistence once and tested in all requested dimensions.
    """
    dims = sorted(models)
    counts = np.zeros((len(dims), len(specs)), dtype=int)
    for i, spec in enumerate(specs):
        if n_test == 0:
            continue
        seeds = [derive_seed(seed, i * n_test + s) for s in range(n_test)]
        diagrams = _map_ordered(partial(_spec_diagram, spec_dict=spec.to_dict()), seeds, jobs)
        for row, k in enumerate(dims):
            model = models[k]
            for diag in diagrams:
                rank = rank_from_diagram(diag, k, model.grid)
                if test_rank_function(model, rank).reject:
                    counts[row, i] += 1
    return PowerTable(dims=dims, labels=[s.label for s in specs], counts=counts, n_test=n_test)


# ---------------------------------------------------------------------------
# Model file format: JSON + mean rank CSV
# ---------------------------------------------------------------------------

def save_csr_model(model: CSRModel, out_dir) -> dict:
    """Write csr_model.json and mean_rank.csv; returns the JSON header."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = model.grid
    header = {
        "cutoff": model.cutoff,
        "p_level": model.p_level,
        "null_distances": [float(v) for v in model.null_distances],
        "grid": [grid.a0, grid.a1, grid.m],
        "dim": model.dim,
        "phi": model.phi.descriptor(),
        "n_points": model.n_points,
        "fit_seed": model.fit_seed,
        "mean_rank_file": "mean_rank.csv",
    }
    (out / "mean_rank.csv").write_text(format_rank(model.mean_rank, model.phi))
    (out / "csr_model.json").write_text(json.dumps(header, sort_keys=True, indent=2) + "\n")
    return header


def load_csr_model(path) -> CSRModel:
    """Read a model from its JSON file (or the directory holding it)."""
    p = Path(path)
    if p.is_dir():
        p = p / "csr_model.json"
    header = json.loads(p.read_text())
    mean_rank, phi = read_rank(p.parent / header["mean_rank_file"])
    return CSRModel(
        mean_rank=mean_rank,
        phi=phi,
        null_distances=np.array(header["null_distances"]),
        cutoff=header["cutoff"],
        p_level=header["p_level"],
        n_points=header["n_points"],
        fit_seed=header["fit_seed"],
    )
