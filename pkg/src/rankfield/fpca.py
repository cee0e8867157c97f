"""Functional PCA of rank functions via the weighted Gram matrix.

Centered sample functions span an (n-1)-dimensional space, so the
eigenproblem is solved on the n x n matrix of weighted inner products;
component functions are recovered as normalized linear combinations of
the centered samples and scores as inner products against them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GridMismatch, TooFewFunctions
from .rankspace import Grid, RankFunction, WeightFunction, format_rank, read_rank

_RANK_CUTOFF = 1e-12  # relative eigenvalue threshold for rank deficiency


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi.

    Sweeps the strict upper triangle in a fixed row-major order until the
    off-diagonal Frobenius mass falls below ``tol`` times the matrix norm,
    so results are reproducible bit-for-bit.  Returns (values, vectors)
    sorted by descending eigenvalue, vectors in columns.
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or not np.allclose(a, a.T, atol=1e-12 * (1 + np.abs(a).max())):
        raise ValueError("jacobi_eigh expects a symmetric square matrix")
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2) * 2.0)
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return values[order], v[:, order]


@dataclass
class PCAModel:
    """Fitted functional PCA: mean, unit-norm components, eigenvalues, scores."""

    mean: RankFunction
    phi: WeightFunction
    components: np.ndarray  # (r, grid.size) centered functions, unit weighted norm
    eigenvalues: np.ndarray  # (r,) nonincreasing, >= 0
    scores: np.ndarray  # (n, r)
    explained_variance_ratio: np.ndarray  # (r,)
    total_variance: float
    gram_trace: float
    gram_min_eigenvalue: float

    @property
    def n_components(self) -> int:
        return len(self.eigenvalues)


def fit(functions: list[RankFunction], phi: WeightFunction, r: int) -> PCAModel:
    """Fit a PCA model to rank functions sharing one grid and dimension.

    Centers by the pointwise mean, eigendecomposes the weighted Gram
    matrix, and keeps at most ``r`` components; trailing eigenvalues below
    the rank cutoff are clamped to zero and their components omitted.
    """
    n = len(functions)
    if n < 2:
        raise TooFewFunctions(f"PCA needs at least 2 functions, got {n}")
    if not 1 <= r <= n - 1:
        raise ValueError(f"components requested must be in [1, n-1] = [1, {n - 1}], got {r}")
    first = functions[0]
    for f in functions[1:]:
        if not f.compatible(first):
            raise GridMismatch("PCA inputs must share grid and homology dimension")

    from .rankspace import mean as rank_mean

    mu = rank_mean(functions)
    centered = np.stack([f.values - mu.values for f in functions])
    w = first.grid.quadrature_weights(phi)
    gram = (centered * w[None, :]) @ centered.T
    gram = 0.5 * (gram + gram.T)

    eigvals, eigvecs = jacobi_eigh(gram)
    gram_min = float(eigvals.min())
    positive = np.clip(eigvals, 0.0, None)
    total = float(positive.sum())

    cutoff = _RANK_CUTOFF * positive[0] if positive[0] > 0 else np.inf
    rank = int(np.sum(positive >= cutoff)) if np.isfinite(cutoff) else 0
    keep = min(r, rank)

    components = np.zeros((keep, first.grid.size))
    scores = np.zeros((n, keep))
    lams = positive[:keep].copy()
    for j in range(keep):
        coefs = eigvecs[:, j]
        comp = coefs @ centered
        nrm = float(np.sqrt(coefs @ gram @ coefs))
        comp = comp / nrm
        sj = (centered * w[None, :]) @ comp
        # sign convention: largest-magnitude entry of the component is positive
        peak = int(np.argmax(np.abs(comp)))
        if comp[peak] < 0:
            comp = -comp
            sj = -sj
        components[j] = comp
        scores[:, j] = sj

    ratios = lams / total if total > 0 else np.zeros(keep)
    return PCAModel(
        mean=mu,
        phi=phi,
        components=components,
        eigenvalues=lams,
        scores=scores,
        explained_variance_ratio=ratios,
        total_variance=total,
        gram_trace=float(np.trace(gram)),
        gram_min_eigenvalue=gram_min,
    )


def project(model: PCAModel, f: RankFunction) -> np.ndarray:
    """Score vector of an out-of-sample function: <zeta_j, f - mean>."""
    if not f.compatible(model.mean):
        raise GridMismatch("function does not live on the model grid/dimension")
    w = model.mean.grid.quadrature_weights(model.phi)
    centered = f.values - model.mean.values
    return model.components @ (w * centered)


# ---------------------------------------------------------------------------
# Model file format: JSON header + component/mean CSVs + scores CSV
# ---------------------------------------------------------------------------

def save_pca_model(model: PCAModel, out_dir, pattern_ids: list[str] | None = None) -> dict:
    """Write model.json, mean/component rank CSVs, and a scores CSV.

    Returns the header dict (paths are relative to ``out_dir``).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = model.mean.grid
    header = {
        "grid": [grid.a0, grid.a1, grid.m],
        "dim": model.mean.dim,
        "phi": model.phi.descriptor(),
        "eigenvalues": [float(v) for v in model.eigenvalues],
        "explained_variance_ratio": [float(v) for v in model.explained_variance_ratio],
        "total_variance": model.total_variance,
        "gram_trace": model.gram_trace,
        "gram_min_eigenvalue": model.gram_min_eigenvalue,
        "mean_file": "mean.csv",
        "component_files": [f"component_{j + 1}.csv" for j in range(model.n_components)],
        "scores_file": "scores.csv",
    }
    (out / "mean.csv").write_text(format_rank(model.mean, model.phi))
    for j in range(model.n_components):
        comp = RankFunction(grid, model.mean.dim, model.components[j])
        (out / header["component_files"][j]).write_text(format_rank(comp, model.phi))
    ids = pattern_ids or [f"pattern_{i}" for i in range(model.scores.shape[0])]
    lines = ["id," + ",".join(f"s{j + 1}" for j in range(model.n_components))]
    for pid, row in zip(ids, model.scores):
        lines.append(pid + "," + ",".join(repr(float(v)) for v in row))
    (out / "scores.csv").write_text("\n".join(lines) + "\n")
    (out / "model.json").write_text(json.dumps(header, sort_keys=True, indent=2) + "\n")
    return header


def load_pca_model(model_dir) -> PCAModel:
    """Read a model directory written by :func:`save_pca_model`."""
    root = Path(model_dir)
    header = json.loads((root / "model.json").read_text())
    mean, phi = read_rank(root / header["mean_file"])
    comps = []
    for name in header["component_files"]:
        comp, _ = read_rank(root / name)
        comps.append(comp.values)
    components = np.array(comps).reshape(len(comps), mean.grid.size)
    scores_rows = (root / header["scores_file"]).read_text().strip().splitlines()[1:]
    scores = np.array([[float(v) for v in row.split(",")[1:]] for row in scores_rows]).reshape(
        len(scores_rows), len(comps)
    )
    return PCAModel(
        mean=mean,
        phi=phi,
        components=components,
        eigenvalues=np.array(header["eigenvalues"]),
        scores=scores,
        explained_variance_ratio=np.array(header["explained_variance_ratio"]),
        total_variance=header["total_variance"],
        gram_trace=header["gram_trace"],
        gram_min_eigenvalue=header["gram_min_eigenvalue"],
    )
