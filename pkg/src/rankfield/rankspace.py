"""Grid-discretized rank functions and their weighted Hilbert space.

A rank function sampled on a triangular grid {(x_l, y_l): x_l <= y_l}
counts, at each node, the homology classes born by x_l and still alive
after y_l.  Distances and inner products integrate against a weight
phi(y - x) of the persistence, via a midpoint rule whose diagonal nodes
carry half cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, GridMismatch
from .persistence import PersistenceDiagram


@dataclass(frozen=True)
class Grid:
    """Uniform triangular lattice over [a0, a1]^2 above the diagonal."""

    a0: float
    a1: float
    m: int

    def __post_init__(self):
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "a1", float(self.a1))
        object.__setattr__(self, "m", int(self.m))
        if not (0 <= self.a0 < self.a1):
            raise ValueError(f"need 0 <= a0 < a1, got [{self.a0}, {self.a1}]")
        if self.m < 2:
            raise ValueError(f"resolution must be >= 2, got {self.m}")

    @property
    def spacing(self) -> float:
        return (self.a1 - self.a0) / (self.m - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(self.a0, self.a1, self.m)

    @property
    def size(self) -> int:
        return self.m * (self.m + 1) // 2

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Sample coordinates (x, y) with x <= y, in row-major triangle order."""
        i, j = np.triu_indices(self.m)
        ax = self.axis
        return ax[i], ax[j]

    def diagonal_mask(self) -> np.ndarray:
        i, j = np.triu_indices(self.m)
        return i == j

    def quadrature_weights(self, phi: "WeightFunction") -> np.ndarray:
        """Per-node weights: cell area times phi(y - x), half cells on the diagonal."""
        x, y = self.nodes()
        w = self.spacing ** 2 * phi(y - x)
        w[self.diagonal_mask()] *= 0.5
        return w


# default windows: unit-square patterns of ~100 points keep all activity
# below radius 0.5; bead-pack style data (bead-radius units) below 2.0
DEFAULT_GRID_2D = Grid(0.0, 0.5, 100)
DEFAULT_GRID_3D = Grid(0.0, 2.0, 100)


@dataclass(frozen=True)
class WeightFunction:
    """Weight phi of the persistence y - x: window indicator or exponential decay."""

    kind: str = "indicator"
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in ("indicator", "exp"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "exp" and not self.rate > 0:
            raise ValueError("exponential weight requires a positive rate")

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "indicator":
            return np.ones_like(t)
        return np.exp(-self.rate * t)

    def descriptor(self) -> str:
        return "indicator" if self.kind == "indicator" else f"exp:{self.rate!r}"

    @classmethod
    def parse(cls, text: str) -> "WeightFunction":
        if text == "indicator":
            return cls("indicator")
        if text.startswith("exp:"):
            return cls("exp", float(text[4:]))
        raise ValueError(f"cannot parse weight descriptor {text!r} (use 'indicator' or 'exp:<rate>')")


@dataclass
class RankFunction:
    """Values of one rank function on a grid, for one homology dimension."""

    grid: Grid
    dim: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} values for grid, got shape {vals.shape}")
        self.values = vals

    def compatible(self, other: "RankFunction") -> bool:
        return self.grid == other.grid and self.dim == other.dim


def _require_compatible(f: RankFunction, h: RankFunction) -> None:
    if not f.compatible(h):
        raise GridMismatch(
            f"rank functions disagree: grid {f.grid} dim {f.dim} vs grid {h.grid} dim {h.dim}"
        )


def rank_from_diagram(diagram: PersistenceDiagram, k: int, grid: Grid) -> RankFunction:
    """Discretize a diagram: node (x, y) counts dimension-k points with
    birth <= x and death > y (essential classes count everywhere their
    birth allows)."""
    pts = diagram.in_dimension(k)
    x, y = grid.nodes()
    if len(pts) == 0:
        return RankFunction(grid, k, np.zeros(grid.size))
    births, deaths = pts[:, 0], pts[:, 1]
    counts = np.sum((births[:, None] <= x[None, :]) & (deaths[:, None] > y[None, :]), axis=0)
    return RankFunction(grid, k, counts.astype(float))


def inner_product(u: RankFunction, v: RankFunction, phi: WeightFunction) -> float:
    """Weighted L2 pairing of two (centered) grid functions."""
    _require_compatible(u, v)
    w = u.grid.quadrature_weights(phi)
    return float(np.dot(w * u.values, v.values))


def distance(f: RankFunction, h: RankFunction, phi: WeightFunction) -> float:
    """d_phi(f, h): weighted L2 distance on the grid."""
    _require_compatible(f, h)
    w = f.grid.quadrature_weights(phi)
    diff = f.values - h.values
    return float(np.sqrt(np.dot(w * diff, diff)))


def mean(functions: list[RankFunction]) -> RankFunction:
    """Pointwise mean; inherits the rectangle monotonicity of its inputs."""
    if not functions:
        raise EmptyInput("mean of zero rank functions")
    first = functions[0]
    for f in functions[1:]:
        _require_compatible(first, f)
    stacked = np.stack([f.values for f in functions])
    return RankFunction(first.grid, first.dim, stacked.mean(axis=0))


def monotonicity_defect(f: RankFunction) -> float:
    """Smallest inclusion-exclusion increment over all grid rectangles.

    For a <= c <= b <= d the quantity f(c,b) - f(a,b) - f(c,d) + f(a,d)
    counts diagram points in a half-open rectangle, so it is >= 0 for
    exact rank functions and means thereof.  By additivity it suffices to
    check all unit cells whose four corners stay above the diagonal;
    returns the minimum cell increment (>= -1e-9 expected).
    """
    m = f.grid.m
    tri = np.full((m, m), np.nan)
    i, j = np.triu_indices(m)
    tri[i, j] = f.values
    cells = tri[1:, :-1] - tri[:-1, :-1] - tri[1:, 1:] + tri[:-1, 1:]
    valid = ~np.isnan(cells)
    return float(np.min(cells[valid])) if np.any(valid) else 0.0


# ---------------------------------------------------------------------------
# Rank-function file format
# ---------------------------------------------------------------------------

def format_rank(f: RankFunction, phi: WeightFunction, provenance: dict | None = None) -> str:
    """Serialize to CSV (x, y, value per node) with a self-describing header."""
    lines = [
        f"# grid {f.grid.a0!r} {f.grid.a1!r} {f.grid.m}",
        f"# dim {f.dim}",
        f"# phi {phi.descriptor()}",
    ]
    for key, val in (provenance or {}).items():
        lines.append(f"# {key} {val}")
    lines.append("x,y,value")
    x, y = f.grid.nodes()
    for xl, yl, vl in zip(x, y, f.values):
        lines.append(f"{float(xl)!r},{float(yl)!r},{float(vl)!r}")
    return "\n".join(lines) + "\n"


def read_rank(path) -> tuple[RankFunction, WeightFunction]:
    """Parse a rank-function CSV written by :func:`format_rank`."""
    grid = None
    dim = None
    phi = None
    values = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line == "x,y,value":
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                try:
                    if body.startswith("grid"):
                        a0, a1, m = body.split()[1:4]
                        grid = Grid(float(a0), float(a1), int(m))
                    elif body.startswith("dim"):
                        dim = int(body.split()[1])
                    elif body.startswith("phi"):
                        phi = WeightFunction.parse(body.split()[1])
                except (ValueError, IndexError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad header {line!r}") from exc
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected x,y,value, got {line!r}")
            try:
                values.append(float(parts[2]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value in {line!r}") from exc
    if grid is None or dim is None or phi is None:
        raise ValueError(f"{path}: missing grid/dim/phi header")
    if len(values) != grid.size:
        raise ValueError(f"{path}: expected {grid.size} nodes, found {len(values)}")
    return RankFunction(grid, dim, np.array(values)), phi


def format_rank_matrix(f: RankFunction) -> str:
    """Gnuplot-compatible matrix: m rows of m values, NaN below the diagonal."""
    m = f.grid.m
    tri = np.full((m, m), np.nan)
    i, j = np.triu_indices(m)
    tri[i, j] = f.values
    lines = []
    for row in tri:
        lines.append(" ".join("nan" if np.isnan(v) else repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"
