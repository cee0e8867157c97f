"""Point patterns, Delaunay triangulations, and ball-based filtrations.

A pattern is filtered by growing balls around its points.  On the Delaunay
complex every simplex receives the radius of the minimum enclosing ball
(MEB) of its vertices, which reproduces the persistent homology of the
full ball filtration at a fraction of the size.  A brute-force variant
(`cech_oracle`) builds the complete simplex on small inputs and serves as
an independent reference.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay as _SciPyDelaunay
from scipy.spatial import QhullError

from .errors import DegenerateInput, DuplicatePoints, TooLarge

Simplex = tuple[int, ...]

CECH_MAX_POINTS = 10

_ENCLOSE_RTOL = 1e-12


def unit_window(d: int) -> np.ndarray:
    """Axis-aligned unit box [0,1]^d as a (d, 2) min/max array."""
    return np.array([[0.0, 1.0]] * d)


@dataclass(frozen=True)
class PointPattern:
    """A finite set of points in an axis-aligned rectangular window.

    ``points`` is an (n, d) float array with d in {2, 3}; ``window`` is a
    (d, 2) array of per-axis [min, max].  Every point must lie inside the
    closed window and all coordinates must be finite.  An empty pattern is
    representable (sparse process draws) but rejected by triangulation.
    """

    points: np.ndarray
    window: np.ndarray

    def __init__(self, points, window=None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3):
            raise ValueError(f"points must be an (n, d) array with d in {{2, 3}}, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        if window is None:
            if len(pts) == 0:
                raise ValueError("cannot infer a window from an empty pattern")
            window = np.stack([pts.min(axis=0), pts.max(axis=0)], axis=1)
        win = np.asarray(window, dtype=float)
        if win.shape != (pts.shape[1], 2):
            raise ValueError(f"window must have shape ({pts.shape[1]}, 2), got {win.shape}")
        if np.any(win[:, 0] > win[:, 1]):
            raise ValueError("window has min > max on some axis")
        if len(pts) and (np.any(pts < win[:, 0]) or np.any(pts > win[:, 1])):
            raise ValueError("some points lie outside the window")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "window", win)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class FilteredComplex:
    """Simplices with filtration radii, closed under taking faces.

    ``simplices`` maps each simplex (sorted vertex-index tuple) to the
    radius at which it enters the complex.  Values are finite, nonnegative
    and monotone: a face never appears later than any of its cofaces.
    """

    simplices: dict[Simplex, float] = field(default_factory=dict)
    ambient_dim: int = 2

    def validate(self) -> None:
        """Raise ValueError if closure or monotonicity is violated."""
        for verts, value in self.simplices.items():
            if not (np.isfinite(value) and value >= 0.0):
                raise ValueError(f"simplex {verts} has invalid value {value}")
            if list(verts) != sorted(set(verts)):
                raise ValueError(f"simplex {verts} is not a strictly increasing index tuple")
            if len(verts) == 1:
                continue
            for facet in itertools.combinations(verts, len(verts) - 1):
                if facet not in self.simplices:
                    raise ValueError(f"face {facet} of {verts} is missing")
                if self.simplices[facet] > value:
                    raise ValueError(
                        f"filtration not monotone: value({facet}) > value({verts})"
                    )

    def items_sorted(self) -> list[tuple[Simplex, float]]:
        """Simplices in filtration order: (value, dimension, vertex tuple)."""
        return sorted(self.simplices.items(), key=lambda sv: (sv[1], len(sv[0]), sv[0]))


# ---------------------------------------------------------------------------
# Minimum enclosing balls
# ---------------------------------------------------------------------------

def _circumsphere(points: np.ndarray) -> tuple[np.ndarray, float] | None:
    """Center and radius of the sphere through all points, center in their
    affine hull.  None if the points are affinely dependent."""
    p0 = points[0]
    if len(points) == 1:
        return p0, 0.0
    e = points[1:] - p0
    g = e @ e.T
    b = 0.5 * np.einsum("ij,ij->i", e, e)
    try:
        alpha = np.linalg.solve(g, b)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(alpha)):
        return None
    center = p0 + alpha @ e
    return center, float(np.linalg.norm(center - p0))


def minimum_enclosing_ball(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact MEB of a small point set by support-subset enumeration.

    Deterministic: subsets are scanned in a fixed order and the smallest
    valid candidate wins.  Intended for simplex vertex sets and the
    brute-force oracle (n <= ~10), where the support has at most d+1
    points.
    """
    pts = np.asarray(points, dtype=float)
    n, d = pts.shape
    best: tuple[np.ndarray, float] | None = None
    for size in range(1, min(n, d + 1) + 1):
        for subset in itertools.combinations(range(n), size):
            cs = _circumsphere(pts[list(subset)])
            if cs is None:
                continue
            center, r = cs
            if best is not None and r >= best[1]:
                continue
            dist2 = np.einsum("ij,ij->i", pts - center, pts - center)
            if np.all(dist2 <= r * r + _ENCLOSE_RTOL * (1.0 + r * r)):
                best = (center, r)
    assert best is not None, "MEB enumeration found no enclosing candidate"
    return best


def _edge_meb_radii(pts: np.ndarray, edges: np.ndarray) -> np.ndarray:
    diff = pts[edges[:, 1]] - pts[edges[:, 0]]
    return 0.5 * np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _triangle_meb(pts: np.ndarray, tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized MEB (centers, radii) of triangles in 2D or 3D.

    The MEB is the diametral ball of the longest edge when the opposite
    angle is non-acute, otherwise the circumcircle.
    """
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    # squared edge lengths, indexed by the opposite vertex
    sq = np.stack(
        [
            np.einsum("ij,ij->i", c - b, c - b),
            np.einsum("ij,ij->i", c - a, c - a),
            np.einsum("ij,ij->i", b - a, b - a),
        ],
        axis=1,
    )
    longest = np.argmax(sq, axis=1)
    maxsq = np.take_along_axis(sq, longest[:, None], axis=1)[:, 0]
    non_acute = 2.0 * maxsq >= sq.sum(axis=1)

    # circumcenter in the triangle plane: solve 2 G alpha = (|e1|^2, |e2|^2)
    e1, e2 = b - a, c - a
    g11 = np.einsum("ij,ij->i", e1, e1)
    g22 = np.einsum("ij,ij->i", e2, e2)
    g12 = np.einsum("ij,ij->i", e1, e2)
    det = 2.0 * (g11 * g22 - g12 * g12)
    with np.errstate(divide="ignore", invalid="ignore"):
        a1 = (g22 * g11 - g12 * g22) / det
        a2 = (g11 * g22 - g12 * g11) / det
    centers = a + a1[:, None] * e1 + a2[:, None] * e2
    radii = np.sqrt(np.einsum("ij,ij->i", centers - a, centers - a))

    # diametral ball of the longest edge
    verts = np.stack([a, b, c], axis=1)
    other = np.array([[1, 2], [0, 2], [0, 1]])[longest]
    p = np.take_along_axis(verts, other[:, :1, None], axis=1)[:, 0]
    q = np.take_along_axis(verts, other[:, 1:, None], axis=1)[:, 0]
    mid = 0.5 * (p + q)
    half = 0.5 * np.sqrt(maxsq)

    centers = np.where(non_acute[:, None], mid, centers)
    radii = np.where(non_acute, half, radii)
    return centers, radii


def _tet_meb_radii(pts: np.ndarray, tets: np.ndarray) -> np.ndarray:
    """Vectorized MEB radii of tetrahedra.

    Circumradius when the circumcenter lies inside the tetrahedron;
    otherwise the smallest facet ball that encloses the opposite vertex
    (the MEB support is then contained in a facet).
    """
    v0 = pts[tets[:, 0]]
    e = pts[tets[:, 1:]] - v0[:, None, :]  # (m, 3, d)
    g = np.einsum("mik,mjk->mij", e, e)
    rhs = 0.5 * np.einsum("mik,mik->mi", e, e)
    alpha = np.linalg.solve(g, rhs[..., None])[..., 0]
    centers = v0 + np.einsum("mi,mik->mk", alpha, e)
    circum = np.sqrt(np.einsum("mk,mk->m", centers - v0, centers - v0))
    inside = np.all(alpha >= -1e-12, axis=1) & (alpha.sum(axis=1) <= 1.0 + 1e-12)

    radii = np.where(inside, circum, np.inf)
    outside = np.nonzero(~inside)[0]
    if len(outside):
        sub = tets[outside]
        best = np.full(len(outside), np.inf)
        for k in range(4):
            face_cols = [c for c in range(4) if c != k]
            faces = sub[:, face_cols]
            fc, fr = _triangle_meb(pts, faces)
            opp = pts[sub[:, k]]
            d2 = np.einsum("ij,ij->i", opp - fc, opp - fc)
            ok = d2 <= fr * fr + _ENCLOSE_RTOL * (1.0 + fr * fr)
            best = np.where(ok & (fr < best), fr, best)
        radii[outside] = best
    return radii


# ---------------------------------------------------------------------------
# Triangulation and filtration
# ---------------------------------------------------------------------------

def _check_duplicates(pts: np.ndarray) -> None:
    if len(np.unique(pts, axis=0)) != len(pts):
        raise DuplicatePoints("pattern contains exactly coinciding points")


def delaunay(pattern: PointPattern) -> list[Simplex]:
    """Delaunay triangulation as a sorted list of top-dimensional simplices.

    Degenerate (cocircular/cospherical) configurations are triangulated
    deterministically for a fixed input, so repeated runs agree.  Raises
    DegenerateInput when the points are affinely dependent and
    DuplicatePoints when two points coincide exactly.
    """
    pts = pattern.points
    d = pattern.dim
    if len(pts) < d + 1:
        raise DegenerateInput(f"need at least {d + 1} points in {d}D, got {len(pts)}")
    _check_duplicates(pts)
    try:
        tri = _SciPyDelaunay(pts)
    except QhullError as exc:
        raise DegenerateInput(f"points are affinely dependent: {exc}") from exc
    if tri.coplanar.size:
        raise DegenerateInput("triangulation dropped points (near-degenerate input)")
    simplices = np.sort(tri.simplices, axis=1)
    return sorted(tuple(int(i) for i in row) for row in simplices)


def alpha_filtration(pattern: PointPattern) -> FilteredComplex:
    """Filtered Delaunay complex carrying ball-filtration radii.

    Every simplex of the Delaunay triangulation (and all its faces) is
    valued at the MEB radius of its vertices, the radius at which the
    grown balls first cover the simplex's Cech witness point.  Vertices
    enter at 0.  The result has the same persistence diagram as the full
    Cech filtration of the pattern.
    """
    top = delaunay(pattern)
    pts = pattern.points
    d = pattern.dim

    by_dim: list[set[Simplex]] = [set() for _ in range(d + 1)]
    by_dim[d].update(top)
    for k in range(d, 0, -1):
        for verts in by_dim[k]:
            for facet in itertools.combinations(verts, k):
                by_dim[k - 1].add(facet)

    values: dict[Simplex, float] = {}
    for i in range(len(pts)):
        values[(i,)] = 0.0

    edges = np.array(sorted(by_dim[1]), dtype=int)
    for verts, r in zip(map(tuple, edges.tolist()), _edge_meb_radii(pts, edges)):
        values[verts] = float(r)

    tris = np.array(sorted(by_dim[2]), dtype=int)
    _, tri_radii = _triangle_meb(pts, tris)
    for verts, r in zip(map(tuple, tris.tolist()), tri_radii):
        values[verts] = float(r)

    if d == 3:
        tets = np.array(sorted(by_dim[3]), dtype=int)
        for verts, r in zip(map(tuple, tets.tolist()), _tet_meb_radii(pts, tets)):
            values[verts] = float(r)

    # monotone fix-up: float round-off can put a face epsilon past a coface
    for k in range(1, d + 1):
        for verts in sorted(by_dim[k]):
            floor = max(values[f] for f in itertools.combinations(verts, k))
            if values[verts] < floor:
                values[verts] = floor

    ordered = dict(sorted(values.items(), key=lambda sv: (len(sv[0]), sv[0])))
    return FilteredComplex(simplices=ordered, ambient_dim=d)


def cech_oracle(pattern: PointPattern, max_dim: int, max_points: int = CECH_MAX_POINTS) -> FilteredComplex:
    """Brute-force ball filtration: the complete simplex up to ``max_dim``.

    Each simplex is valued at the MEB radius of its vertices, i.e. the
    smallest r at which the r-balls around them intersect.  Only feasible
    for small patterns; raises TooLarge above ``max_points``.
    """
    n = len(pattern)
    if n > max_points:
        raise TooLarge(f"cech_oracle is limited to {max_points} points, got {n}")
    if not 0 <= max_dim <= n - 1:
        raise ValueError(f"max_dim must be in [0, {n - 1}], got {max_dim}")
    _check_duplicates(pattern.points)
    values: dict[Simplex, float] = {}
    for size in range(1, max_dim + 2):
        for verts in itertools.combinations(range(n), size):
            _, r = minimum_enclosing_ball(pattern.points[list(verts)])
            values[verts] = r
    # MEB radii are monotone in the vertex set up to round-off
    for verts in values:
        if len(verts) > 1:
            floor = max(values[f] for f in itertools.combinations(verts, len(verts) - 1))
            if values[verts] < floor:
                values[verts] = floor
    return FilteredComplex(simplices=values, ambient_dim=pattern.dim)


# ---------------------------------------------------------------------------
# Point file format
# ---------------------------------------------------------------------------

def read_points(path) -> PointPattern:
    """Read a pattern CSV: one point per line, 2 or 3 float columns.

    An optional header comment ``# window xmin xmax ymin ymax [zmin zmax]``
    fixes the window; otherwise the bounding box is used.  Other comment
    lines are ignored.
    """
    window = None
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("window"):
                    try:
                        vals = [float(t) for t in body.split()[1:]]
                        window = np.array(vals).reshape(-1, 2)
                    except ValueError as exc:
                        raise ValueError(f"{path}:{lineno}: bad window header: {line!r}") from exc
                continue
            parts = line.split(",")
            if len(parts) not in (2, 3):
                raise ValueError(f"{path}:{lineno}: expected 2 or 3 columns, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric coordinate in {line!r}") from exc
    if not rows:
        raise ValueError(f"{path}: no points found")
    pts = np.array(rows)
    if window is not None and window.shape[0] != pts.shape[1]:
        raise ValueError(f"{path}: window dimension {window.shape[0]} != point dimension {pts.shape[1]}")
    return PointPattern(pts, window)


def format_points(pattern: PointPattern, provenance: dict | None = None) -> str:
    """Serialize a pattern to the point CSV format (window header included)."""
    lines = ["# window " + " ".join(repr(float(v)) for v in pattern.window.ravel())]
    for key, val in (provenance or {}).items():
        lines.append(f"# {key} {val}")
    for row in pattern.points:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"
