"""Persistent homology over Z2 by boundary-matrix column reduction.

Simplices are ordered by (filtration value, dimension, vertex tuple) so
faces always precede cofaces and ties are broken deterministically.
Columns are kept as Python integers used as bitsets; reduction runs
top dimension first so paired creator columns can be cleared without
ever being reduced.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import FilteredComplex


@dataclass
class PersistenceDiagram:
    """Multiset of (dimension, birth, death) triples.

    ``points`` is an (m, 3) float array; essential classes carry
    death = inf.  Zero-persistence pairs are dropped at construction
    (``dropped_pairs`` records how many, for bookkeeping checks).
    """

    points: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    dropped_pairs: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
        self.points = pts[order]

    def in_dimension(self, k: int) -> np.ndarray:
        """(birth, death) pairs of dimension-k classes."""
        return self.points[self.points[:, 0] == k][:, 1:]

    @property
    def essential_count_per_dim(self) -> dict[int, int]:
        ess = self.points[np.isinf(self.points[:, 2])]
        dims, counts = np.unique(ess[:, 0].astype(int), return_counts=True)
        return dict(zip(dims.tolist(), counts.tolist()))

    def __len__(self) -> int:
        return len(self.points)


def compute_persistence(complex: FilteredComplex) -> PersistenceDiagram:
    """Reduce the Z2 boundary matrix of a filtered complex.

    Returns the persistence diagram: each reduced pair (creator, killer)
    contributes a point in the creator's dimension, unpaired creators
    become essential classes with infinite death.  Raises ValueError if
    the complex violates closure or monotonicity.
    """
    complex.validate()
    simplices = complex.items_sorted()
    index = {verts: i for i, (verts, _) in enumerate(simplices)}
    n = len(simplices)

    columns = [0] * n
    dims = [0] * n
    for j, (verts, _) in enumerate(simplices):
        dims[j] = len(verts) - 1
        col = 0
        for facet in itertools.combinations(verts, len(verts) - 1):
            if facet:
                col |= 1 << index[facet]
        columns[j] = col

    max_dim = max(dims) if n else 0
    pivot: dict[int, int] = {}
    pairs: list[tuple[int, int]] = []
    cleared = bytearray(n)
    for dim in range(max_dim, 0, -1):
        for j in range(n):
            if dims[j] != dim or cleared[j]:
                continue
            col = columns[j]
            while col:
                low = col.bit_length() - 1
                other = pivot.get(low)
                if other is None:
                    break
                col ^= columns[other]
            columns[j] = col
            if col:
                low = col.bit_length() - 1
                pivot[low] = j
                pairs.append((low, j))
                cleared[low] = 1
                columns[low] = 0

    born = {i for i, _ in pairs}
    killed = {j for _, j in pairs}
    rows = []
    dropped = 0
    for i, j in pairs:
        birth, death = simplices[i][1], simplices[j][1]
        if death > birth:
            rows.append((dims[i], birth, death))
        else:
            dropped += 1
    essential = [k for k in range(n) if k not in born and k not in killed]
    for k in essential:
        rows.append((dims[k], simplices[k][1], math.inf))

    assert 2 * len(pairs) + len(essential) == n, "pairing does not partition the complex"
    return PersistenceDiagram(np.array(rows).reshape(-1, 3), dropped_pairs=dropped)


# ---------------------------------------------------------------------------
# Diagram file format
# ---------------------------------------------------------------------------

def format_diagram(diagram: PersistenceDiagram, provenance: dict | None = None) -> str:
    """Serialize to CSV with columns dim,birth,death (``inf`` for essential)."""
    lines = [f"# {k} {v}" for k, v in (provenance or {}).items()]
    lines.append("dim,birth,death")
    for dim, birth, death in diagram.points:
        token = "inf" if math.isinf(death) else repr(float(death))
        lines.append(f"{int(dim)},{float(birth)!r},{token}")
    return "\n".join(lines) + "\n"


def read_diagram(path) -> PersistenceDiagram:
    """Parse a diagram CSV written by :func:`format_diagram`."""
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line == "dim,birth,death":
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected dim,birth,death, got {line!r}")
            try:
                dim = int(parts[0])
                birth = float(parts[1])
                death = math.inf if parts[2] == "inf" else float(parts[2])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad diagram row {line!r}") from exc
            rows.append((dim, birth, death))
    return PersistenceDiagram(np.array(rows).reshape(-1, 3))
