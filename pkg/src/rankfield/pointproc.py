"""Seeded generators for the point-process models of the power study.

Every generator is a pure function of (parameters, seed): the same call
produces the bit-identical pattern.  Batch runs derive per-pattern seeds
as base + index.  Conditioned models redraw until the target count is
hit and raise ConditioningTimeout past an attempt cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningTimeout
from .geometry import PointPattern, unit_window

DEFAULT_MAX_ATTEMPTS = 10 ** 6
STRAUSS_BURN_IN_FACTOR = 200

# Baddeley-Silverman tile counts and probabilities (they sum to 1 exactly:
# 9/90 + 80/90 + 1/90)
_BS_COUNTS = np.array([0, 1, 10])
_BS_PROBS = np.array([1.0 / 10.0, 8.0 / 9.0, 1.0 / 90.0])
_BS_TILES_PER_AXIS = 10


def derive_seed(base: int, index: int) -> int:
    """Per-pattern seed for batch generation: base + index (mod 2^64)."""
    return (int(base) + int(index)) % (2 ** 64)


def close_pair_count(points: np.ndarray, radius: float) -> int:
    """Number of unordered point pairs strictly closer than ``radius``."""
    diff = points[:, None, :] - points[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    close = d2 < radius * radius
    return int((np.count_nonzero(close) - len(points)) // 2)


def gen_binomial(n: int, window: np.ndarray | None = None, seed: int = 0) -> PointPattern:
    """n i.i.d. uniform points in the window (homogeneous binomial process)."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    win = unit_window(2) if window is None else np.asarray(window, dtype=float)
    rng = np.random.default_rng(seed)
    pts = win[:, 0] + rng.random((n, win.shape[0])) * (win[:, 1] - win[:, 0])
    return PointPattern(pts, win)


def gen_poisson(rho: float, window: np.ndarray | None = None, seed: int = 0) -> PointPattern:
    """Homogeneous Poisson process with intensity ``rho``; may be empty."""
    if not rho > 0:
        raise ValueError(f"need rho > 0, got {rho}")
    win = unit_window(2) if window is None else np.asarray(window, dtype=float)
    area = float(np.prod(win[:, 1] - win[:, 0]))
    rng = np.random.default_rng(seed)
    count = int(rng.poisson(rho * area))
    pts = win[:, 0] + rng.random((count, win.shape[0])) * (win[:, 1] - win[:, 0])
    return PointPattern(pts, win)


# ---------------------------------------------------------------------------
# Strauss pairwise-interaction process (fixed n, Metropolis relocation chain)
# ---------------------------------------------------------------------------

def _strauss_chain(pos, prop_idx, prop_xy, accept_u, r2, gamma_pow):
    # the inner loop is also compiled with numba when available; keep the
    # arithmetic identical in both paths so results match bit for bit
    n = pos.shape[0]
    for t in range(prop_idx.shape[0]):
        i = prop_idx[t]
        nx, ny = prop_xy[t, 0], prop_xy[t, 1]
        ox, oy = pos[i, 0], pos[i, 1]
        delta = 0
        for j in range(n):
            if j == i:
                continue
            dx = pos[j, 0] - nx
            dy = pos[j, 1] - ny
            if dx * dx + dy * dy < r2:
                delta += 1
            dx = pos[j, 0] - ox
            dy = pos[j, 1] - oy
            if dx * dx + dy * dy < r2:
                delta -= 1
        if delta <= 0 or accept_u[t] < gamma_pow[delta]:
            pos[i, 0] = nx
            pos[i, 1] = ny
    return pos


try:  # optional speedup; the pure-Python chain is the reference semantics
    from numba import njit as _njit

    _strauss_chain_fast = _njit(cache=True)(_strauss_chain)
except ImportError:  # pragma: no cover
    _strauss_chain_fast = _strauss_chain


def gen_strauss(
    interaction_radius: float,
    gamma: float,
    n: int,
    seed: int = 0,
    burn_in: int | None = None,
) -> PointPattern:
    """Fixed-n Strauss sample on the unit square.

    Single-point-relocation Metropolis chain targeting a density
    proportional to gamma^(number of pairs closer than the interaction
    radius); gamma = 1 reduces to the binomial process.  Burn-in defaults
    to 200 proposals per point.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"need gamma in (0, 1], got {gamma}")
    if not interaction_radius > 0:
        raise ValueError(f"need a positive interaction radius, got {interaction_radius}")
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    proposals = STRAUSS_BURN_IN_FACTOR * n if burn_in is None else int(burn_in)
    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2))
    if n > 1 and proposals > 0:
        prop_idx = rng.integers(0, n, size=proposals)
        prop_xy = rng.random((proposals, 2))
        accept_u = rng.random(proposals)
        gamma_pow = np.power(gamma, np.arange(n + 1, dtype=float))
        pos = _strauss_chain_fast(
            pos, prop_idx, prop_xy, accept_u, interaction_radius ** 2, gamma_pow
        )
    return PointPattern(pos, unit_window(2))


# ---------------------------------------------------------------------------
# Matern cluster process (conditioned on total count)
# ---------------------------------------------------------------------------

def _matern_attempt(rng, kappa, offspring_mean, cluster_radius):
    """One unconditioned draw: (parents, offspring clipped to the unit square).

    Parents live on the unit square dilated by the cluster radius, so
    clusters centered just outside still contribute.
    """
    lo, hi = -cluster_radius, 1.0 + cluster_radius
    n_parents = int(rng.poisson(kappa * (hi - lo) ** 2))
    parents = lo + rng.random((n_parents, 2)) * (hi - lo)
    counts = rng.poisson(offspring_mean, size=n_parents)
    total = int(counts.sum())
    radii = cluster_radius * np.sqrt(rng.random(total))
    angles = 2.0 * math.pi * rng.random(total)
    offsets = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
    pts = np.repeat(parents, counts, axis=0) + offsets
    inside = np.all((pts >= 0.0) & (pts <= 1.0), axis=1)
    return parents, pts[inside]


def gen_matern(
    kappa: float,
    offspring_mean: float,
    cluster_radius: float,
    n: int,
    seed: int = 0,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> PointPattern:
    """Matern cluster sample on the unit square conditioned on exactly n points.

    Poisson parents, Poisson cluster sizes, offspring uniform in a disc
    around each parent; the whole draw is rejected until the clipped
    total equals n.
    """
    if min(kappa, offspring_mean, cluster_radius) <= 0:
        raise ValueError("kappa, offspring_mean and cluster_radius must be positive")
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        _, pts = _matern_attempt(rng, kappa, offspring_mean, cluster_radius)
        if len(pts) == n:
            return PointPattern(pts, unit_window(2))
    raise ConditioningTimeout(
        f"no Matern draw hit {n} points within {max_attempts} attempts"
    )


# ---------------------------------------------------------------------------
# Baddeley-Silverman tile process (conditioned on total count)
# ---------------------------------------------------------------------------

def _baddeley_silverman_attempt(rng):
    """One unconditioned draw: (per-tile counts, points) on the 10x10 tiling."""
    k = _BS_TILES_PER_AXIS
    counts = rng.choice(_BS_COUNTS, size=k * k, p=_BS_PROBS)
    total = int(counts.sum())
    xy = rng.random((total, 2))
    tiles = np.repeat(np.arange(k * k), counts)
    origins = np.stack([tiles % k, tiles // k], axis=1) / k
    return counts, origins + xy / k


def gen_baddeley_silverman(
    n: int, seed: int = 0, max_attempts: int = DEFAULT_MAX_ATTEMPTS
) -> PointPattern:
    """Baddeley-Silverman sample conditioned on exactly n points.

    Each of the 100 tiles holds 0, 1 or 10 uniform points with
    probabilities 1/10, 8/9, 1/90; whole draws are rejected until the
    total equals n.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        _, pts = _baddeley_silverman_attempt(rng)
        if len(pts) == n:
            return PointPattern(pts, unit_window(2))
    raise ConditioningTimeout(
        f"no Baddeley-Silverman draw hit {n} points within {max_attempts} attempts"
    )


# ---------------------------------------------------------------------------
# Declarative specs (CLI configs, power study)
# ---------------------------------------------------------------------------

KINDS = ("binomial", "poisson", "strauss", "matern", "baddeley-silverman")


@dataclass(frozen=True)
class ProcessSpec:
    """Declarative description of one point-process model."""

    kind: str
    n: int | None = None
    rho: float | None = None
    interaction_radius: float | None = None
    gamma: float | None = None
    kappa: float | None = None
    offspring_mean: float | None = None
    cluster_radius: float | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown process kind {self.kind!r}, expected one of {KINDS}")
        need = {
            "binomial": ("n",),
            "poisson": ("rho",),
            "strauss": ("n", "interaction_radius", "gamma"),
            "matern": ("n", "kappa", "offspring_mean", "cluster_radius"),
            "baddeley-silverman": ("n",),
        }[self.kind]
        for field_name in need:
            if getattr(self, field_name) is None:
                raise ValueError(f"{self.kind} spec requires {field_name!r}")
        if self.gamma is not None and not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        for field_name in ("rho", "interaction_radius", "kappa", "offspring_mean",
                           "cluster_radius"):
            value = getattr(self, field_name)
            if value is not None and not value > 0:
                raise ValueError(f"{field_name} must be positive, got {value}")
        if self.n is not None and self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")

    @property
    def label(self) -> str:
        return self.name or self.kind

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for key in ("n", "rho", "interaction_radius", "gamma", "kappa",
                    "offspring_mean", "cluster_radius", "name"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ProcessSpec":
        known = {"kind", "n", "rho", "interaction_radius", "gamma", "kappa",
                 "offspring_mean", "cluster_radius", "name"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown process spec keys: {sorted(unknown)}")
        return cls(**data)


def sample(spec: ProcessSpec, seed: int, max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> PointPattern:
    """Draw one pattern from a spec; deterministic in (spec, seed)."""
    if spec.kind == "binomial":
        return gen_binomial(spec.n, seed=seed)
    if spec.kind == "poisson":
        if spec.n is None:
            return gen_poisson(spec.rho, seed=seed)
        rng = np.random.default_rng(seed)
        for _ in range(max_attempts):
            count = int(rng.poisson(spec.rho))
            if count == spec.n:
                pts = rng.random((count, 2))
                return PointPattern(pts, unit_window(2))
            rng.random((count, 2))  # burn the positions to keep the stream aligned
        raise ConditioningTimeout(f"no Poisson draw hit {spec.n} points within {max_attempts} attempts")
    if spec.kind == "strauss":
        return gen_strauss(spec.interaction_radius, spec.gamma, spec.n, seed=seed)
    if spec.kind == "matern":
        return gen_matern(spec.kappa, spec.offspring_mean, spec.cluster_radius,
                          spec.n, seed=seed, max_attempts=max_attempts)
    return gen_baddeley_silverman(spec.n, seed=seed, max_attempts=max_attempts)
