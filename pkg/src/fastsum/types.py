"""Shared domain types: sources, queries, kernel selection, and evaluator config.

Everything here is immutable after construction and safe to share across
threads. Source data is stored as contiguous numpy arrays (positions,
weights, channel masses) so the numeric cores can consume it directly;
:class:`SourcePoint` is a convenience view for single points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

__all__ = [
    "SourcePoint",
    "SourceSet",
    "QuerySet",
    "KernelSpec",
    "EstimatorConfig",
    "normalize_to_unit_cube",
    "KERNEL_KINDS",
    "RR_MODES",
    "METHODS",
]

KERNEL_KINDS = ("coulomb", "winding_dipole", "smooth_exp")
RR_MODES = ("paper_ratio", "fixed_half", "disabled")
METHODS = ("brute_force", "barnes_hut", "stochastic", "telescoping_exhaustive")

# channel count per kernel kind
_KERNEL_CHANNELS = {"coulomb": 1, "winding_dipole": 3, "smooth_exp": 1}


def _as_vec3(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {np.shape(x)}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    return v


@dataclass(frozen=True)
class SourcePoint:
    """One source: position, positive aggregation weight, c-channel mass."""

    position: np.ndarray
    weight: float
    mass: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position, "position"))
        mass = np.atleast_1d(np.asarray(self.mass, dtype=np.float64))
        if mass.ndim != 1 or not np.all(np.isfinite(mass)):
            raise ValueError("mass must be a finite 1-d vector")
        object.__setattr__(self, "mass", mass)
        w = float(self.weight)
        if not (np.isfinite(w) and w > 0):
            raise ValueError("weight must be positive and finite")
        object.__setattr__(self, "weight", w)


def default_weights(masses: np.ndarray) -> np.ndarray:
    """Aggregation weight rule: Euclidean norm of the mass vector, or 1 if zero.

    Weights drive centers of mass and must stay positive even when channel
    masses are signed (e.g. oriented surface normals that cancel).
    """
    w = np.linalg.norm(np.atleast_2d(masses), axis=1)
    w[w <= 0] = 1.0
    return w


class SourceSet:
    """Immutable array-of-structs view of M source points.

    Attributes
    ----------
    positions : (M, 3) float64
    weights   : (M,) float64, all positive
    masses    : (M, c) float64
    """

    __slots__ = ("positions", "weights", "masses")

    def __init__(self, positions, masses, weights=None):
        positions = np.ascontiguousarray(positions, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] != 3 or positions.shape[0] == 0:
            raise ValueError("positions must be a non-empty (M, 3) array")
        masses = np.asarray(masses, dtype=np.float64)
        if masses.ndim == 1:
            masses = masses[:, None]
        if masses.shape[0] != positions.shape[0]:
            raise ValueError("positions and masses must have matching length")
        masses = np.ascontiguousarray(masses)
        if weights is None:
            weights = default_weights(masses)
        weights = np.ascontiguousarray(weights, dtype=np.float64).reshape(-1)
        if weights.shape[0] != positions.shape[0]:
            raise ValueError("weights must have one entry per point")
        if not np.all(np.isfinite(positions)):
            raise ValueError("positions must be finite")
        if not np.all(np.isfinite(masses)):
            raise ValueError("masses must be finite")
        if not (np.all(np.isfinite(weights)) and np.all(weights > 0)):
            raise ValueError("weights must be positive and finite")
        for a in (positions, masses, weights):
            a.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "weights", weights)

    def __setattr__(self, name, value):
        raise AttributeError("SourceSet is immutable")

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def channel_count(self) -> int:
        return self.masses.shape[1]

    def point(self, i: int) -> SourcePoint:
        return SourcePoint(self.positions[i], float(self.weights[i]), self.masses[i])

    @classmethod
    def from_points(cls, points: list[SourcePoint]) -> "SourceSet":
        if not points:
            raise ValueError("empty point set")
        c = points[0].mass.shape[0]
        if any(p.mass.shape[0] != c for p in points):
            raise ValueError("all points must share one channel count")
        return cls(
            np.array([p.position for p in points]),
            np.array([p.mass for p in points]),
            np.array([p.weight for p in points]),
        )


class QuerySet:
    """Immutable ordered list of query positions, shape (N, 3)."""

    __slots__ = ("positions",)

    def __init__(self, positions):
        positions = np.ascontiguousarray(positions, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] != 3 or positions.shape[0] == 0:
            raise ValueError("queries must be a non-empty (N, 3) array")
        if not np.all(np.isfinite(positions)):
            raise ValueError("query positions must be finite")
        positions.setflags(write=False)
        object.__setattr__(self, "positions", positions)

    def __setattr__(self, name, value):
        raise AttributeError("QuerySet is immutable")

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class KernelSpec:
    """Kernel selection.

    kind:
        "coulomb"        g(p, q) = -1/r                (1 channel)
        "winding_dipole" g(p, q) = (p - q) / (4 pi r^3) (3 channels)
        "smooth_exp"     g(p, q) = exp(-alpha r)       (1 channel)
    where r = max(||p - q||, distance_floor).
    """

    kind: str
    alpha: float = 200.0
    distance_floor: float = 1e-12

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not (self.alpha > 0):
            raise ValueError("alpha must be positive")
        if not (self.distance_floor > 0):
            raise ValueError("distance_floor must be positive")

    @property
    def channel_count(self) -> int:
        return _KERNEL_CHANNELS[self.kind]


@dataclass(frozen=True)
class EstimatorConfig:
    """Method selection plus the knobs each method reads.

    branching_per_dim=None resolves to the per-method default: 2 for
    Barnes-Hut, 4 for the stochastic estimator (wider trees balance path
    depth against the cost of scanning children).
    """

    method: str
    beta: float = 2.0
    samples_per_subdomain: int = 1
    rr_mode: str = "paper_ratio"
    seed: int = 0
    branching_per_dim: int | None = None
    max_depth: int = 32
    precision: str = "f64"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.rr_mode not in RR_MODES:
            raise ValueError(f"unknown rr_mode {self.rr_mode!r}")
        if self.method == "barnes_hut" and not (self.beta > 0):
            raise ValueError("beta must be positive for barnes_hut")
        if self.method == "stochastic" and self.samples_per_subdomain < 1:
            raise ValueError("samples_per_subdomain must be >= 1")
        if self.branching_per_dim is not None and self.branching_per_dim < 2:
            raise ValueError("branching_per_dim must be >= 2")
        if self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        if self.precision not in ("f32", "f64"):
            raise ValueError("precision must be 'f32' or 'f64'")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def resolved_branching(self) -> int:
        if self.branching_per_dim is not None:
            return self.branching_per_dim
        return 2 if self.method == "barnes_hut" else 4


def normalize_to_unit_cube(points) -> tuple[float, np.ndarray, np.ndarray]:
    """Isotropically rescale + translate points into [-1, 1]^3.

    Returns (scale, offset, normalized) with normalized = scale * p + offset.
    The original points are recovered as (n - offset) / scale. A fully
    coincident set gets scale 1 and maps to the origin.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        raise ValueError("empty point set")
    pts = pts.reshape(-1, 3)
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    half_extent = float(np.max(hi - lo)) / 2.0
    center = (lo + hi) / 2.0
    scale = 1.0 if half_extent == 0.0 else 1.0 / half_extent
    offset = -center * scale
    out = pts * scale + offset
    # guard against roundoff pushing the extreme axis past +/-1
    np.clip(out, -1.0, 1.0, out=out)
    return scale, offset, out
