"""File ingestion, surface sampling, query generation, and result writers.

Formats:
  points file  text lines "x y z m" (1 channel) or "x y z mx my mz"
               (3 channels); '#' starts a comment; blank lines ignored.
  OBJ          only 'v' and 'f' records; faces with more than 3 vertices
               are fan-triangulated; everything else is skipped.
  outputs      CSV (index,x,y,z,value,flag); slice planes additionally get
               a PFM float map (little-endian, bottom-up), an 8-bit PGM
               preview, and a JSON sidecar with the value range and the
               sentinel count.

All writers are deterministic: identical inputs give byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass
import json

import numpy as np

from .estimators import FieldResult
from .meshes import triangle_areas_normals
from .types import QuerySet, SourceSet, default_weights

__all__ = [
    "PointsFileError",
    "parse_points_file",
    "write_points_file",
    "load_obj",
    "sample_mesh_surface",
    "GridSpec",
    "make_queries",
    "write_outputs",
]


class PointsFileError(ValueError):
    """Malformed points file; message names the offending line."""


def parse_points_file(path) -> SourceSet:
    positions = []
    masses = []
    ncols = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            cols = body.split()
            if ncols is None:
                if len(cols) not in (4, 6):
                    raise PointsFileError(
                        f"{path}:{lineno}: expected 4 or 6 columns, got {len(cols)}")
                ncols = len(cols)
            elif len(cols) != ncols:
                raise PointsFileError(
                    f"{path}:{lineno}: inconsistent column count "
                    f"({len(cols)} vs {ncols})")
            try:
                vals = [float(c) for c in cols]
            except ValueError:
                raise PointsFileError(f"{path}:{lineno}: non-numeric value")
            if not all(np.isfinite(vals)):
                raise PointsFileError(f"{path}:{lineno}: non-finite value")
            positions.append(vals[:3])
            masses.append(vals[3:])
    if not positions:
        raise PointsFileError(f"{path}: no data lines")
    return SourceSet(np.array(positions), np.array(masses))


def write_points_file(path, sources: SourceSet) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(len(sources)):
            p = sources.positions[i]
            m = sources.masses[i]
            fh.write(" ".join(f"{v:.17g}" for v in (*p, *m)) + "\n")


def load_obj(path):
    """Wavefront OBJ subset: positions and (fan-triangulated) faces."""
    verts = []
    faces = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise PointsFileError(f"{path}:{lineno}: bad vertex record")
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    head = tok.split("/", 1)[0]
                    i = int(head)
                    # OBJ indices are 1-based; negative counts from the end
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                if len(idx) < 3:
                    raise PointsFileError(f"{path}:{lineno}: face with <3 vertices")
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
    if not verts or not faces:
        raise PointsFileError(f"{path}: no usable v/f records")
    return np.array(verts, dtype=np.float64), np.array(faces, dtype=np.int64)


def sample_mesh_surface(vertices, faces, num_samples: int, seed: int,
                        kernel_kind: str = "coulomb",
                        point_mass: float | None = None) -> SourceSet:
    """Area-uniform surface sampling.

    winding_dipole: mass = (total_area / M) * unit face normal and weight =
    total_area / M, so the dipole sum discretizes the solid-angle integral.
    Scalar kernels: mass = 1/M per point (unit total charge) unless
    point_mass overrides the per-point value.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    areas, normals = triangle_areas_normals(vertices, faces)
    total_area = float(areas.sum())
    if total_area <= 0:
        raise ValueError("mesh has zero surface area")
    rng = np.random.default_rng(seed)
    tri = rng.choice(len(areas), size=num_samples, p=areas / total_area)
    u = rng.random(num_samples)
    v = rng.random(num_samples)
    flip = u + v > 1
    u[flip] = 1 - u[flip]
    v[flip] = 1 - v[flip]
    f = np.asarray(faces, dtype=np.int64)[tri]
    va = np.asarray(vertices, dtype=np.float64)
    pts = (va[f[:, 0]] * (1 - u - v)[:, None]
           + va[f[:, 1]] * u[:, None]
           + va[f[:, 2]] * v[:, None])
    w_each = total_area / num_samples
    if kernel_kind == "winding_dipole":
        masses = normals[tri] * w_each
        weights = np.full(num_samples, w_each)
    else:
        m = (1.0 / num_samples) if point_mass is None else float(point_mass)
        masses = np.full(num_samples, m)
        weights = np.full(num_samples, w_each)
    return SourceSet(pts, masses, weights)


@dataclass(frozen=True)
class GridSpec:
    """Query-set recipe: full 3D lattice, embedded 2D slice, or random cloud."""

    kind: str  # grid3d | slice_plane | random
    resolution: tuple[int, ...] = (10, 10, 10)
    bounds: tuple[tuple[float, float, float], tuple[float, float, float]] = (
        (-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    u_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    v_axis: tuple[float, float, float] = (0.0, 1.0, 0.0)
    extent: float = 1.0
    count: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("grid3d", "slice_plane", "random"):
            raise ValueError(f"unknown query kind {self.kind!r}")
        if any(r < 1 for r in self.resolution):
            raise ValueError("resolutions must be >= 1")
        if self.kind == "slice_plane":
            u = np.asarray(self.u_axis, dtype=np.float64)
            v = np.asarray(self.v_axis, dtype=np.float64)
            if (abs(np.linalg.norm(u) - 1) > 1e-9
                    or abs(np.linalg.norm(v) - 1) > 1e-9
                    or abs(u @ v) > 1e-9):
                raise ValueError("slice axes must be orthonormal")
        if self.kind == "random" and self.count < 1:
            raise ValueError("count must be >= 1")


def _axis_coords(lo: float, hi: float, r: int) -> np.ndarray:
    if r == 1:
        return np.array([(lo + hi) / 2.0])
    return np.linspace(lo, hi, r)


def make_queries(spec: GridSpec) -> QuerySet:
    lo, hi = np.asarray(spec.bounds[0]), np.asarray(spec.bounds[1])
    if spec.kind == "grid3d":
        rx, ry, rz = (spec.resolution * 3)[:3] if len(spec.resolution) == 1 \
            else spec.resolution[:3]
        xs = _axis_coords(lo[0], hi[0], rx)
        ys = _axis_coords(lo[1], hi[1], ry)
        zs = _axis_coords(lo[2], hi[2], rz)
        gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
        return QuerySet(np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()]))
    if spec.kind == "slice_plane":
        nu, nv = (spec.resolution * 2)[:2] if len(spec.resolution) == 1 \
            else spec.resolution[:2]
        su = _axis_coords(-spec.extent, spec.extent, nu)
        sv = _axis_coords(-spec.extent, spec.extent, nv)
        origin = np.asarray(spec.origin, dtype=np.float64)
        u = np.asarray(spec.u_axis, dtype=np.float64)
        v = np.asarray(spec.v_axis, dtype=np.float64)
        pts = (origin[None, :]
               + sv[:, None, None] * v[None, None, :]
               + su[None, :, None] * u[None, None, :]).reshape(-1, 3)
        return QuerySet(pts)
    rng = np.random.default_rng(spec.seed)
    pts = rng.uniform(lo, hi, size=(spec.count, 3))
    return QuerySet(pts)


def _write_pfm(path, values2d: np.ndarray) -> None:
    # Pf grayscale, negative scale marks little-endian, rows stored bottom-up
    h, w = values2d.shape
    with open(path, "wb") as fh:
        fh.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        data = np.asarray(values2d, dtype="<f4")
        fh.write(data.tobytes())


def _write_pgm(path, values2d: np.ndarray, sentinel2d: np.ndarray,
               value_range=None) -> tuple[float, float]:
    h, w = values2d.shape
    finite = values2d[~sentinel2d]
    if value_range is not None:
        vmin, vmax = float(value_range[0]), float(value_range[1])
    elif finite.size:
        vmin, vmax = float(finite.min()), float(finite.max())
    else:
        vmin = vmax = 0.0
    if vmax > vmin:
        gray = np.rint((values2d - vmin) / (vmax - vmin) * 255.0)
        gray = np.clip(gray, 0, 255).astype(np.uint8)
    else:
        gray = np.full(values2d.shape, 128, dtype=np.uint8)
    gray[sentinel2d] = 0
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())
    return vmin, vmax


def write_outputs(result: FieldResult, queries: QuerySet, spec: GridSpec,
                  out_prefix: str, value_range=None) -> dict[str, str]:
    """Write the CSV (always) and, for slices, PFM/PGM/JSON companions."""
    n = len(queries)
    if result.values.shape[0] != n:
        raise ValueError("field length does not match query count")
    paths = {}
    csv_path = f"{out_prefix}.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("index,x,y,z,value,flag\n")
        for i in range(n):
            x, y, z = queries.positions[i]
            fh.write(f"{i},{x:.17g},{y:.17g},{z:.17g},"
                     f"{result.values[i]:.17g},{int(result.flagged[i])}\n")
    paths["csv"] = csv_path

    if spec.kind == "slice_plane":
        nu, nv = (spec.resolution * 2)[:2] if len(spec.resolution) == 1 \
            else spec.resolution[:2]
        vals = result.values.reshape(nv, nu)
        sent = result.flagged.reshape(nv, nu)
        pfm_vals = np.where(sent, 0.0, vals)
        pfm_path = f"{out_prefix}.pfm"
        _write_pfm(pfm_path, pfm_vals)
        paths["pfm"] = pfm_path
        pgm_path = f"{out_prefix}.pgm"
        vmin, vmax = _write_pgm(pgm_path, np.where(sent, 0.0, vals), sent,
                                value_range)
        paths["pgm"] = pgm_path
        json_path = f"{out_prefix}.json"
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump({"flagged_count": int(sent.sum()),
                       "value_min": vmin, "value_max": vmax,
                       "width": int(nu), "height": int(nv)},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths["json"] = json_path
    return paths
