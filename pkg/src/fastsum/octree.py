"""Wide-branching spatial subdivision over a source set.

Cells are uniform midpoint splits of the root cube (d x d x d per level),
so a child's diagonal is exactly the parent's divided by d; that geometric
ratio is what makes the Russian roulette probabilities converge to 1/d on
deep far-field paths. Cell boxes are *not* shrunk to fit their points.

Nodes live in flat arrays in depth-first order; each node owns a
contiguous range of the permuted point index array. Empty cells produce
no node. Leaves hold exactly one point, except leaves at the depth cap,
which may hold several (coincident or near-coincident points).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .types import SourceSet

__all__ = ["TreeNode", "Octree", "build_tree", "far_field_ratio", "validate_tree",
           "dump_outline"]

_DIAM_FLOOR = 1e-12


@dataclass(frozen=True)
class TreeNode:
    """Read-only view of one tree node."""

    index: int
    bbox_min: np.ndarray
    bbox_max: np.ndarray
    diameter: float
    aggregate_mass: np.ndarray
    aggregate_weight: float
    center_of_mass: np.ndarray
    children: tuple[int, ...]
    point_range: tuple[int, int]
    depth: int

    @property
    def is_leaf(self) -> bool:
        return len(self.children) == 0

    @property
    def count(self) -> int:
        return self.point_range[1] - self.point_range[0]


class Octree:
    """Immutable flat-array octree over a SourceSet.

    Point data is reordered so every node's points form a contiguous slice:
    ``permuted_indices[begin:end]`` are the original indices, and the
    ``points``/``masses``/``weights`` arrays here are already permuted.
    """

    __slots__ = (
        "branching_per_dim", "max_depth",
        "bbox_min", "bbox_max", "diameter", "aggregate_mass", "aggregate_weight",
        "center_of_mass", "child_start", "child_count", "child_index",
        "begin", "end", "depth",
        "permuted_indices", "points", "masses", "weights",
    )

    def __init__(self, **arrays):
        for k in self.__slots__:
            v = arrays[k]
            if isinstance(v, np.ndarray):
                v.setflags(write=False)
            object.__setattr__(self, k, v)

    def __setattr__(self, name, value):
        raise AttributeError("Octree is immutable")

    @property
    def num_nodes(self) -> int:
        return self.begin.shape[0]

    @property
    def num_points(self) -> int:
        return self.permuted_indices.shape[0]

    @property
    def root(self) -> TreeNode:
        return self.node(0)

    def node(self, i: int) -> TreeNode:
        s, c = int(self.child_start[i]), int(self.child_count[i])
        return TreeNode(
            index=i,
            bbox_min=self.bbox_min[i],
            bbox_max=self.bbox_max[i],
            diameter=float(self.diameter[i]),
            aggregate_mass=self.aggregate_mass[i],
            aggregate_weight=float(self.aggregate_weight[i]),
            center_of_mass=self.center_of_mass[i],
            children=tuple(int(j) for j in self.child_index[s:s + c]),
            point_range=(int(self.begin[i]), int(self.end[i])),
            depth=int(self.depth[i]),
        )

    def nodes(self):
        for i in range(self.num_nodes):
            yield self.node(i)

    def core_arrays(self):
        """Positional bundle consumed by the jitted evaluation cores."""
        return (self.bbox_min, self.diameter, self.aggregate_mass,
                self.center_of_mass, self.child_start, self.child_count,
                self.child_index, self.begin, self.end,
                self.points, self.masses)


def build_tree(sources: SourceSet, branching_per_dim: int = 2,
               max_depth: int = 32) -> Octree:
    """Build the uniform-cell subdivision tree; deterministic and serial."""
    if branching_per_dim < 2:
        raise ValueError("branching_per_dim must be >= 2")
    if max_depth < 1:
        raise ValueError("max_depth must be positive")
    d = int(branching_per_dim)
    pos = sources.positions
    masses = sources.masses
    weights = sources.weights
    m_total = len(sources)
    c = sources.channel_count
    perm = np.arange(m_total, dtype=np.int64)

    lo = pos.min(axis=0)
    hi = pos.max(axis=0)
    side = float(np.max(hi - lo))
    root_min = (lo + hi) / 2.0 - side / 2.0

    bbox_min: list[np.ndarray] = []
    sides: list[float] = []
    begin: list[int] = []
    end: list[int] = []
    depth: list[int] = []
    children: list[list[int]] = []
    agg_mass: list[np.ndarray] = []
    agg_weight: list[float] = []
    com: list[np.ndarray] = []

    def rec(cell_min: np.ndarray, cell_side: float, b: int, e: int, dep: int) -> int:
        idx = len(begin)
        bbox_min.append(cell_min)
        sides.append(cell_side)
        begin.append(b)
        end.append(e)
        depth.append(dep)
        children.append([])
        agg_mass.append(None)  # filled below
        agg_weight.append(0.0)
        com.append(None)

        n = e - b
        if n == 1:
            # copy the point verbatim so a single-point node's aggregate term
            # equals the point term bit-for-bit
            j = perm[b]
            agg_mass[idx] = masses[j].copy()
            agg_weight[idx] = float(weights[j])
            com[idx] = pos[j].copy()
            return idx
        if dep >= max_depth or cell_side == 0.0:
            sel = perm[b:e]
            w = weights[sel]
            wsum = float(w.sum())
            agg_mass[idx] = masses[sel].sum(axis=0)
            agg_weight[idx] = wsum
            com[idx] = (w[:, None] * pos[sel]).sum(axis=0) / wsum
            return idx

        csize = cell_side / d
        pts = pos[perm[b:e]]
        rel = np.floor((pts - cell_min) / csize).astype(np.int64)
        np.clip(rel, 0, d - 1, out=rel)
        cid = (rel[:, 0] * d + rel[:, 1]) * d + rel[:, 2]
        order = np.argsort(cid, kind="stable")
        perm[b:e] = perm[b:e][order]
        cid = cid[order]
        uniq, counts = np.unique(cid, return_counts=True)
        offs = b + np.concatenate(([0], np.cumsum(counts)))
        kids = []
        for u, cb, ce in zip(uniq, offs[:-1], offs[1:]):
            iz = u % d
            iy = (u // d) % d
            ix = u // (d * d)
            cmin = cell_min + np.array([ix, iy, iz], dtype=np.float64) * csize
            kids.append(rec(cmin, csize, int(cb), int(ce), dep + 1))
        children[idx] = kids
        w = 0.0
        ms = np.zeros(c)
        wc = np.zeros(3)
        for k in kids:
            w += agg_weight[k]
            ms += agg_mass[k]
            wc += agg_weight[k] * com[k]
        agg_mass[idx] = ms
        agg_weight[idx] = w
        com[idx] = wc / w
        return idx

    rec(root_min, side, 0, m_total, 0)

    n = len(begin)
    bmin = np.ascontiguousarray(np.vstack(bbox_min))
    side_arr = np.asarray(sides, dtype=np.float64)
    bmax = bmin + side_arr[:, None]
    child_count = np.array([len(k) for k in children], dtype=np.int64)
    child_start = np.zeros(n, dtype=np.int64)
    child_start[1:] = np.cumsum(child_count)[:-1]
    child_index = (np.concatenate([np.asarray(k, dtype=np.int64) for k in children])
                   if child_count.sum() else np.zeros(0, dtype=np.int64))

    return Octree(
        branching_per_dim=d,
        max_depth=int(max_depth),
        bbox_min=bmin,
        bbox_max=np.ascontiguousarray(bmax),
        diameter=side_arr * math.sqrt(3.0),
        aggregate_mass=np.ascontiguousarray(np.vstack(agg_mass)),
        aggregate_weight=np.asarray(agg_weight, dtype=np.float64),
        center_of_mass=np.ascontiguousarray(np.vstack(com)),
        child_start=child_start,
        child_count=child_count,
        child_index=child_index,
        begin=np.asarray(begin, dtype=np.int64),
        end=np.asarray(end, dtype=np.int64),
        depth=np.asarray(depth, dtype=np.int64),
        permuted_indices=perm,
        points=np.ascontiguousarray(pos[perm]),
        masses=np.ascontiguousarray(masses[perm]),
        weights=np.ascontiguousarray(weights[perm]),
    )


def far_field_ratio(node: TreeNode, q) -> float:
    """||q - center_of_mass|| / diameter, with a zero-diameter clamp."""
    q = np.asarray(q, dtype=np.float64)
    dv = q - node.center_of_mass
    dist = math.sqrt(float(dv @ dv))
    return dist / max(node.diameter, _DIAM_FLOOR)


def validate_tree(tree: Octree, sources: SourceSet) -> list[str]:
    """Check every structural invariant; returns violations (empty = valid)."""
    report: list[str] = []
    m_total = len(sources)
    perm = tree.permuted_indices
    if sorted(perm.tolist()) != list(range(m_total)):
        report.append("permuted_indices is not a permutation of 0..M-1")
        return report
    if not (tree.begin[0] == 0 and tree.end[0] == m_total):
        report.append("root point_range does not cover all points")

    d = tree.branching_per_dim
    for i in range(tree.num_nodes):
        b, e = int(tree.begin[i]), int(tree.end[i])
        sel = perm[b:e]
        mass_ref = sources.masses[sel].sum(axis=0)
        l1 = np.abs(sources.masses[sel]).sum()
        if np.any(np.abs(tree.aggregate_mass[i] - mass_ref) > 1e-12 * (1.0 + l1)):
            report.append(f"node {i}: aggregate_mass != sum of contained masses")
        w = sources.weights[sel]
        wsum = w.sum()
        if abs(tree.aggregate_weight[i] - wsum) > 1e-12 * (1.0 + wsum):
            report.append(f"node {i}: aggregate_weight != sum of contained weights")
        com_ref = (w[:, None] * sources.positions[sel]).sum(axis=0) / wsum
        scale = max(1.0, float(np.abs(sources.positions[sel]).max()))
        if np.any(np.abs(tree.center_of_mass[i] - com_ref) > 1e-9 * scale):
            report.append(f"node {i}: center_of_mass != weighted mean of positions")
        tol = 1e-9 * max(1.0, float(tree.diameter[i]))
        if (np.any(tree.center_of_mass[i] < tree.bbox_min[i] - tol)
                or np.any(tree.center_of_mass[i] > tree.bbox_max[i] + tol)):
            report.append(f"node {i}: center_of_mass outside bbox")

        cs, cc = int(tree.child_start[i]), int(tree.child_count[i])
        kids = tree.child_index[cs:cs + cc]
        if cc == 0:
            if e - b != 1 and tree.depth[i] != tree.max_depth:
                report.append(f"node {i}: multi-point leaf below the depth cap")
        else:
            if not (1 <= cc <= d ** 3):
                report.append(f"node {i}: child count {cc} outside [1, d^3]")
            cursor = b
            for k in kids:
                if int(tree.begin[k]) != cursor:
                    report.append(f"node {i}: children ranges not contiguous")
                    break
                cursor = int(tree.end[k])
            else:
                if cursor != e:
                    report.append(f"node {i}: children ranges do not cover parent")
            for k in kids:
                if tree.diameter[k] > tree.diameter[i] / d + 1e-12:
                    report.append(f"node {i}: child {k} diameter exceeds parent/d")
            w_kids = tree.aggregate_weight[kids].sum()
            m_kids = tree.aggregate_mass[kids].sum(axis=0)
            l1k = np.abs(tree.aggregate_mass[kids]).sum()
            if abs(tree.aggregate_weight[i] - w_kids) > 1e-12 * (1.0 + w_kids):
                report.append(f"node {i}: aggregate_weight inconsistent with children")
            if np.any(np.abs(tree.aggregate_mass[i] - m_kids) > 1e-12 * (1.0 + l1k)):
                report.append(f"node {i}: aggregate_mass inconsistent with children")
            com_kids = (tree.aggregate_weight[kids, None]
                        * tree.center_of_mass[kids]).sum(axis=0) / w_kids
            if np.any(np.abs(tree.center_of_mass[i] - com_kids) > 1e-9 * scale):
                report.append(f"node {i}: center_of_mass inconsistent with children")
    return report


def dump_outline(tree: Octree) -> str:
    """Human-readable one-line-per-node outline (debug aid for the CLI)."""
    lines = []
    for i in range(tree.num_nodes):
        nd = tree.node(i)
        mass = np.array2string(nd.aggregate_mass, precision=6)
        lines.append(
            f"{'  ' * nd.depth}node {i} depth={nd.depth} "
            f"range=[{nd.point_range[0]},{nd.point_range[1]}) "
            f"children={len(nd.children)} weight={nd.aggregate_weight:.6g} "
            f"mass={mass}")
    return "\n".join(lines)
