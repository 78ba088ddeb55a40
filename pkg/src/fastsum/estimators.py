"""The four field evaluators and their sampling primitives.

``evaluate_field`` is the batch entry point: it dispatches on the config,
runs the jitted cores query-parallel, and applies the kernel post-transform.
Per-query results depend only on (seed, query index), never on evaluation
order or worker count.

The single-query functions mirror the batch cores one query at a time and
exist mainly as the contract surface for tests and interactive use.
"""

from __future__ import annotations

from dataclasses import dataclass
import os

import numpy as np
import numba

from . import _core
from .kernels import contribution_rows, kernel_id, node_contribution, post_transform
from .octree import Octree, TreeNode, build_tree, far_field_ratio
from .rng import RngStreams
from .types import EstimatorConfig, KernelSpec, QuerySet, SourceSet

__all__ = [
    "FieldResult",
    "PathSampleState",
    "brute_force",
    "barnes_hut",
    "telescoping_exhaustive",
    "path_sample_estimate",
    "russian_roulette_prob",
    "contribution_swap",
    "sample_path_index",
    "walk_path_sample",
    "evaluate_field",
]

_RR_CODES = {"paper_ratio": _core.RR_PAPER_RATIO,
             "fixed_half": _core.RR_FIXED_HALF,
             "disabled": _core.RR_DISABLED}


@dataclass(frozen=True)
class FieldResult:
    """Per-query estimates plus instrumentation.

    values are post-transformed; raw holds the kernel sums before the
    transform. flagged marks sentinel entries (non-positive raw sums under
    the log transform) which are +inf in values.
    """

    values: np.ndarray
    raw: np.ndarray
    flagged: np.ndarray
    visited_nodes: np.ndarray
    path_steps: np.ndarray
    path_count: np.ndarray
    method: str

    @property
    def flagged_count(self) -> int:
        return int(self.flagged.sum())


@dataclass
class PathSampleState:
    """Snapshot of one path sample mid-walk (used by the reference walker)."""

    subdomain: int
    point_index: int
    depth: int
    p_agg: float
    p_rr_cumulative: float
    running_sum: float


def _worker_count() -> int:
    raw = os.environ.get("FASTSUM_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    cap = numba.config.NUMBA_NUM_THREADS
    if n <= 0:
        return cap
    return min(n, cap)


def _check_channels(sources: SourceSet, kernel: KernelSpec) -> None:
    if sources.channel_count != kernel.channel_count:
        raise ValueError(
            f"kernel {kernel.kind!r} needs {kernel.channel_count} mass channels, "
            f"sources have {sources.channel_count}")


def _q1(q) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(q, dtype=np.float64).reshape(1, 3))


def brute_force(sources: SourceSet, kernel: KernelSpec, q) -> float:
    """Exact kernel sum at one query; the ground-truth oracle."""
    _check_channels(sources, kernel)
    out = np.zeros(1)
    _core.brute_force_batch(kernel_id(kernel), kernel.alpha, kernel.distance_floor,
                            sources.positions, sources.masses, _q1(q), out)
    return float(out[0])


def barnes_hut(tree: Octree, sources: SourceSet, kernel: KernelSpec, q,
               beta: float) -> float:
    if not beta > 0:
        raise ValueError("beta must be positive")
    _check_channels(sources, kernel)
    out = np.zeros(1)
    visited = np.zeros(1, dtype=np.int64)
    _core.barnes_hut_batch(*tree.core_arrays(), kernel_id(kernel), kernel.alpha,
                           kernel.distance_floor, _q1(q), float(beta),
                           _stack_cap(tree), out, visited)
    return float(out[0])


def telescoping_exhaustive(tree: Octree, sources: SourceSet, kernel: KernelSpec,
                           q) -> float:
    """Full telescoping traversal; equals brute_force up to reassociation."""
    _check_channels(sources, kernel)
    out = np.zeros(1)
    visited = np.zeros(1, dtype=np.int64)
    _core.telescoping_batch(*tree.core_arrays(), kernel_id(kernel), kernel.alpha,
                            kernel.distance_floor, _q1(q), out, visited)
    return float(out[0])


def path_sample_estimate(tree: Octree, sources: SourceSet, kernel: KernelSpec, q,
                         samples_per_subdomain: int, rr_mode: str = "paper_ratio",
                         seed: int = 0, query_index: int = 0) -> float:
    """Stratified path-sample estimate at one query."""
    if samples_per_subdomain < 1:
        raise ValueError("samples_per_subdomain must be >= 1")
    _check_channels(sources, kernel)
    out = np.zeros(1)
    visited = np.zeros(1, dtype=np.int64)
    steps = np.zeros(1, dtype=np.int64)
    paths = np.zeros(1, dtype=np.int64)
    _core.stochastic_batch(*tree.core_arrays(), kernel_id(kernel), kernel.alpha,
                           kernel.distance_floor, _q1(q),
                           int(samples_per_subdomain), _RR_CODES[rr_mode],
                           np.uint64(seed), int(query_index),
                           out, visited, steps, paths)
    return float(out[0])


def russian_roulette_prob(ratio_parent: float, ratio_child: float,
                          mode: str = "paper_ratio") -> float:
    """Continuation probability in (0, 1] from consecutive far field ratios."""
    if ratio_parent < 0 or ratio_child < 0:
        raise ValueError("far field ratios must be non-negative")
    return float(_core.rr_probability(float(ratio_parent), float(ratio_child),
                                      _RR_CODES[mode]))


def contribution_swap(kernel: KernelSpec, tree: Octree, node, q) -> float:
    """Sum of the children's terms minus the parent's aggregate term.

    Children that are multi-point (depth-capped) leaves contribute their
    exact per-point sum, matching the evaluation cores.
    """
    if isinstance(node, TreeNode):
        node = node.index
    if tree.child_count[node] == 0:
        raise ValueError("contribution_swap requires an internal node")
    q = np.asarray(q, dtype=np.float64)
    total = 0.0
    s = int(tree.child_start[node])
    for t in range(int(tree.child_count[node])):
        total += _leaf_exact_term(kernel, tree, int(tree.child_index[s + t]), q)
    return total - node_contribution(kernel, tree.node(node), q)


def _leaf_exact_term(kernel: KernelSpec, tree: Octree, i: int, q) -> float:
    b, e = int(tree.begin[i]), int(tree.end[i])
    if tree.child_count[i] == 0 and e - b > 1:
        kid = kernel_id(kernel)
        acc = 0.0
        for j in range(b, e):
            acc += contribution_rows(kid, kernel.alpha, kernel.distance_floor,
                                     tree.masses, j,
                                     tree.points[j, 0], tree.points[j, 1],
                                     tree.points[j, 2], q[0], q[1], q[2])
        return acc
    return node_contribution(kernel, tree.node(i), q)


def sample_path_index(stream, tree: Octree, node) -> int:
    """Uniform original-source index over a node's contiguous point range."""
    if isinstance(node, TreeNode):
        node = node.index
    b, e = int(tree.begin[node]), int(tree.end[node])
    u = stream.next_float()
    j = b + int(u * (e - b))
    if j >= e:
        j = e - 1
    return int(tree.permuted_indices[j])


def walk_path_sample(tree: Octree, sources: SourceSet, kernel: KernelSpec, q,
                     subdomain: int, subdomain_ordinal: int, sample_ordinal: int,
                     seed: int, rr_mode: str = "paper_ratio",
                     query_index: int = 0):
    """Pure-Python mirror of one path sample; yields PathSampleState per step.

    Draws the same random numbers as the jitted core, so the final
    running_sum equals the core's residual for that sample. Used by tests.
    """
    q = np.asarray(q, dtype=np.float64)
    streams = RngStreams(seed, query_index, subdomain_ordinal, sample_ordinal)
    b, e = int(tree.begin[subdomain]), int(tree.end[subdomain])
    count_a = e - b
    u0 = streams.index_stream.next_float()
    j = min(b + int(u0 * count_a), e - 1)
    node = subdomain
    prr = 1.0
    resid = 0.0
    k = 0
    yield PathSampleState(subdomain=subdomain,
                          point_index=int(tree.permuted_indices[j]),
                          depth=k, p_agg=1.0, p_rr_cumulative=prr,
                          running_sum=resid)
    while tree.child_count[node] > 0:
        s = int(tree.child_start[node])
        child = -1
        for t in range(int(tree.child_count[node])):
            c = int(tree.child_index[s + t])
            if tree.begin[c] <= j < tree.end[c]:
                child = c
                break
        # the swap at the current node is committed, weighted by the survival
        # probability of the checks that led here; the roulette gates descent
        delta = contribution_swap(kernel, tree, node, q)
        pagg = (tree.end[node] - tree.begin[node]) / count_a
        resid += delta / (pagg * prr)
        p = russian_roulette_prob(far_field_ratio(tree.node(node), q),
                                  far_field_ratio(tree.node(child), q), rr_mode)
        yield PathSampleState(subdomain=subdomain,
                              point_index=int(tree.permuted_indices[j]),
                              depth=k, p_agg=float(pagg), p_rr_cumulative=prr,
                              running_sum=resid)
        if streams.roulette_stream.next_float() >= p:
            return
        prr *= p
        node = child
        k += 1


def _stack_cap(tree: Octree) -> int:
    return int(tree.max_depth + 2) * int(tree.branching_per_dim) ** 3 + 8


def evaluate_field(config: EstimatorConfig, sources: SourceSet,
                   kernel: KernelSpec, queries: QuerySet,
                   tree: Octree | None = None) -> FieldResult:
    """Evaluate the field with the configured method, then post-transform.

    Tree construction is reused if a prebuilt tree (matching the config's
    branching factor) is passed; otherwise one is built here.
    """
    _check_channels(sources, kernel)
    n = len(queries)
    f32 = config.precision == "f32"
    dt = np.float32 if f32 else np.float64
    qarr = queries.positions.astype(dt) if f32 else queries.positions
    raw = np.zeros(n, dtype=dt)
    visited = np.zeros(n, dtype=np.int64)
    path_steps = np.zeros(n, dtype=np.int64)
    path_count = np.zeros(n, dtype=np.int64)

    numba.set_num_threads(_worker_count())

    kid = kernel_id(kernel)
    alpha = kernel.alpha
    dfloor = kernel.distance_floor

    if config.method == "brute_force":
        pts, ms = sources.positions, sources.masses
        if f32:
            pts, ms = pts.astype(dt), ms.astype(dt)
        _core.brute_force_batch(kid, alpha, dfloor, pts, ms, qarr, raw)
        visited[:] = len(sources)
    else:
        if tree is None:
            tree = build_tree(sources, config.resolved_branching, config.max_depth)
        elif tree.branching_per_dim != config.resolved_branching:
            raise ValueError("prebuilt tree branching factor does not match config")
        arrays = tree.core_arrays()
        if f32:
            arrays = tuple(a.astype(dt) if a.dtype == np.float64 else a
                           for a in arrays)
        if config.method == "barnes_hut":
            _core.barnes_hut_batch(*arrays, kid, alpha, dfloor, qarr,
                                   float(config.beta), _stack_cap(tree),
                                   raw, visited)
        elif config.method == "telescoping_exhaustive":
            _core.telescoping_batch(*arrays, kid, alpha, dfloor, qarr,
                                    raw, visited)
        else:
            _core.stochastic_batch(*arrays, kid, alpha, dfloor, qarr,
                                   int(config.samples_per_subdomain),
                                   _RR_CODES[config.rr_mode],
                                   np.uint64(config.seed), 0,
                                   raw, visited, path_steps, path_count)

    values = np.empty(n, dtype=np.float64)
    flagged = np.zeros(n, dtype=bool)
    if kernel.kind == "smooth_exp":
        for i in range(n):
            values[i], flagged[i] = post_transform(kernel, float(raw[i]))
    else:
        values[:] = raw
    return FieldResult(values=values, raw=np.asarray(raw, dtype=np.float64),
                       flagged=flagged, visited_nodes=visited,
                       path_steps=path_steps, path_count=path_count,
                       method=config.method)
