"""Error/efficiency measurement harness.

Reproduces the error-sweep methodology at desk scale: brute-force oracle
fields (cached per scene/kernel/query-set), parameter sweeps over the
Barnes-Hut threshold or the per-subdomain sample count, absolute-error
statistics, RMSE convergence slopes, and the Russian-roulette ablation.

Work is reported as mean visited tree nodes per query, a hardware-neutral
cost proxy; wall times are informational only. RMSE is tracked alongside
the mean/median/max absolute errors because the O(S^-1/2) convergence
claim is only exact for RMSE.
"""

from __future__ import annotations

from dataclasses import dataclass
import hashlib
import json
import time

import numpy as np

from .estimators import FieldResult, evaluate_field
from .octree import build_tree
from .types import EstimatorConfig, KernelSpec, QuerySet, SourceSet

__all__ = [
    "ErrorStats",
    "SweepRecord",
    "error_stats",
    "rmse",
    "run_sweep",
    "convergence_slope",
    "rr_ablation",
    "classify_inside_outside",
    "write_sweep_csv",
    "write_sweep_json",
    "oracle_field",
    "oracle_cache_stats",
]

SWEEP_CSV_HEADER = ("method,parameter,wall_time_s,mean_abs,median_abs,max_abs,"
                    "rmse,visited_nodes_mean,flagged_count")


@dataclass(frozen=True)
class ErrorStats:
    mean_abs: float
    median_abs: float
    max_abs: float
    count: int


@dataclass(frozen=True)
class SweepRecord:
    method: str
    parameter: float
    wall_time_s: float
    stats: ErrorStats
    rmse: float
    visited_nodes_mean: float
    flagged_count: int
    mean_path_length: float = 0.0


def _lower_median(x: np.ndarray) -> float:
    xs = np.sort(x)
    return float(xs[(len(xs) - 1) // 2])


def error_stats(estimates, reference, flags=None) -> ErrorStats:
    """Absolute-error statistics; flagged entries are excluded from stats.

    The median is the lower median for even counts.
    """
    est = np.asarray(estimates, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if est.shape != ref.shape:
        raise ValueError("estimates and reference lengths differ")
    if est.size == 0:
        raise ValueError("empty inputs")
    keep = np.ones(est.shape, dtype=bool) if flags is None else ~np.asarray(flags)
    diffs = np.abs(est[keep] - ref[keep])
    if diffs.size == 0:
        return ErrorStats(np.nan, np.nan, np.nan, 0)
    return ErrorStats(float(diffs.mean()), _lower_median(diffs),
                      float(diffs.max()), int(diffs.size))


def rmse(estimates, reference, flags=None) -> float:
    est = np.asarray(estimates, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    keep = np.ones(est.shape, dtype=bool) if flags is None else ~np.asarray(flags)
    d = est[keep] - ref[keep]
    return float(np.sqrt(np.mean(d * d)))


# ---------------------------------------------------------------------------
# Oracle caching
# ---------------------------------------------------------------------------

_ORACLE_CACHE: dict[str, FieldResult] = {}
_CACHE_STATS = {"hits": 0, "misses": 0}


def content_hash(sources: SourceSet, kernel: KernelSpec,
                 queries: QuerySet) -> str:
    h = hashlib.sha256()
    h.update(sources.positions.tobytes())
    h.update(sources.masses.tobytes())
    h.update(sources.weights.tobytes())
    h.update(repr(kernel).encode())
    h.update(queries.positions.tobytes())
    return h.hexdigest()


def oracle_field(sources: SourceSet, kernel: KernelSpec,
                 queries: QuerySet) -> FieldResult:
    """Brute-force reference field, cached on input content."""
    key = content_hash(sources, kernel, queries)
    if key in _ORACLE_CACHE:
        _CACHE_STATS["hits"] += 1
        return _ORACLE_CACHE[key]
    _CACHE_STATS["misses"] += 1
    result = evaluate_field(EstimatorConfig("brute_force"), sources, kernel,
                            queries)
    _ORACLE_CACHE[key] = result
    return result


def oracle_cache_stats() -> dict[str, int]:
    return dict(_CACHE_STATS)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _record_from_run(method: str, parameter: float, result: FieldResult,
                     oracle: FieldResult, wall: float) -> SweepRecord:
    flags = result.flagged | oracle.flagged
    stats = error_stats(result.values, oracle.values, flags)
    paths = int(result.path_count.sum())
    mean_len = (float(result.path_steps.sum()) / paths) if paths else 0.0
    return SweepRecord(
        method=method, parameter=float(parameter), wall_time_s=wall,
        stats=stats, rmse=rmse(result.values, oracle.values, flags),
        visited_nodes_mean=float(result.visited_nodes.mean()),
        flagged_count=result.flagged_count, mean_path_length=mean_len)


def run_sweep(sources: SourceSet, kernel: KernelSpec, method: str,
              parameters, queries: QuerySet, seed: int = 0,
              branching_per_dim: int | None = None,
              rr_mode: str = "paper_ratio") -> list[SweepRecord]:
    """One record per parameter value (beta for barnes_hut, S for stochastic).

    The oracle field is computed once and cached; the tree is built once
    per sweep and excluded from the timed section. The first evaluation is
    preceded by a discarded warm-up run so JIT compilation never pollutes
    timings.
    """
    if method not in ("barnes_hut", "stochastic"):
        raise ValueError("sweeps support barnes_hut and stochastic methods")
    oracle = oracle_field(sources, kernel, queries)

    def config(p) -> EstimatorConfig:
        if method == "barnes_hut":
            return EstimatorConfig("barnes_hut", beta=float(p), seed=seed,
                                   branching_per_dim=branching_per_dim)
        return EstimatorConfig("stochastic", samples_per_subdomain=int(p),
                               rr_mode=rr_mode, seed=seed,
                               branching_per_dim=branching_per_dim)

    tree = build_tree(sources, config(parameters[0]).resolved_branching)
    # warm-up (JIT + caches), result discarded
    evaluate_field(config(parameters[0]), sources, kernel, queries, tree=tree)

    records = []
    for p in parameters:
        cfg = config(p)
        t0 = time.perf_counter()
        result = evaluate_field(cfg, sources, kernel, queries, tree=tree)
        wall = time.perf_counter() - t0
        records.append(_record_from_run(method, float(p), result, oracle, wall))
    return records


def convergence_slope(records: list[SweepRecord]) -> float:
    """Least-squares slope of log(RMSE) vs log(S) over a sample-count sweep."""
    if len(records) < 4:
        raise ValueError("need at least 4 sweep points")
    s = np.array([r.parameter for r in records], dtype=np.float64)
    if len(np.unique(s)) != len(s):
        raise ValueError("sweep parameters must be distinct")
    e = np.array([r.rmse for r in records], dtype=np.float64)
    if np.any(e <= 0):
        raise ValueError("RMSE must be positive to take logs")
    slope, _ = np.polyfit(np.log(s), np.log(e), 1)
    return float(slope)


def rr_ablation(sources: SourceSet, kernel: KernelSpec, queries: QuerySet,
                samples_per_subdomain: int = 1, seed: int = 0,
                branching_per_dim: int | None = None) -> dict[str, SweepRecord]:
    """Error and work for the three roulette modes on one scene."""
    oracle = oracle_field(sources, kernel, queries)
    cfg0 = EstimatorConfig("stochastic", branching_per_dim=branching_per_dim)
    tree = build_tree(sources, cfg0.resolved_branching)
    out = {}
    for mode in ("paper_ratio", "fixed_half", "disabled"):
        cfg = EstimatorConfig("stochastic",
                              samples_per_subdomain=samples_per_subdomain,
                              rr_mode=mode, seed=seed,
                              branching_per_dim=branching_per_dim)
        evaluate_field(cfg, sources, kernel, queries, tree=tree)  # warm-up
        t0 = time.perf_counter()
        result = evaluate_field(cfg, sources, kernel, queries, tree=tree)
        wall = time.perf_counter() - t0
        out[mode] = _record_from_run("stochastic", samples_per_subdomain,
                                     result, oracle, wall)
    return out


def classify_inside_outside(estimates, reference, threshold: float = 0.5):
    """Threshold winding estimates into inside labels; score vs the oracle.

    Returns (labels, accuracy) where labels = (estimate > threshold) and
    accuracy is the fraction agreeing with the same rule on the reference.
    """
    est = np.asarray(estimates, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if est.shape != ref.shape:
        raise ValueError("estimates and reference lengths differ")
    labels = est > threshold
    oracle_labels = ref > threshold
    return labels, float(np.mean(labels == oracle_labels))


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------

def write_sweep_csv(records: list[SweepRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SWEEP_CSV_HEADER + "\n")
        for r in records:
            fh.write(f"{r.method},{r.parameter:.17g},{r.wall_time_s:.6g},"
                     f"{r.stats.mean_abs:.17g},{r.stats.median_abs:.17g},"
                     f"{r.stats.max_abs:.17g},{r.rmse:.17g},"
                     f"{r.visited_nodes_mean:.17g},{r.flagged_count}\n")


def write_sweep_json(path, config_echo: dict, sources: SourceSet,
                     kernel: KernelSpec, queries: QuerySet,
                     records: list[SweepRecord]) -> None:
    payload = {
        "config": config_echo,
        "input_hash": content_hash(sources, kernel, queries),
        "records": [
            {"method": r.method, "parameter": r.parameter,
             "wall_time_s": r.wall_time_s, "mean_abs": r.stats.mean_abs,
             "median_abs": r.stats.median_abs, "max_abs": r.stats.max_abs,
             "rmse": r.rmse, "visited_nodes_mean": r.visited_nodes_mean,
             "flagged_count": r.flagged_count,
             "mean_path_length": r.mean_path_length}
            for r in records
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
