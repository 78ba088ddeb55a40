"""Jitted batch evaluation cores.

All four evaluators live here as numba kernels parallelized over queries.
Each query is computed independently with fixed accumulation order
(subdomain order, then sample order), so results are bit-identical across
runs and thread counts.

Tree data arrives as the flat arrays produced by ``Octree.core_arrays()``.
A node's term is its aggregate contribution, except multi-point leaves
(depth-capped clusters), whose term is the exact per-point sum; this keeps
the telescoping identity and the stochastic estimator exact even when the
one-point-per-leaf rule cannot hold.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from .kernels import contribution_rows
from .rng import stream_key, uniform_draw

RR_PAPER_RATIO = 0
RR_FIXED_HALF = 1
RR_DISABLED = 2

_DIAM_FLOOR = 1e-12


@njit(cache=True, inline="always")
def rr_probability(ratio_parent, ratio_child, mode):
    if mode == RR_FIXED_HALF:
        return 0.5
    if mode == RR_DISABLED:
        return 1.0
    num = ratio_parent if ratio_parent > 1.0 else 1.0
    den = ratio_child if ratio_child > _DIAM_FLOOR else _DIAM_FLOOR
    p = num / den
    return p if p < 1.0 else 1.0


@njit(cache=True, inline="always")
def _ffr(com, diam, i, qx, qy, qz):
    dx = qx - com[i, 0]
    dy = qy - com[i, 1]
    dz = qz - com[i, 2]
    d = diam[i]
    if d < _DIAM_FLOOR:
        d = _DIAM_FLOOR
    return math.sqrt(dx * dx + dy * dy + dz * dz) / d


@njit(cache=True, inline="always")
def _node_term(kid, alpha, dfloor, agg_mass, com, child_count, begin, end,
               pts, ms, i, qx, qy, qz):
    """Aggregate term, or the exact per-point sum for a multi-point leaf."""
    if child_count[i] == 0 and end[i] - begin[i] > 1:
        acc = 0.0
        for j in range(begin[i], end[i]):
            acc += contribution_rows(kid, alpha, dfloor, ms, j,
                                     pts[j, 0], pts[j, 1], pts[j, 2], qx, qy, qz)
        return acc
    return contribution_rows(kid, alpha, dfloor, agg_mass, i,
                             com[i, 0], com[i, 1], com[i, 2], qx, qy, qz)


@njit(cache=True, inline="always")
def _children_term_sum(kid, alpha, dfloor, agg_mass, com, child_start, child_count,
                       child_index, begin, end, pts, ms, i, qx, qy, qz):
    acc = 0.0
    s = child_start[i]
    for t in range(child_count[i]):
        acc += _node_term(kid, alpha, dfloor, agg_mass, com, child_count, begin, end,
                          pts, ms, child_index[s + t], qx, qy, qz)
    return acc


@njit(cache=True, parallel=True)
def brute_force_batch(kid, alpha, dfloor, pts, ms, queries, out):
    n = queries.shape[0]
    m = pts.shape[0]
    for qi in prange(n):
        qx = queries[qi, 0]
        qy = queries[qi, 1]
        qz = queries[qi, 2]
        # Kahan-compensated accumulation
        acc = 0.0
        comp = 0.0
        for j in range(m):
            v = contribution_rows(kid, alpha, dfloor, ms, j,
                                  pts[j, 0], pts[j, 1], pts[j, 2], qx, qy, qz)
            y = v - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        out[qi] = acc


@njit(cache=True, parallel=True)
def barnes_hut_batch(bbox_min, diam, agg_mass, com, child_start, child_count,
                     child_index, begin, end, pts, ms,
                     kid, alpha, dfloor, queries, beta, stack_cap, out, visited):
    n = queries.shape[0]
    for qi in prange(n):
        qx = queries[qi, 0]
        qy = queries[qi, 1]
        qz = queries[qi, 2]
        stack = np.empty(stack_cap, dtype=np.int64)
        stack[0] = 0
        top = 1
        acc = 0.0
        seen = 0
        while top > 0:
            top -= 1
            a = stack[top]
            seen += 1
            if child_count[a] == 0 or _ffr(com, diam, a, qx, qy, qz) >= beta:
                acc += _node_term(kid, alpha, dfloor, agg_mass, com, child_count,
                                  begin, end, pts, ms, a, qx, qy, qz)
            else:
                s = child_start[a]
                # push in reverse so traversal order matches plain recursion
                for t in range(child_count[a] - 1, -1, -1):
                    stack[top] = child_index[s + t]
                    top += 1
        out[qi] = acc
        visited[qi] = seen


@njit(cache=True, parallel=True)
def telescoping_batch(bbox_min, diam, agg_mass, com, child_start, child_count,
                      child_index, begin, end, pts, ms,
                      kid, alpha, dfloor, queries, out, visited):
    n = queries.shape[0]
    num_nodes = begin.shape[0]
    for qi in prange(n):
        qx = queries[qi, 0]
        qy = queries[qi, 1]
        qz = queries[qi, 2]
        acc = _node_term(kid, alpha, dfloor, agg_mass, com, child_count,
                         begin, end, pts, ms, 0, qx, qy, qz)
        seen = 1
        for a in range(num_nodes):
            if child_count[a] > 0:
                kids = _children_term_sum(kid, alpha, dfloor, agg_mass, com,
                                          child_start, child_count, child_index,
                                          begin, end, pts, ms, a, qx, qy, qz)
                parent = contribution_rows(kid, alpha, dfloor, agg_mass, a,
                                           com[a, 0], com[a, 1], com[a, 2],
                                           qx, qy, qz)
                acc += kids - parent
                seen += 1 + child_count[a]
        out[qi] = acc
        visited[qi] = seen


@njit(cache=True, inline="always")
def _sample_residual(diam, agg_mass, com, child_start, child_count, child_index,
                     begin, end, pts, ms, kid, alpha, dfloor,
                     a, a_ord, count_a, delta_a, qx, qy, qz, qi, s, seed, rr_mode):
    """One path sample from subdomain a: (residual, steps, nodes_read)."""
    key_i = stream_key(seed, qi, a_ord, s, 0)
    key_r = stream_key(seed, qi, a_ord, s, 1)
    u0 = uniform_draw(key_i, 0)
    j = begin[a] + np.int64(u0 * count_a)
    if j >= end[a]:
        j = end[a] - 1

    node = a
    prr = 1.0
    resid = 0.0
    steps = 0
    seen = 0
    rctr = 0
    while child_count[node] > 0:
        # child on this path: the one whose range contains the sampled index
        child = np.int64(-1)
        cs = child_start[node]
        for t in range(child_count[node]):
            c = child_index[cs + t]
            if begin[c] <= j and j < end[c]:
                child = c
                break
        if node == a:
            delta = delta_a
        else:
            delta = (_children_term_sum(kid, alpha, dfloor, agg_mass, com,
                                        child_start, child_count, child_index,
                                        begin, end, pts, ms, node, qx, qy, qz)
                     - contribution_rows(kid, alpha, dfloor, agg_mass, node,
                                         com[node, 0], com[node, 1], com[node, 2],
                                         qx, qy, qz))
        seen += child_count[node]
        pagg = (end[node] - begin[node]) / count_a
        # the swap at this node is committed once the node is reached, so it
        # carries only the survival probability of the roulette checks that
        # led here; the check below gates the *next* level
        resid += delta / (pagg * prr)
        ratio_parent = _ffr(com, diam, node, qx, qy, qz)
        ratio_child = _ffr(com, diam, child, qx, qy, qz)
        p = rr_probability(ratio_parent, ratio_child, rr_mode)
        u = uniform_draw(key_r, rctr)
        rctr += 1
        seen += 1
        if u >= p:
            break
        prr *= p
        node = child
        steps += 1
    return resid, steps, seen


@njit(cache=True, parallel=True)
def stochastic_batch(bbox_min, diam, agg_mass, com, child_start, child_count,
                     child_index, begin, end, pts, ms,
                     kid, alpha, dfloor, queries, n_samples, rr_mode, seed,
                     query_offset, out, visited, path_steps, path_count):
    n = queries.shape[0]
    root_kids = child_count[0]
    for qi in prange(n):
        qx = queries[qi, 0]
        qy = queries[qi, 1]
        qz = queries[qi, 2]
        seen = 0
        steps_total = 0
        paths = 0
        if root_kids == 0:
            out[qi] = _node_term(kid, alpha, dfloor, agg_mass, com, child_count,
                                 begin, end, pts, ms, 0, qx, qy, qz)
            visited[qi] = 1
            path_steps[qi] = 0
            path_count[qi] = 0
            continue
        acc = 0.0
        for a_ord in range(root_kids):
            a = child_index[child_start[0] + a_ord]
            seen += 1
            if child_count[a] == 0:
                acc += _node_term(kid, alpha, dfloor, agg_mass, com, child_count,
                                  begin, end, pts, ms, a, qx, qy, qz)
                continue
            cv = contribution_rows(kid, alpha, dfloor, agg_mass, a,
                                   com[a, 0], com[a, 1], com[a, 2], qx, qy, qz)
            # the first swap along every path from a is at a itself; hoist it
            delta_a = (_children_term_sum(kid, alpha, dfloor, agg_mass, com,
                                          child_start, child_count, child_index,
                                          begin, end, pts, ms, a, qx, qy, qz)
                       - cv)
            count_a = end[a] - begin[a]
            fa = 0.0
            for s in range(n_samples):
                resid, steps, sseen = _sample_residual(
                    diam, agg_mass, com, child_start, child_count, child_index,
                    begin, end, pts, ms, kid, alpha, dfloor,
                    a, a_ord, count_a, delta_a, qx, qy, qz,
                    qi + query_offset, s, seed, rr_mode)
                fa += resid
                steps_total += steps
                seen += sseen
                paths += 1
            acc += cv + fa / n_samples
        out[qi] = acc
        visited[qi] = seen
        path_steps[qi] = steps_total
        path_count[qi] = paths


@njit(cache=True, parallel=True)
def stochastic_moments_batch(bbox_min, diam, agg_mass, com, child_start,
                             child_count, child_index, begin, end, pts, ms,
                             kid, alpha, dfloor, queries, n_reps, rr_mode, seed,
                             mean_out, var_out):
    """Sample mean and variance of n_reps independent single-sample estimates.

    Repetition r reuses the sample_ordinal slot of the RNG keying, so rep r
    here draws the same numbers as sample r of an S=n_reps evaluation.
    """
    n = queries.shape[0]
    root_kids = child_count[0]
    for qi in prange(n):
        qx = queries[qi, 0]
        qy = queries[qi, 1]
        qz = queries[qi, 2]
        if root_kids == 0:
            mean_out[qi] = _node_term(kid, alpha, dfloor, agg_mass, com,
                                      child_count, begin, end, pts, ms,
                                      0, qx, qy, qz)
            var_out[qi] = 0.0
            continue
        base = 0.0
        # constant control-variate part and hoisted per-subdomain swaps
        n_sub = 0
        for a_ord in range(root_kids):
            a = child_index[child_start[0] + a_ord]
            if child_count[a] == 0:
                base += _node_term(kid, alpha, dfloor, agg_mass, com, child_count,
                                   begin, end, pts, ms, a, qx, qy, qz)
            else:
                n_sub += 1
        sub_nodes = np.empty(n_sub, dtype=np.int64)
        sub_ords = np.empty(n_sub, dtype=np.int64)
        sub_delta = np.empty(n_sub, dtype=np.float64)
        w = 0
        for a_ord in range(root_kids):
            a = child_index[child_start[0] + a_ord]
            if child_count[a] == 0:
                continue
            cv = contribution_rows(kid, alpha, dfloor, agg_mass, a,
                                   com[a, 0], com[a, 1], com[a, 2], qx, qy, qz)
            base += cv
            sub_nodes[w] = a
            sub_ords[w] = a_ord
            sub_delta[w] = (_children_term_sum(kid, alpha, dfloor, agg_mass, com,
                                               child_start, child_count,
                                               child_index, begin, end, pts, ms,
                                               a, qx, qy, qz) - cv)
            w += 1
        acc = 0.0
        acc2 = 0.0
        for r in range(n_reps):
            t = 0.0
            for u in range(n_sub):
                a = sub_nodes[u]
                resid, steps, sseen = _sample_residual(
                    diam, agg_mass, com, child_start, child_count, child_index,
                    begin, end, pts, ms, kid, alpha, dfloor,
                    a, sub_ords[u], end[a] - begin[a], sub_delta[u],
                    qx, qy, qz, qi, r, seed, rr_mode)
                t += resid
            acc += t
            acc2 += t * t
        mean_resid = acc / n_reps
        mean_out[qi] = base + mean_resid
        var_out[qi] = max(acc2 / n_reps - mean_resid * mean_resid, 0.0)
