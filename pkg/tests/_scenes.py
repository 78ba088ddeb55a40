"""Shared scene builders for the test suite."""

import numpy as np

from fastsum.types import QuerySet, SourceSet


def make_sources(m, seed, channels=1, span=1.0):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(-span, span, size=(m, 3))
    masses = rng.normal(size=(m, channels))
    return SourceSet(pos, masses)


def make_query_points(n, seed, span=1.5):
    rng = np.random.default_rng(seed)
    return rng.uniform(-span, span, size=(n, 3))


def make_queryset(n, seed, span=1.5):
    return QuerySet(make_query_points(n, seed, span))
