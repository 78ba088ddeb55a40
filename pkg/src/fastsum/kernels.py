"""Kernel bases and contributions.

Each kernel is a c-channel vector basis g(p, q); a point or tree node
contributes dot(mass, g). This keeps Coulomb potentials (scalar charge),
winding numbers (mass = area-scaled normal) and smooth distance (unit
scalar mass, log post-transform) on one code path.

The jitted ``contribution_*`` helpers are the single arithmetic authority:
the Python API below and the batch evaluation cores both call them, so
oracle-equivalence tests hold bitwise.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .types import KernelSpec

__all__ = [
    "KernelBasisValue",
    "kernel_basis",
    "point_contribution",
    "node_contribution",
    "post_transform",
    "kernel_id",
    "KERNEL_COULOMB",
    "KERNEL_WINDING",
    "KERNEL_SMOOTH_EXP",
]

KERNEL_COULOMB = 0
KERNEL_WINDING = 1
KERNEL_SMOOTH_EXP = 2

_IDS = {"coulomb": KERNEL_COULOMB, "winding_dipole": KERNEL_WINDING,
        "smooth_exp": KERNEL_SMOOTH_EXP}

_INV_4PI = 1.0 / (4.0 * math.pi)


def kernel_id(kernel: KernelSpec) -> int:
    """Integer tag used by the jitted cores."""
    return _IDS[kernel.kind]


@njit(cache=True, inline="always")
def contribution_rows(kid, alpha, dfloor, masses, row, px, py, pz, qx, qy, qz):
    """dot(masses[row], g(p, q)) for one source/aggregate at (px, py, pz)."""
    dx = px - qx
    dy = py - qy
    dz = pz - qz
    r = math.sqrt(dx * dx + dy * dy + dz * dz)
    if r < dfloor:
        r = dfloor
    if kid == 0:  # coulomb
        return -masses[row, 0] / r
    elif kid == 1:  # winding dipole
        s = _INV_4PI / (r * r * r)
        return (masses[row, 0] * dx + masses[row, 1] * dy + masses[row, 2] * dz) * s
    else:  # smooth exponential
        return masses[row, 0] * math.exp(-alpha * r)


class KernelBasisValue:
    """c-vector basis value; dot with a mass vector gives a contribution."""

    __slots__ = ("value",)

    def __init__(self, value: np.ndarray):
        self.value = np.atleast_1d(np.asarray(value, dtype=np.float64))


def kernel_basis(kernel: KernelSpec, p, q) -> KernelBasisValue:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    d = p - q
    r = max(float(np.sqrt(d @ d)), kernel.distance_floor)
    if kernel.kind == "coulomb":
        return KernelBasisValue(np.array([-1.0 / r]))
    if kernel.kind == "winding_dipole":
        return KernelBasisValue(d * (_INV_4PI / (r * r * r)))
    return KernelBasisValue(np.array([math.exp(-kernel.alpha * r)]))


def point_contribution(kernel: KernelSpec, source, q) -> float:
    """dot(source.mass, g(source.position, q))."""
    mass = np.atleast_2d(np.asarray(source.mass, dtype=np.float64))
    p = np.asarray(source.position, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return contribution_rows(kernel_id(kernel), kernel.alpha, kernel.distance_floor,
                             mass, 0, p[0], p[1], p[2], q[0], q[1], q[2])


def node_contribution(kernel: KernelSpec, node, q) -> float:
    """dot(node.aggregate_mass, g(node.center_of_mass, q)).

    For a single-point leaf this equals point_contribution of that point
    bit-for-bit (the builder stores the point's data verbatim).
    """
    mass = np.atleast_2d(np.asarray(node.aggregate_mass, dtype=np.float64))
    p = np.asarray(node.center_of_mass, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return contribution_rows(kernel_id(kernel), kernel.alpha, kernel.distance_floor,
                             mass, 0, p[0], p[1], p[2], q[0], q[1], q[2])


def post_transform(kernel: KernelSpec, raw: float) -> tuple[float, bool]:
    """Map a raw kernel sum to the reported field value.

    smooth_exp applies -ln(raw)/alpha; a non-positive raw sum (possible for
    noisy stochastic estimates) yields (+inf, True) rather than an error,
    since downstream consumers count such entries separately. The other
    kernels are identity with flag False.
    """
    if kernel.kind != "smooth_exp":
        return float(raw), False
    if raw <= 0.0:
        return math.inf, True
    return -math.log(raw) / kernel.alpha, False
