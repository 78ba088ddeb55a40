"""Small triangle-mesh helpers: areas, normals, and a built-in icosphere.

The icosphere is the stock closed test surface for winding-number and
error-sweep scenes when no OBJ file is supplied.
"""

from __future__ import annotations

import numpy as np

__all__ = ["triangle_areas_normals", "icosphere", "torus"]


def triangle_areas_normals(vertices: np.ndarray, faces: np.ndarray):
    """Per-triangle areas and unit normals (right-hand winding)."""
    v = np.asarray(vertices, dtype=np.float64)
    f = np.asarray(faces, dtype=np.int64)
    a = v[f[:, 1]] - v[f[:, 0]]
    b = v[f[:, 2]] - v[f[:, 0]]
    cross = np.cross(a, b)
    norms = np.linalg.norm(cross, axis=1)
    areas = 0.5 * norms
    unit = np.zeros_like(cross)
    ok = norms > 0
    unit[ok] = cross[ok] / norms[ok, None]
    return areas, unit


def icosphere(subdivisions: int = 3, radius: float = 1.0,
              center=(0.0, 0.0, 0.0)):
    """Subdivided icosahedron projected onto a sphere; returns (V, F).

    Outward-facing winding, closed and watertight. Subdivision n has
    20 * 4^n triangles.
    """
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)

    for _ in range(subdivisions):
        edge_mid: dict[tuple[int, int], int] = {}
        new_verts = [verts]
        next_id = len(verts)

        def midpoint(i, j):
            nonlocal next_id
            key = (min(i, j), max(i, j))
            if key in edge_mid:
                return edge_mid[key]
            m = verts[i] + verts[j]
            m /= np.linalg.norm(m)
            new_verts.append(m[None, :])
            edge_mid[key] = next_id
            next_id += 1
            return edge_mid[key]

        new_faces = []
        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc],
                              [ab, bc, ca]])
        verts = np.vstack(new_verts)
        faces = np.array(new_faces, dtype=np.int64)

    verts = verts * radius + np.asarray(center, dtype=np.float64)
    return verts, faces


def torus(major_radius: float = 0.6, minor_radius: float = 0.08,
          segments_major: int = 96, segments_minor: int = 24,
          center=(0.0, 0.0, 0.0)):
    """Closed triangulated torus around the z axis; returns (V, F).

    A thin tube (small minor radius) gives a closed surface whose near
    field occupies very little of the enclosing volume — handy for field
    benchmarks where most query points should sit in the far field.
    """
    if not (0 < minor_radius < major_radius):
        raise ValueError("need 0 < minor_radius < major_radius")
    if segments_major < 3 or segments_minor < 3:
        raise ValueError("need at least 3 segments in each direction")
    u = 2.0 * np.pi * np.arange(segments_major) / segments_major
    v = 2.0 * np.pi * np.arange(segments_minor) / segments_minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = major_radius + minor_radius * np.cos(vv)
    verts = np.column_stack([
        (ring * np.cos(uu)).ravel(),
        (ring * np.sin(uu)).ravel(),
        (minor_radius * np.sin(vv)).ravel(),
    ])
    faces = []
    for i in range(segments_major):
        for j in range(segments_minor):
            a = i * segments_minor + j
            b = ((i + 1) % segments_major) * segments_minor + j
            a2 = i * segments_minor + (j + 1) % segments_minor
            b2 = ((i + 1) % segments_major) * segments_minor + (j + 1) % segments_minor
            # outward winding (verified by the closed-surface solid angle)
            faces.append([a, b, b2])
            faces.append([a, b2, a2])
    verts = verts + np.asarray(center, dtype=np.float64)
    return verts, np.array(faces, dtype=np.int64)
