"""Triangulated pixel-grid complexes filtered by intensity level sets.

Each pixel center is a vertex.  Every unit pixel square is split into two
triangles by the diagonal from its top-left to its bottom-right vertex, so
the complex on a W x H grid has W*H vertices, (W-1)*H + W*(H-1) + (W-1)*(H-1)
edges, and 2*(W-1)*(H-1) triangles.  Under the upper-level direction a simplex
carries the minimum of its vertices' intensities (it enters the complex once
the sweeping threshold drops below all of its vertices); the lower-level
direction uses the maximum.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["Direction", "FilteredComplex", "build", "dump_simplices"]


class Direction(enum.Enum):
    UPPER_LEVEL = "upper"
    LOWER_LEVEL = "lower"


@lru_cache(maxsize=16)
def grid_structure(width: int, height: int):
    """Simplices of the W x H grid triangulation (value-independent part).

    Returns (edges, triangles, tri_edge_idx): vertex ids sorted ascending per
    simplex, plus for each triangle the indices of its three boundary edges
    in the edge array.
    """
    ids = np.arange(height * width, dtype=np.int32).reshape(height, width)
    horiz = np.stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()], axis=1)
    vert = np.stack([ids[:-1, :].ravel(), ids[1:, :].ravel()], axis=1)
    # Diagonal of each unit square runs top-left to bottom-right.
    diag = np.stack([ids[:-1, :-1].ravel(), ids[1:, 1:].ravel()], axis=1)
    edges = np.sort(np.concatenate([horiz, vert, diag], axis=0), axis=1).astype(np.int32)

    tl, tr = ids[:-1, :-1].ravel(), ids[:-1, 1:].ravel()
    bl, br = ids[1:, :-1].ravel(), ids[1:, 1:].ravel()
    upper_tris = np.stack([tl, tr, br], axis=1)  # above the diagonal
    lower_tris = np.stack([tl, bl, br], axis=1)  # below the diagonal
    triangles = np.sort(np.concatenate([upper_tris, lower_tris], axis=0), axis=1).astype(np.int32)

    n_v = height * width
    edge_keys = edges[:, 0].astype(np.int64) * n_v + edges[:, 1]
    key_order = np.argsort(edge_keys)
    sorted_keys = edge_keys[key_order]
    tri_edge_idx = np.empty((triangles.shape[0], 3), dtype=np.int64)
    for c, (i, j) in enumerate(((0, 1), (0, 2), (1, 2))):
        face_keys = triangles[:, i].astype(np.int64) * n_v + triangles[:, j]
        tri_edge_idx[:, c] = key_order[np.searchsorted(sorted_keys, face_keys)]

    edges.flags.writeable = False
    triangles.flags.writeable = False
    tri_edge_idx.flags.writeable = False
    return edges, triangles, tri_edge_idx


@dataclass(frozen=True)
class FilteredComplex:
    """Simplices of the fixed grid triangulation with filtration values.

    Vertices are indexed row-major (id = y * width + x).  ``edges`` and
    ``triangles`` hold vertex ids sorted ascending within each simplex.
    """

    width: int
    height: int
    direction: Direction
    vertex_values: np.ndarray  # (V,) float64
    edges: np.ndarray  # (E, 2) int32
    edge_values: np.ndarray  # (E,) float64
    triangles: np.ndarray  # (T, 3) int32
    triangle_values: np.ndarray  # (T,) float64

    @property
    def n_vertices(self) -> int:
        return self.vertex_values.shape[0]

    def vertex_xy(self, vid: int) -> tuple[int, int]:
        return vid % self.width, vid // self.width


def build(image, direction: Direction = Direction.UPPER_LEVEL) -> FilteredComplex:
    """Build the filtered complex of an image under the given sweep direction."""
    inten = image.intensity
    h, w = inten.shape
    vals = inten.ravel()
    edges, triangles, _ = grid_structure(w, h)

    reducer = np.minimum if direction is Direction.UPPER_LEVEL else np.maximum
    edge_values = reducer(vals[edges[:, 0]], vals[edges[:, 1]])
    triangle_values = reducer(
        reducer(vals[triangles[:, 0]], vals[triangles[:, 1]]), vals[triangles[:, 2]]
    )

    return FilteredComplex(
        width=w,
        height=h,
        direction=direction,
        vertex_values=vals.copy(),
        edges=edges,
        edge_values=edge_values,
        triangles=triangles,
        triangle_values=triangle_values,
    )


def filtration_order(fc: FilteredComplex):
    """Total simplex order: by value (direction-appropriate), then dimension
    (vertices < edges < triangles), then lexicographic vertex ids.

    Returns (dims, boundary, values, members, order) with simplices
    identified by position in this order.  ``boundary`` holds each simplex's
    facet positions, -1 padded and sorted so padding comes first; ``members``
    holds vertex ids (-1 padded); ``order`` maps position -> original simplex
    index in the concatenated (vertices, edges, triangles) layout.
    """
    n_v = fc.n_vertices
    n_e = fc.edges.shape[0]
    n_t = fc.triangles.shape[0]
    _, _, tri_edge_idx = grid_structure(fc.width, fc.height)

    values = np.concatenate([fc.vertex_values, fc.edge_values, fc.triangle_values])
    dims = np.concatenate(
        [
            np.zeros(n_v, dtype=np.int8),
            np.ones(n_e, dtype=np.int8),
            np.full(n_t, 2, dtype=np.int8),
        ]
    )
    pad_v = np.full((n_v, 2), -1, dtype=np.int32)
    members = np.concatenate(
        [
            np.concatenate([np.arange(n_v, dtype=np.int32)[:, None], pad_v], axis=1),
            np.concatenate([fc.edges, np.full((n_e, 1), -1, dtype=np.int32)], axis=1),
            fc.triangles,
        ],
        axis=0,
    )

    primary = -values if fc.direction is Direction.UPPER_LEVEL else values
    order = np.lexsort((members[:, 2], members[:, 1], members[:, 0], dims, primary))
    rank = np.empty(order.shape[0], dtype=np.int64)
    rank[order] = np.arange(order.shape[0])

    boundary = np.full((n_v + n_e + n_t, 3), -1, dtype=np.int64)
    boundary[n_v : n_v + n_e, 1] = rank[fc.edges[:, 0]]
    boundary[n_v : n_v + n_e, 2] = rank[fc.edges[:, 1]]
    edge_rank = rank[n_v : n_v + n_e]
    boundary[n_v + n_e :] = edge_rank[tri_edge_idx]

    boundary = np.sort(boundary[order], axis=1)
    return dims[order], boundary, values[order], members[order], order


def dump_simplices(fc: FilteredComplex) -> str:
    """Debug listing: one "dim, vertex-ids, value" line per simplex."""
    lines = []
    for vid, val in enumerate(fc.vertex_values):
        lines.append(f"0, {vid}, {val!r}")
    for (a, b), val in zip(fc.edges, fc.edge_values):
        lines.append(f"1, {a} {b}, {val!r}")
    for (a, b, c), val in zip(fc.triangles, fc.triangle_values):
        lines.append(f"2, {a} {b} {c}, {val!r}")
    return "\n".join(lines) + "\n"
