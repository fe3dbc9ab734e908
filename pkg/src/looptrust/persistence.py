"""Persistence diagrams of filtered grid complexes.

Pairing is computed by column reduction of the mod-2 boundary matrix in
filtration order, processing dimensions top-down with the clearing
optimization (columns of simplices already paired as cycle creators are
skipped).  Each finite diagram point is annotated with the pixel that
realizes its birth value and the pixel that realizes its death value.

The bottleneck distance between two diagrams is computed exactly by binary
search over candidate distances with a bipartite feasibility matching that
includes diagonal projections of both diagrams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .filtration import Direction, FilteredComplex, filtration_order

__all__ = [
    "DiagramPoint",
    "PersistenceDiagram",
    "compute_diagram",
    "bottleneck_distance",
    "save_diagram",
    "load_diagram",
]


@dataclass(frozen=True)
class DiagramPoint:
    dim: int
    death: float
    birth: float
    essential: bool
    birth_vertex: tuple[int, int]  # (x, y)
    death_vertex: tuple[int, int] | None

    @property
    def persistence(self) -> float:
        return abs(self.birth - self.death)


@dataclass(frozen=True)
class PersistenceDiagram:
    points: tuple[DiagramPoint, ...]

    def in_dim(self, dim: int, include_essential: bool = True) -> tuple[DiagramPoint, ...]:
        return tuple(
            p for p in self.points if p.dim == dim and (include_essential or not p.essential)
        )

    def most_persistent(self, dim: int) -> DiagramPoint | None:
        pts = self.in_dim(dim, include_essential=False)
        if not pts:
            return None
        return max(pts, key=lambda p: (p.persistence, p.birth, p.death))

    def as_multiset(self) -> tuple:
        return tuple(sorted((p.dim, p.death, p.birth, p.essential) for p in self.points))


@njit(cache=True, nogil=True)
def _reduce_twist(dims, boundary, cap):  # pragma: no cover - exercised via wrapper
    """Column reduction with clearing.  Returns (pair, status).

    ``pair[i] = j`` links a creator simplex i with the killer j (and vice
    versa); unpaired simplices keep -1.  status < 0 signals that the column
    workspace overflowed and the caller should retry with a larger cap.
    """
    n = dims.shape[0]
    pair = np.full(n, -1, dtype=np.int64)
    owner_start = np.full(n, -1, dtype=np.int64)
    owner_len = np.zeros(n, dtype=np.int64)
    buf = np.empty(cap, dtype=np.int64)
    top = 0
    a = np.empty(n, dtype=np.int64)
    b = np.empty(n, dtype=np.int64)

    for dim in (2, 1):
        for j in range(n):
            if dims[j] != dim or pair[j] != -1:
                continue
            la = 0
            for c in range(3):
                v = boundary[j, c]
                if v >= 0:
                    a[la] = v
                    la += 1
            while la > 0:
                p = a[la - 1]
                o = owner_start[p]
                if o < 0:
                    if top + la > cap:
                        return pair, -1
                    owner_start[p] = top
                    owner_len[p] = la
                    for t in range(la):
                        buf[top + t] = a[t]
                    top += la
                    pair[p] = j
                    pair[j] = p
                    break
                # symmetric difference with the column owning pivot p
                lb = owner_len[p]
                ia = 0
                ib = 0
                lo = 0
                while ia < la and ib < lb:
                    va = a[ia]
                    vb = buf[o + ib]
                    if va < vb:
                        b[lo] = va
                        lo += 1
                        ia += 1
                    elif vb < va:
                        b[lo] = vb
                        lo += 1
                        ib += 1
                    else:
                        ia += 1
                        ib += 1
                while ia < la:
                    b[lo] = a[ia]
                    lo += 1
                    ia += 1
                while ib < lb:
                    b[lo] = buf[o + ib]
                    lo += 1
                    ib += 1
                tmp = a
                a = b
                b = tmp
                la = lo
    return pair, 0


def _lex_min_vertex(vids, vals, target, width):
    """Among simplex vertices whose value equals target, the (x, y)-lex smallest."""
    best = None
    for vid in vids:
        if vid < 0 or vals[vid] != target:
            continue
        xy = (int(vid) % width, int(vid) // width)
        if best is None or xy < best:
            best = xy
    return best


def compute_diagram(fc: FilteredComplex) -> PersistenceDiagram:
    """All dim-0 and dim-1 persistence pairs of the filtration.

    Zero-persistence pairs (birth equal to death) are dropped.  The one
    unpaired component of a connected grid is reported as an essential dim-0
    point whose death is recorded at the final sweep value (the global
    minimum intensity for an upper-level filtration, the maximum for
    lower-level) so diagram coordinates stay finite.
    """
    dims, boundary, values, members, _ = filtration_order(fc)
    n = dims.shape[0]
    vals = fc.vertex_values

    cap = 8 * n + 64
    while True:
        pair, status = _reduce_twist(dims, boundary, cap)
        if status == 0:
            break
        cap *= 4

    idx = np.arange(n)
    creators = idx[(pair > idx)]
    killers = pair[creators]
    finite_keep = values[creators] != values[killers]

    end_value = float(
        vals.min() if fc.direction is Direction.UPPER_LEVEL else vals.max()
    )

    points: list[DiagramPoint] = []
    for i, j in zip(creators[finite_keep], killers[finite_keep]):
        birth = float(values[i])
        death = float(values[j])
        bv = _lex_min_vertex(members[i], vals, values[i], fc.width)
        dv = _lex_min_vertex(members[j], vals, values[j], fc.width)
        points.append(DiagramPoint(int(dims[i]), death, birth, False, bv, dv))

    essential = idx[pair == -1]
    for i in essential:
        if dims[i] == 2:
            continue  # triangles are never creators
        birth = float(values[i])
        bv = _lex_min_vertex(members[i], vals, values[i], fc.width)
        points.append(DiagramPoint(int(dims[i]), end_value, birth, True, bv, None))

    points.sort(key=lambda p: (p.dim, -p.persistence, p.death, p.birth))
    return PersistenceDiagram(tuple(points))


# ---------------------------------------------------------------------------
# Bottleneck distance
# ---------------------------------------------------------------------------


def _diagonal_gap(pts: np.ndarray) -> np.ndarray:
    """L-infinity distance from each (death, birth) point to the diagonal."""
    if pts.shape[0] == 0:
        return np.zeros(0)
    return np.abs(pts[:, 1] - pts[:, 0]) / 2.0


def _matchable(a: np.ndarray, b: np.ndarray, r: float) -> bool:
    """Is there a diagonal-augmented perfect matching with max move <= r?"""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    na, nb = a.shape[0], b.shape[0]
    size = na + nb
    if size == 0:
        return True
    # Left nodes: a-points then b-ghosts; right nodes: b-points then a-ghosts.
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    if na and nb:
        cost = np.maximum(
            np.abs(a[:, None, 0] - b[None, :, 0]), np.abs(a[:, None, 1] - b[None, :, 1])
        )
        ij = np.argwhere(cost <= r)
        rows.append(ij[:, 0])
        cols.append(ij[:, 1])
    ga = _diagonal_gap(a) <= r
    rows.append(np.nonzero(ga)[0])
    cols.append(nb + np.nonzero(ga)[0])
    gb = _diagonal_gap(b) <= r
    rows.append(na + np.nonzero(gb)[0])
    cols.append(np.nonzero(gb)[0])
    # ghost-to-ghost pairings are always allowed
    gg_r, gg_c = np.meshgrid(np.arange(nb), np.arange(na), indexing="ij")
    rows.append(na + gg_r.ravel())
    cols.append(nb + gg_c.ravel())

    row = np.concatenate(rows)
    col = np.concatenate(cols)
    graph = coo_matrix((np.ones(row.shape[0], dtype=np.int8), (row, col)), shape=(size, size))
    match = maximum_bipartite_matching(graph.tocsr(), perm_type="column")
    return int((match >= 0).sum()) == size


def bottleneck_distance(a: PersistenceDiagram, b: PersistenceDiagram, dim: int) -> float:
    """Exact bottleneck distance between the dim-d points of two diagrams.

    Essential points are excluded from the matching.  Returns 0 when neither
    diagram has points of the requested dimension.
    """
    pa = np.array(
        [(p.death, p.birth) for p in a.in_dim(dim, include_essential=False)], dtype=np.float64
    ).reshape(-1, 2)
    pb = np.array(
        [(p.death, p.birth) for p in b.in_dim(dim, include_essential=False)], dtype=np.float64
    ).reshape(-1, 2)
    if pa.shape[0] == 0 and pb.shape[0] == 0:
        return 0.0

    cands = [_diagonal_gap(pa), _diagonal_gap(pb)]
    if pa.shape[0] and pb.shape[0]:
        cands.append(
            np.maximum(
                np.abs(pa[:, None, 0] - pb[None, :, 0]), np.abs(pa[:, None, 1] - pb[None, :, 1])
            ).ravel()
        )
    candidates = np.unique(np.concatenate(cands))

    lo, hi = 0, candidates.shape[0] - 1
    if _matchable(pa, pb, float(candidates[lo])):
        return float(candidates[lo])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _matchable(pa, pb, float(candidates[mid])):
            hi = mid
        else:
            lo = mid
    return float(candidates[hi])


# ---------------------------------------------------------------------------
# Diagram CSV
# ---------------------------------------------------------------------------

_CSV_HEADER = "dim,death,birth,essential,birth_x,birth_y,death_x,death_y"


def save_diagram(diagram: PersistenceDiagram, path) -> None:
    with open(path, "w") as fh:
        fh.write(_CSV_HEADER + "\n")
        for p in diagram.points:
            dv = ("", "") if p.death_vertex is None else (str(p.death_vertex[0]), str(p.death_vertex[1]))
            fh.write(
                f"{p.dim},{p.death:.17g},{p.birth:.17g},{int(p.essential)},"
                f"{p.birth_vertex[0]},{p.birth_vertex[1]},{dv[0]},{dv[1]}\n"
            )


def load_diagram(path) -> PersistenceDiagram:
    points = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != _CSV_HEADER:
            raise ValueError(f"{path}: unexpected diagram header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            dv = None
            if cells[6] != "" and cells[7] != "":
                dv = (int(cells[6]), int(cells[7]))
            points.append(
                DiagramPoint(
                    dim=int(cells[0]),
                    death=float(cells[1]),
                    birth=float(cells[2]),
                    essential=bool(int(cells[3])),
                    birth_vertex=(int(cells[4]), int(cells[5])),
                    death_vertex=dv,
                )
            )
    return PersistenceDiagram(tuple(points))
