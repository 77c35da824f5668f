"""Lattice occupancy, complement faces, disconnection and annulus crossings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .sim import Walk

MARGIN = 2


@dataclass(eq=False)
class PathOccupancy:
    """Visited vertices and traversed unit edges of a lattice path.

    ``edges`` rows are (x, y, o): o=0 is (x, y)-(x+1, y), o=1 is (x, y)-(x, y+1).
    ``bbox`` is (xmin, ymin, xmax, ymax) of the vertex box, margin included.
    ``cells`` lists filled unit faces by lower-left corner (used by sausages);
    ``refine`` is the number of lattice units per original unit.
    """
    vertices: np.ndarray
    edges: np.ndarray
    bbox: tuple[int, int, int, int]
    cells: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    refine: int = 1

    @property
    def vertex_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.vertices}

    @property
    def edge_set(self) -> set[tuple[tuple[int, int], tuple[int, int]]]:
        out = set()
        for x, y, o in self.edges:
            x, y = int(x), int(y)
            out.add(((x, y), (x + 1, y) if o == 0 else (x, y + 1)))
        return out

    @property
    def area(self) -> float:
        """Area of the filled cells in original lattice units."""
        return len(self.cells) / self.refine**2


def _bbox(vertices: np.ndarray, margin: int = MARGIN) -> tuple[int, int, int, int]:
    lo = vertices.min(axis=0) - margin
    hi = vertices.max(axis=0) + margin
    return int(lo[0]), int(lo[1]), int(hi[0]), int(hi[1])


def edges_of_path(vertices: np.ndarray) -> np.ndarray:
    """Unique (x, y, o) rows of the unit edges along a vertex path."""
    v = np.asarray(vertices, dtype=np.int64)
    if len(v) < 2:
        return np.zeros((0, 3), dtype=np.int64)
    a, b = v[:-1], v[1:]
    lo = np.minimum(a, b)
    o = (a[:, 0] == b[:, 0]).astype(np.int64)
    return np.unique(np.column_stack([lo, o]), axis=0)


def build_occupancy(walk: Walk | np.ndarray, margin: int = MARGIN) -> PathOccupancy:
    verts = walk.vertices if isinstance(walk, Walk) else np.asarray(walk, dtype=np.int64)
    if len(verts) == 0:
        raise ValueError("walk must be nonempty")
    return PathOccupancy(np.unique(verts, axis=0), edges_of_path(verts), _bbox(verts, margin))


def union_occupancy(*occs: PathOccupancy) -> PathOccupancy:
    verts = np.unique(np.concatenate([o.vertices for o in occs]), axis=0)
    edges = np.unique(np.concatenate([o.edges for o in occs]), axis=0)
    cells = np.unique(np.concatenate([o.cells for o in occs]), axis=0)
    bb = np.array([o.bbox for o in occs])
    bbox = (int(bb[:, 0].min()), int(bb[:, 1].min()), int(bb[:, 2].max()), int(bb[:, 3].max()))
    return PathOccupancy(verts, edges, bbox, cells, occs[0].refine)


@dataclass(eq=False)
class FaceLabeling:
    """Component labels of the unit faces inside a bounding box.

    labels[i - x0, j - y0] is the label of face [i, i+1] x [j, j+1]; filled
    cells carry -1.
    """
    labels: np.ndarray
    origin: tuple[int, int]
    unbounded_id: int

    def label_of(self, i: int, j: int) -> int:
        return int(self.labels[i - self.origin[0], j - self.origin[1]])

    def in_range(self, i: int, j: int) -> bool:
        a, b = i - self.origin[0], j - self.origin[1]
        return 0 <= a < self.labels.shape[0] and 0 <= b < self.labels.shape[1]

    @property
    def n_components(self) -> int:
        return len(np.unique(self.labels[self.labels >= 0]))


def _edge_grids(occ: PathOccupancy):
    x0, y0, x1, y1 = occ.bbox
    nx, ny = x1 - x0, y1 - y0
    horiz = np.zeros((nx + 1, ny + 1), dtype=bool)
    vert = np.zeros((nx + 1, ny + 1), dtype=bool)
    e = occ.edges
    if len(e):
        h = e[e[:, 2] == 0]
        v = e[e[:, 2] == 1]
        horiz[h[:, 0] - x0, h[:, 1] - y0] = True
        vert[v[:, 0] - x0, v[:, 1] - y0] = True
    return horiz, vert


def face_components(occ: PathOccupancy) -> FaceLabeling:
    x0, y0, x1, y1 = occ.bbox
    nx, ny = x1 - x0, y1 - y0
    horiz, vert = _edge_grids(occ)
    filled = np.zeros((nx, ny), dtype=bool)
    if len(occ.cells):
        filled[occ.cells[:, 0] - x0, occ.cells[:, 1] - y0] = True
    idx = np.arange(nx * ny).reshape(nx, ny)
    # face (i, j) -- (i+1, j) across the vertical edge at x = i+1
    open_x = ~vert[1:nx, :ny] & ~filled[:-1] & ~filled[1:]
    open_y = ~horiz[:nx, 1:ny] & ~filled[:, :-1] & ~filled[:, 1:]
    rows = np.concatenate([idx[:-1][open_x], idx[:, :-1][open_y]])
    cols = np.concatenate([idx[1:][open_x], idx[:, 1:][open_y]])
    graph = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(nx * ny, nx * ny))
    _, lab = connected_components(graph, directed=False)
    labels = lab.reshape(nx, ny).astype(np.int64)
    labels[filled] = -1
    return FaceLabeling(labels, (x0, y0), int(labels[0, 0]))


# ------------------------------------------------------------------ regions

@dataclass(frozen=True)
class Region:
    """Planar region in lattice units.

    kinds: "disk" (cx, cy, r) open disk; "point" (x, y) a single vertex;
    "annulus" (cx, cy, r, R) open annulus; "box" (x0, y0, x1, y1) closed box.
    """
    kind: str
    params: tuple

    @staticmethod
    def disk(center, r: float) -> "Region":
        return Region("disk", (float(center[0]), float(center[1]), float(r)))

    @staticmethod
    def point(v) -> "Region":
        return Region("point", (int(v[0]), int(v[1])))

    @staticmethod
    def annulus(center, r: float, R: float) -> "Region":
        if not 0 < r < R:
            raise ValueError("annulus needs 0 < r < R")
        return Region("annulus", (float(center[0]), float(center[1]), float(r), float(R)))

    @staticmethod
    def box(x0, y0, x1, y1) -> "Region":
        return Region("box", (float(x0), float(y0), float(x1), float(y1)))

    def contains(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "disk":
            cx, cy, r = self.params
            return (p[:, 0] - cx) ** 2 + (p[:, 1] - cy) ** 2 < r * r
        if self.kind == "point":
            return (p[:, 0] == self.params[0]) & (p[:, 1] == self.params[1])
        if self.kind == "annulus":
            cx, cy, r, R = self.params
            d2 = (p[:, 0] - cx) ** 2 + (p[:, 1] - cy) ** 2
            return (d2 > r * r) & (d2 < R * R)
        if self.kind == "box":
            x0, y0, x1, y1 = self.params
            return (p[:, 0] >= x0) & (p[:, 0] <= x1) & (p[:, 1] >= y0) & (p[:, 1] <= y1)
        raise ValueError(f"unknown region kind {self.kind!r}")

    def extent(self) -> tuple[float, float, float, float]:
        k, q = self.kind, self.params
        if k == "point":
            return q[0], q[1], q[0], q[1]
        if k == "disk":
            return q[0] - q[2], q[1] - q[2], q[0] + q[2], q[1] + q[2]
        if k == "annulus":
            return q[0] - q[3], q[1] - q[3], q[0] + q[3], q[1] + q[3]
        return q

    def faces(self) -> np.ndarray:
        """Unit faces (lower-left corners) meeting the region.

        Open regions count faces whose open square meets them; a point counts
        the four faces having it as a corner.
        """
        if self.kind == "point":
            x, y = self.params
            return np.array([[x - 1, y - 1], [x, y - 1], [x - 1, y], [x, y]], dtype=np.int64)
        ex = self.extent()
        i0, j0 = math.floor(ex[0]) - 1, math.floor(ex[1]) - 1
        i1, j1 = math.ceil(ex[2]) + 1, math.ceil(ex[3]) + 1
        ii, jj = np.meshgrid(np.arange(i0, i1), np.arange(j0, j1), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        if self.kind == "box":
            x0, y0, x1, y1 = self.params
            keep = (ii < x1) & (ii + 1 > x0) & (jj < y1) & (jj + 1 > y0)
        else:
            cx, cy = self.params[0], self.params[1]
            dx = np.maximum.reduce([ii - cx, np.zeros_like(ii, dtype=float), cx - (ii + 1)])
            dy = np.maximum.reduce([jj - cy, np.zeros_like(jj, dtype=float), cy - (jj + 1)])
            near = dx * dx + dy * dy
            if self.kind == "disk":
                keep = near < self.params[2] ** 2
            else:
                fx = np.maximum(np.abs(ii - cx), np.abs(ii + 1 - cx))
                fy = np.maximum(np.abs(jj - cy), np.abs(jj + 1 - cy))
                far = fx * fx + fy * fy
                keep = (near < self.params[3] ** 2) & (far > self.params[2] ** 2)
        return np.column_stack([ii[keep], jj[keep]]).astype(np.int64)


def disconnects(occ: PathOccupancy, inner: Region, labeling: FaceLabeling | None = None) -> bool:
    """True iff occ separates the region from infinity."""
    lab = face_components(occ) if labeling is None else labeling
    faces = inner.faces()
    x0, y0, x1, y1 = occ.bbox
    if (faces[:, 0].min() < x0 + 1 or faces[:, 1].min() < y0 + 1
            or faces[:, 0].max() > x1 - 2 or faces[:, 1].max() > y1 - 2):
        raise ValueError("region is not inside the bounding box interior")
    got = lab.labels[faces[:, 0] - x0, faces[:, 1] - y0]
    return not bool(np.any(got == lab.unbounded_id))


# ------------------------------------------------------------------ sausages

def _segments_of(occ: PathOccupancy) -> tuple[np.ndarray, np.ndarray]:
    e = occ.edges
    a = e[:, :2].astype(float)
    b = a + np.column_stack([e[:, 2] == 0, e[:, 2] == 1]).astype(float)
    return a, b


def _dist_to_segment(px, py, ax, ay, bx, by):
    ux, uy = bx - ax, by - ay
    L2 = ux * ux + uy * uy
    if L2 == 0:
        return np.hypot(px - ax, py - ay)
    t = np.clip(((px - ax) * ux + (py - ay) * uy) / L2, 0.0, 1.0)
    return np.hypot(px - (ax + t * ux), py - (ay + t * uy))


def sausage_cells(a: np.ndarray, b: np.ndarray, delta: float, q: int) -> np.ndarray:
    """Refined cells (lower-left corners, 1/q units) whose centre lies within
    delta of one of the segments a[k]-b[k] (points when a[k] == b[k])."""
    found = []
    reach = delta + 1e-12
    for (ax, ay), (bx, by) in zip(a, b):
        i0 = math.floor((min(ax, bx) - reach) * q)
        i1 = math.ceil((max(ax, bx) + reach) * q)
        j0 = math.floor((min(ay, by) - reach) * q)
        j1 = math.ceil((max(ay, by) + reach) * q)
        ii, jj = np.meshgrid(np.arange(i0, i1), np.arange(j0, j1), indexing="ij")
        d = _dist_to_segment((ii + 0.5) / q, (jj + 0.5) / q, ax, ay, bx, by)
        keep = d <= reach
        found.append(np.column_stack([ii[keep], jj[keep]]))
    if not found:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(np.concatenate(found), axis=0).astype(np.int64)


def occupancy_from_cells(cells: np.ndarray, q: int) -> PathOccupancy:
    c = np.asarray(cells, dtype=np.int64)
    corners = np.concatenate([c, c + [1, 0], c + [0, 1], c + [1, 1]])
    edges = np.concatenate([
        np.column_stack([c, np.zeros(len(c), dtype=np.int64)]),
        np.column_stack([c + [0, 1], np.zeros(len(c), dtype=np.int64)]),
        np.column_stack([c, np.ones(len(c), dtype=np.int64)]),
        np.column_stack([c + [1, 0], np.ones(len(c), dtype=np.int64)]),
    ])
    return PathOccupancy(np.unique(corners, axis=0), np.unique(edges, axis=0),
                         _bbox(corners), c, q)


def sausage_dilate(occ: PathOccupancy, delta: float, refine: int) -> PathOccupancy:
    """Rasterized closed delta-neighbourhood of the edge union on the
    refine-times finer lattice (cells whose centre is within delta)."""
    q = int(refine)
    if q < 2:
        raise ValueError("refine must be at least 2")
    if delta < 1.0 / q - 1e-12:
        raise ValueError("delta must be at least 1/refine")
    if len(occ.edges):
        a, b = _segments_of(occ)
    else:
        a = b = occ.vertices.astype(float)
    return occupancy_from_cells(sausage_cells(a, b, delta, q), q)


# ------------------------------------------------------------------ thickening

@dataclass(eq=False)
class RegionUnion:
    """Union of closed radius-neighbourhoods of polylines, plus a base path."""
    pieces: list[tuple[np.ndarray, float]]
    base: np.ndarray

    def contains(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        out = _polyline_dist(p, self.base) <= 1e-12
        for poly, rad in self.pieces:
            out |= _polyline_dist(p, poly) <= rad
        return out


def _polyline_dist(p: np.ndarray, poly: np.ndarray) -> np.ndarray:
    poly = np.asarray(poly, dtype=float)
    if len(poly) == 1:
        return np.hypot(p[:, 0] - poly[0, 0], p[:, 1] - poly[0, 1])
    best = np.full(len(p), np.inf)
    for k in range(len(poly) - 1):
        d = _dist_to_segment(p[:, 0], p[:, 1], poly[k, 0], poly[k, 1], poly[k + 1, 0], poly[k + 1, 1])
        np.minimum(best, d, out=best)
    return best


def first_hit_index(vertices: np.ndarray, radius: float, center=(0.0, 0.0)) -> int | None:
    d2 = ((vertices - np.asarray(center, dtype=float)) ** 2).sum(axis=1)
    hit = np.flatnonzero(d2 >= radius * radius)
    return int(hit[0]) if hit.size else None


def thicken(walk: Walk, r1: float, r2: float, rule=None) -> RegionUnion:
    """Multi-scale thickening over integer scales r in [r1, r2].

    Scale r covers the walk piece between its first hits of radii 2^(r-1)
    and 2^r, thickened by rule(r) (default 2^(15 r / 16)).
    """
    if r1 > r2:
        raise ValueError("need r1 <= r2")
    rule = rule or (lambda r: 2.0 ** (15.0 * r / 16.0))
    verts = walk.vertices
    pieces = []
    for r in range(math.ceil(r1), math.floor(r2) + 1):
        a = first_hit_index(verts, 2.0 ** (r - 1))
        b = first_hit_index(verts, 2.0**r)
        if a is None or b is None:
            raise ValueError(f"walk never reaches radius 2^{r}")
        pieces.append((verts[a:b + 1].astype(float), float(rule(r))))
    return RegionUnion(pieces, verts.astype(float))


# ------------------------------------------------------------------ annuli

@dataclass(frozen=True)
class AnnulusSpec:
    center: tuple[float, float]
    r: float
    R: float

    def __post_init__(self):
        if not 0 < self.r < self.R:
            raise ValueError("annulus needs 0 < r < R")


def _boundary_events(path: np.ndarray, ann: AnnulusSpec):
    """Yield (vertex position, label) with label 'I' (|p-c| <= r) or 'O'
    (|p-c| >= R), in path order; interior dips are placed at i + 0.5."""
    c = np.asarray(ann.center, dtype=float)
    p = np.asarray(path, dtype=float) - c
    d2 = (p * p).sum(axis=1)
    r2, R2 = ann.r**2, ann.R**2
    for i in range(len(p)):
        if d2[i] <= r2:
            yield float(i), "I"
        elif d2[i] >= R2:
            yield float(i), "O"
        if i + 1 < len(p):
            u = p[i + 1] - p[i]
            a = float(u @ u)
            if a == 0:
                continue
            t = -float(p[i] @ u) / a
            if 0 < t < 1:
                m = p[i] + t * u
                if m @ m <= r2:
                    yield i + t, "I"


def crossing_segments(path, annulus: AnnulusSpec) -> list[tuple[int, int]]:
    """Index intervals [i, j] of the path's traversals between the two
    boundary circles; consecutive boundary touches on opposite circles
    delimit one traversal."""
    out = []
    last_pos, last_lab = None, None
    for pos, lab in _boundary_events(path, annulus):
        if last_lab is not None and lab != last_lab:
            out.append((int(math.floor(last_pos)), int(math.ceil(pos))))
        last_pos, last_lab = pos, lab
    return out


def center_distances(vertices: np.ndarray, center) -> tuple[np.ndarray, np.ndarray]:
    """Squared distance of each vertex to center, and of its nearest lattice neighbour."""
    v = vertices.astype(float) - np.asarray(center, dtype=float)
    d2 = (v * v).sum(axis=1)
    return d2, d2 + 1 - 2 * np.abs(v).max(axis=1)


def _boundary_masks(dist, radii) -> list[np.ndarray]:
    d2, near2 = dist
    return [(d2 >= r * r) & (near2 < r * r) for r in radii]


def discrete_boundary_mask(vertices: np.ndarray, center, radius: float) -> np.ndarray:
    """Vertices outside B(center, radius) with a lattice neighbour inside it."""
    return _boundary_masks(center_distances(vertices, center), [radius])[0]


def _next_hit(mask: np.ndarray, after: int) -> int | None:
    idx = np.flatnonzero(mask[after + 1:])
    return after + 1 + int(idx[0]) if idx.size else None


def four_arm_times(vertices: np.ndarray, center, r: float, R: float, core: float | None = None,
                   dist=None):
    """Stopping times (tau_1..tau_8) of the four-arm construction, or None.

    ``dist`` is ``center_distances(vertices, center)`` when already computed.
    """
    if not r < R:
        raise ValueError("need r < R")
    core = max(1.0, r // 2) if core is None else core
    if dist is None:
        dist = center_distances(vertices, center)
    outer, inner, small = _boundary_masks(dist, [R, r, core])
    seq = [outer, inner, small, inner, outer, outer, outer, inner, small, inner, outer]
    times = []
    t = -1
    for m in seq:
        t = _next_hit(m, t)
        if t is None:
            return None
        times.append(t)
    t1, t2, _, t3, t4, _, t5, t6, _, t7, t8 = times
    return t1, t2, t3, t4, t5, t6, t7, t8


def extract_four_arms(walk: Walk, center, r: float, R: float, core: float | None = None):
    """The arms l1..l4 as vertex arrays, or None when a stopping time is infinite."""
    verts = walk.vertices
    t = four_arm_times(verts, center, r, R, core)
    if t is None:
        return None
    return [verts[t[0]:t[1] + 1], verts[t[2]:t[3] + 1], verts[t[4]:t[5] + 1], verts[t[6]:t[7] + 1]]


def _arm_keys(arm: np.ndarray, edges: bool) -> np.ndarray:
    a = edges_of_path(arm) if edges else np.asarray(arm)
    a = a.astype(np.int64)
    key = (a[:, 0] << 32) + ((a[:, 1] + 2**30) << 1)
    if edges:
        key += a[:, 2]
    return np.unique(key)


def bad_disk_event(arms, edge_disjoint: bool = False) -> bool:
    """Whether the arms split into two pairs with disjoint unions."""
    if arms is None:
        return False
    if len(arms) != 4:
        raise ValueError("need four arms")
    keys = [_arm_keys(a, edge_disjoint) for a in arms]
    # the three ways to split four arms into two pairs
    for j in (1, 2, 3):
        k, m = (i for i in (1, 2, 3) if i != j)
        left = np.union1d(keys[0], keys[j])
        if not np.intersect1d(left, np.union1d(keys[k], keys[m]), assume_unique=True).size:
            return True
    return False
